#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "visca/errors.hpp"
#include "visca/html.hpp"
#include "visca/image.hpp"
#include "visca/snapshot.hpp"

using namespace visca;
using nlohmann::json;

namespace {

json minimal_manifest() {
    return {{"url", "about:blank"},
            {"viewport", {{"width", 10}, {"height", 10}}},
            {"nodes", json::array({{{"id", "r"},
                                    {"parent_id", nullptr},
                                    {"tag", "html"},
                                    {"bbox", {{"x", 0}, {"y", 0}, {"w", 10}, {"h", 10}}},
                                    {"visible", true}}})}};
}

json node(const std::string& id, const std::string& parent, bool visible, Rect b = {0, 0, 5, 5}) {
    return {{"id", id},
            {"parent_id", parent},
            {"tag", "div"},
            {"bbox", {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}},
            {"visible", visible}};
}

}  // namespace

TEST(Snapshot, MinimalBundle) {
    const auto s = snapshot_from_json(minimal_manifest(), "<html></html>", RgbImage(10, 10));
    EXPECT_EQ(s.nodes().size(), 1u);
    EXPECT_EQ(s.visible_count(), 1u);
}

TEST(Snapshot, UnknownParentIsInvalid) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("c", "nope", true));
    EXPECT_THROW(snapshot_from_json(m, "", RgbImage(10, 10)), BundleInvalid);
}

TEST(Snapshot, SchemaViolationNamesField) {
    auto m = minimal_manifest();
    m["nodes"][0].erase("visible");
    try {
        snapshot_from_json(m, "", RgbImage(10, 10));
        FAIL();
    } catch (const BundleInvalid& e) {
        EXPECT_EQ(e.field_path(), "nodes[0].visible");
    }
}

TEST(Snapshot, VisibleNodeNeedsArea) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("c", "r", true, {1, 1, 0, 4}));
    EXPECT_THROW(snapshot_from_json(m, "", RgbImage(10, 10)), BundleInvalid);
}

TEST(Snapshot, GeometryOutsideScreenshot) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("c", "r", true, {20, 20, 5, 5}));
    EXPECT_THROW(snapshot_from_json(m, "", RgbImage(10, 10)), BundleInvalid);
}

TEST(Snapshot, MissingFileIsIncomplete) {
    const auto dir = vt::temp_dir("incomplete");
    std::ofstream(dir / "manifest.json") << minimal_manifest().dump();
    EXPECT_THROW(load_snapshot(dir), BundleIncomplete);
    EXPECT_THROW(load_snapshot(dir / "absent"), BundleIncomplete);
}

TEST(Snapshot, SaveLoadRoundTrip) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("c", "r", true, {2, 2, 5, 5}));
    m["nodes"][1]["attrs"] = {{"class", "x"}};
    m["nodes"][1]["text"] = "hi";
    RgbImage img(10, 10, {1, 2, 3});
    img.set(4, 4, {200, 100, 50});
    const auto s = snapshot_from_json(m, "<html><title>T</title></html>", img);
    const auto dir = vt::temp_dir("roundtrip");
    save_snapshot(s, dir);
    EXPECT_EQ(load_snapshot(dir), s);
    EXPECT_EQ(s.page_title(), "T");
}

TEST(Snapshot, MiniCartCounts) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    EXPECT_EQ(s.nodes().size(), 32u);
    EXPECT_EQ(s.visible_count(), 28u);
    EXPECT_EQ(s.page_title(), "Shopping Cart");
}

TEST(VisibleHierarchy, HiddenWrappersRemoved) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    const auto t = build_visible_hierarchy(s);
    EXPECT_EQ(t.size(), 28u);
    // ul sits under a display:contents div, so it hangs off main-inner.
    const auto ul = *t.find("n13");
    EXPECT_EQ(t.id(*t.parent(ul)), "n10");
    EXPECT_FALSE(t.find("n12"));
    EXPECT_FALSE(t.find("n31"));
}

TEST(VisibleHierarchy, NearestVisibleAncestor) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("a", "r", false, {0, 0, 0, 0}));
    m["nodes"].push_back(node("b", "a", true));
    const auto s = snapshot_from_json(m, "", RgbImage(10, 10));
    const auto t = build_visible_hierarchy(s);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.id(*t.parent(*t.find("b"))), "r");
}

TEST(VisibleHierarchy, AllVisibleMirrorsDom) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("a", "r", true));
    m["nodes"].push_back(node("b", "a", true));
    m["nodes"].push_back(node("c", "r", true));
    const auto s = snapshot_from_json(m, "", RgbImage(10, 10));
    const auto t = build_visible_hierarchy(s);
    for (std::size_t i = 1; i < s.nodes().size(); ++i) {
        EXPECT_EQ(t.id(*t.parent(i)), *s.node(i).parent_id);
    }
}

TEST(Crop, FullViewportAndClamp) {
    auto m = minimal_manifest();
    m["nodes"].push_back(node("c", "r", true, {6, 2, 10, 3}));
    m["nodes"].push_back(node("h", "r", false, {0, 0, 0, 0}));
    RgbImage img(10, 10);
    img.set(9, 3, {7, 7, 7});
    const auto s = snapshot_from_json(m, "", img);
    EXPECT_EQ(crop_rendering(s, s.node(0)), img);
    const auto part = crop_rendering(s, s.node(1));
    EXPECT_EQ(part.width(), 4);
    EXPECT_EQ(part.height(), 3);
    EXPECT_EQ(part.at(3, 1), (Rgb{7, 7, 7}));
    EXPECT_THROW(crop_rendering(s, s.node(2)), NotRenderable);
}

TEST(Snippet, MarksHiddenNodes) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    const auto html = html_snippet(s, *s.index_of("n30"));
    EXPECT_NE(html.find("data-visca-id=\"n31\" data-visca-hidden"), std::string::npos);
    const auto doc = html::parse(html);
    EXPECT_EQ(doc.children.at(0).children.at(0).text, "Item removed from cart");
}

TEST(Png, EncodeDecodeRoundTrip) {
    std::mt19937 rng(5);
    RgbImage img(17, 9);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 17; ++x) {
            img.set(x, y, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                           static_cast<std::uint8_t>(rng())});
        }
    }
    const auto bytes = encode_png(img);
    EXPECT_EQ(decode_png(bytes), img);
}

TEST(Html, ParsesTolerantly) {
    const auto doc = html::parse("<!DOCTYPE html><div class=a>x <b>y</b><br>z</p></div><script>if (a<b) {}</script>");
    ASSERT_EQ(doc.children.size(), 2u);
    EXPECT_EQ(doc.children[1].tag, "script");
    EXPECT_TRUE(doc.children[1].children.empty());
    const auto& div = doc.children[0];
    EXPECT_EQ(*div.attr("class"), "a");
    EXPECT_EQ(div.children.size(), 2u);
    EXPECT_EQ(div.children[0].text, "y");
    EXPECT_EQ(html::unescape("&lt;a&gt; &amp; &quot;"), "<a> & \"");
}
