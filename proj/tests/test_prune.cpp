#include <gtest/gtest.h>

#include "support.hpp"
#include "visca/errors.hpp"
#include "visca/prune.hpp"

using namespace visca;

TEST(Prune, ConstructedSuite) {
    const auto cases = vt::prune_suite();
    ASSERT_EQ(cases.size(), 20u);
    for (const auto& c : cases) {
        EXPECT_EQ(redundancy_rule(c.parent, c.child, c.offset), c.expected) << c.name;
    }
}

TEST(Prune, CompareExact) {
    const auto a = vt::patterned(8, 8, 1);
    EXPECT_TRUE(compare_exact(a, a));
    EXPECT_FALSE(compare_exact(a, vt::patterned(8, 7, 1)));
    auto b = a;
    auto px = b.at(0, 0);
    px.b = static_cast<std::uint8_t>(px.b + 3);
    b.set(0, 0, px);
    EXPECT_FALSE(compare_exact(a, b));
    EXPECT_TRUE(compare_exact(a, b, {3, 0.95}));
}

TEST(Prune, PaddingGeometry) {
    const auto c = vt::patterned(10, 10, 1);
    EXPECT_THROW(compare_padding(vt::padded(c, 0), c, {11, 5}), GeometryError);
    EXPECT_THROW(compare_padding(vt::padded(c, 0), c, {-1, 0}), GeometryError);
    EXPECT_TRUE(compare_padding(c, c, {0, 0}));  // vacuous residual
    EXPECT_THROW(compare_shift(c, vt::padded(c, 0)), GeometryError);
    EXPECT_TRUE(compare_shift(c, c));
}

TEST(Prune, ResidualUniformity) {
    const auto c = vt::patterned(10, 10, 1);
    EXPECT_DOUBLE_EQ(residual_uniformity(vt::padded(c, 15), {5, 5, 10, 10}), 285.0 / 300.0);
    EXPECT_DOUBLE_EQ(residual_uniformity(c, {0, 0, 10, 10}), 1.0);
}

namespace {

// Three-node chain with identical renderings; `grandkids` leaves under C.
PageSnapshot chain_page(int grandkids) {
    std::vector<NodeRecord> nodes;
    auto add = [&](std::string id, std::optional<std::string> parent, Rect box) {
        NodeRecord n;
        n.id = std::move(id);
        n.parent_id = std::move(parent);
        n.tag = "div";
        n.bbox = box;
        n.visible = true;
        nodes.push_back(n);
    };
    add("A", std::nullopt, {0, 0, 40, 40});
    add("B", "A", {0, 0, 40, 40});
    add("C", "B", {0, 0, 40, 40});
    RgbImage img(40, 40, {255, 255, 255});
    for (int k = 0; k < grandkids; ++k) {
        add("L" + std::to_string(k), "C", {k * 10, 0, 9, 9});
        img.fill_rect({k * 10, 0, 9, 9}, {static_cast<std::uint8_t>(40 * k), 0, 0});
    }
    return PageSnapshot("about:blank", {40, 40}, std::move(nodes), "", std::move(img));
}

}  // namespace

TEST(Prune, ChainCollapsesToTop) {
    const auto page = chain_page(2);
    const auto [tree, report] = prune_redundant(build_visible_hierarchy(page), page);
    EXPECT_EQ(tree.size(), 3u);
    EXPECT_FALSE(tree.find("B"));
    EXPECT_FALSE(tree.find("C"));
    EXPECT_EQ(tree.id(*tree.parent(*tree.find("L1"))), "A");
    EXPECT_EQ(report.pruned_node_ids, (std::vector<std::string>{"B", "C"}));
    EXPECT_EQ(report.after_count, report.before_count - report.pruned_node_ids.size());
}

TEST(Prune, LeafChildIsKept) {
    const auto page = chain_page(0);
    const auto [tree, report] = prune_redundant(build_visible_hierarchy(page), page);
    // B goes, C is a leaf and stays.
    EXPECT_EQ(report.pruned_node_ids, (std::vector<std::string>{"B"}));
    EXPECT_EQ(vt::leaf_ids(tree), (std::vector<std::string>{"C"}));
}

TEST(Prune, MultiChildParentUntouched) {
    std::vector<NodeRecord> nodes(3);
    nodes[0] = {"p", std::nullopt, "div", {}, std::nullopt, {0, 0, 10, 10}, true};
    nodes[1] = {"a", "p", "div", {}, std::nullopt, {0, 0, 10, 10}, true};
    nodes[2] = {"b", "p", "div", {}, std::nullopt, {0, 0, 10, 10}, true};
    const PageSnapshot page("about:blank", {10, 10}, nodes, "", RgbImage(10, 10));
    const auto [tree, report] = prune_redundant(build_visible_hierarchy(page), page);
    EXPECT_TRUE(report.pruned_node_ids.empty());
    EXPECT_EQ(tree.size(), 3u);
}

TEST(Prune, MiniCartWrappers) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    const auto [tree, report] = prune_redundant(build_visible_hierarchy(s), s);
    EXPECT_EQ(report.before_count, 28u);
    EXPECT_EQ(report.after_count, 25u);
    ASSERT_EQ(report.pruned_node_ids, (std::vector<std::string>{"n1", "n3", "n10"}));
    EXPECT_EQ(report.rule_used, (std::vector<PruneRule>{PruneRule::exact, PruneRule::padding, PruneRule::padding}));
    EXPECT_EQ(tree.subtree_size(*tree.root()), 25u);
}

TEST(Prune, RandomTreesIdempotentAndLeafPreserving) {
    std::mt19937 rng(20240611);
    std::size_t pruned_total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto page = vt::random_page(rng, 24);
        const auto tree = build_visible_hierarchy(page);
        const auto [once, r1] = prune_redundant(tree, page);
        const auto [twice, r2] = prune_redundant(once, page);
        ASSERT_TRUE(r2.pruned_node_ids.empty()) << trial;
        ASSERT_EQ(once, twice) << trial;
        ASSERT_EQ(vt::leaf_ids(once), vt::leaf_ids(tree)) << trial;
        ASSERT_EQ(once.root(), tree.root());
        pruned_total += r1.pruned_node_ids.size();
        // Fixpoint: no single-child parent matches its non-leaf child.
        for (NodeIndex p : once.preorder()) {
            if (once.children(p).size() != 1) continue;
            const NodeIndex c = once.children(p).front();
            if (once.is_leaf(c)) continue;
            const auto pb = clamped_box(page, page.node(p));
            const auto cb = clamped_box(page, page.node(c));
            EXPECT_FALSE(redundancy_rule(crop_rendering(page, page.node(p)), crop_rendering(page, page.node(c)),
                                         {cb.x - pb.x, cb.y - pb.y}));
        }
    }
    EXPECT_GT(pruned_total, 50u);  // the generator really exercises pruning
}
