#include <gtest/gtest.h>

#include "support.hpp"
#include "visca/classify.hpp"
#include "visca/mock_provider.hpp"
#include "visca/pipeline.hpp"

using namespace visca;
using nlohmann::json;

namespace {

vt::OTree leaf(const std::string& l) { return {l, {}}; }
vt::OTree node(const std::string& l, std::vector<vt::OTree> kids) { return {l, std::move(kids)}; }

// Scripted classes by segment id; unknown ids are Components.
std::shared_ptr<vt::ScriptedProvider> classes(std::map<std::string, std::string> by_id) {
    return std::make_shared<vt::ScriptedProvider>([by_id](const json& in) -> json {
        const auto id = in.value("segment_id", std::string{});
        const auto it = by_id.find(id);
        return {{"class", it == by_id.end() ? "Component" : it->second}, {"title", "T " + id}, {"context", "C " + id}};
    });
}

struct Fixture {
    PageSnapshot page;
    NodeTree tree;
    CandidateHierarchy hierarchy;

    explicit Fixture(const vt::OTree& t) : page(vt::page_from_tree(t)), tree(build_visible_hierarchy(page)) {
        hierarchy = build_candidate_hierarchy(tree, {*tree.root()});
    }
};

std::size_t segments(const ClassifiedSegment& root) {
    std::size_t n = 0;
    for_each_segment(root, [&](const ClassifiedSegment&, int) { ++n; });
    return n;
}

}  // namespace

TEST(ClassifyTree, RootComponentMakesOneCall) {
    Fixture f(node("div", {leaf("a"), leaf("b")}));
    auto p = classes({});
    llm::Gateway gw(p);
    const auto root = classify_tree(f.page, f.hierarchy, *f.hierarchy.tree.root(), "page", gw);
    EXPECT_EQ(p->count("classify_segment"), 1u);
    EXPECT_EQ(root.cls, SegmentClass::Component);
    EXPECT_TRUE(root.children.empty());
}

TEST(ClassifyTree, ContainerWithTwoChildrenMakesThreeCalls) {
    Fixture f(node("div", {node("nav", {leaf("a")}), node("main", {leaf("p")})}));
    auto p = classes({{"n0", "Container"}});
    llm::Gateway gw(p);
    const auto root = classify_tree(f.page, f.hierarchy, *f.hierarchy.tree.root(), "page", gw);
    EXPECT_EQ(p->count("classify_segment"), 3u);
    ASSERT_EQ(root.children.size(), 2u);
    EXPECT_EQ(root.children[0].cls, SegmentClass::Component);
}

TEST(ClassifyTree, ListChildrenNeedNoCalls) {
    const auto item = node("li", {leaf("img"), leaf("a")});
    Fixture f(node("ul", {item, item, item, item}));
    auto p = classes({{"n0", "List"}, {"n1", "Container"}, {"n4", "List"}});
    llm::Gateway gw(p);
    const auto root = classify_tree(f.page, f.hierarchy, *f.hierarchy.tree.root(), "page", gw);
    EXPECT_EQ(p->count("classify_segment"), 1u);
    ASSERT_EQ(root.children.size(), 4u);
    for (const auto& c : root.children) {
        EXPECT_EQ(c.cls, SegmentClass::Component);
        EXPECT_EQ(c.source, ClassSource::list_child);
        EXPECT_EQ(c.ctx.title, "T n0 item");
        EXPECT_TRUE(c.children.empty());
    }
}

TEST(ClassifyTree, ContextsFlowTopDown) {
    Fixture f(node("div", {node("section", {node("div", {leaf("a")}), leaf("b")}), leaf("c")}));
    auto p = classes({{"n0", "Container"}, {"n1", "Container"}});
    llm::Gateway gw(p);
    classify_tree(f.page, f.hierarchy, *f.hierarchy.tree.root(), "the page", gw);
    const auto inputs = p->inputs();
    ASSERT_EQ(inputs.size(), 5u);
    std::vector<std::string> order;
    for (const auto& in : inputs) order.push_back(in.at("segment_id"));
    EXPECT_EQ(order, (std::vector<std::string>{"n0", "n1", "n2", "n4", "n5"}));
    // n2 sees both ancestors' contexts, outermost first.
    const auto& anc = inputs[2].at("ancestors");
    ASSERT_EQ(anc.size(), 2u);
    EXPECT_EQ(anc[0].at("title"), "T n0");
    EXPECT_EQ(anc[1].at("title"), "T n1");
    EXPECT_EQ(inputs[2].at("page_context"), "the page");
}

TEST(ClassifyTree, DepthCapForcesComponent) {
    vt::OTree chain = leaf("p");
    for (int i = 0; i < 9; ++i) chain = node("div", {chain, leaf("span")});
    Fixture f(chain);
    auto p = std::make_shared<vt::ScriptedProvider>([](const json&) -> json {
        return {{"class", "Container"}, {"title", "t"}, {"context", "c"}};
    });
    llm::Gateway gw(p);
    ClassifyOptions opts;
    opts.max_depth = 3;
    const auto root = classify_tree(f.page, f.hierarchy, *f.hierarchy.tree.root(), "page", gw, opts);
    int deepest = 0;
    for_each_segment(root, [&](const ClassifiedSegment& s, int depth) {
        deepest = std::max(deepest, depth);
        if (depth == 3) {
            EXPECT_EQ(s.cls, SegmentClass::Component);
            if (!f.hierarchy.tree.is_leaf(s.node)) EXPECT_EQ(s.source, ClassSource::depth_cap);
        }
    });
    EXPECT_EQ(deepest, 3);
}

TEST(ClassifyTree, BadReplyFallsBackToContainer) {
    Fixture f(node("div", {leaf("a"), leaf("b")}));
    auto p = std::make_shared<vt::ScriptedProvider>([](const json& in) -> json {
        if (in.value("segment_id", "") == "n0") return {{"class", "Widget"}};
        return {{"class", "Component"}, {"title", "x"}, {"context", "y"}};
    });
    llm::Gateway gw(p);
    const auto root = classify_tree(f.page, f.hierarchy, *f.hierarchy.tree.root(), "page", gw);
    EXPECT_EQ(root.cls, SegmentClass::Container);
    EXPECT_EQ(root.source, ClassSource::fallback);
    EXPECT_FALSE(root.error.empty());
    EXPECT_EQ(root.ctx.title, "div segment");
    EXPECT_EQ(root.children.size(), 2u);
}

TEST(ClassifyTree, UnparseableReplyIsClassificationError) {
    Fixture f(leaf("div"));
    auto p = std::make_shared<vt::ScriptedProvider>([](const json&) -> json { return "not json at all {"; });
    llm::Gateway gw(p);
    EXPECT_THROW(classify_segment(f.page, f.hierarchy, *f.hierarchy.tree.root(), "page", {}, gw), ClassificationError);
}

TEST(CandidateHierarchy, RolesAndSkippedChains) {
    // r(n0) -> w(n1) -> x(n2) -> {c(n3) -> a, c(n5) -> a};  r -> g(n7)
    const auto item = node("c", {leaf("a")});
    Fixture f(node("r", {node("w", {node("x", {item, item})}), leaf("g")}));
    const auto& t = f.tree;
    const auto h = build_candidate_hierarchy(t, {*t.find("n3"), *t.find("n5")});
    const auto r = *h.tree.root();
    EXPECT_EQ(h.tree.id(r), "n0");
    EXPECT_EQ(h.role[r], SegmentRole::structural);
    // w has a single child and is skipped, so x hangs off the root.
    EXPECT_FALSE(h.tree.contains(*t.find("n1")));
    std::vector<std::string> kids;
    for (NodeIndex c : h.tree.children(r)) kids.push_back(h.tree.id(c));
    EXPECT_EQ(kids, (std::vector<std::string>{"n2", "n7"}));
    EXPECT_EQ(h.role[*t.find("n2")], SegmentRole::structural);
    EXPECT_EQ(h.role[*t.find("n3")], SegmentRole::candidate);
    EXPECT_EQ(h.role[*t.find("n4")], SegmentRole::inner);
    EXPECT_EQ(h.role[*t.find("n7")], SegmentRole::gap);
}

TEST(DescribePage, MockMentionsCart) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    llm::Gateway gw(std::make_shared<llm::MockProvider>());
    const auto text = describe_page(s, gw);
    EXPECT_NE(text.find("Cart"), std::string::npos);
    EXPECT_NE(text.find("Shopping Cart"), std::string::npos);
}

TEST(DescribePage, BlankScreenshot) {
    auto page = vt::page_from_tree(leaf("div"));
    const PageSnapshot blank(page.url(), page.viewport(), page.nodes(), page.page_html(), RgbImage(64, 64));
    llm::Gateway gw(std::make_shared<llm::MockProvider>());
    EXPECT_EQ(describe_page(blank, gw), "Unknown page");
}

TEST(MockClassify, Rules) {
    const auto same = json::array({{{"tag", "li"}, {"shape", "li(a())"}, {"leaf", false}},
                                   {{"tag", "li"}, {"shape", "li(a())"}, {"leaf", false}},
                                   {{"tag", "li"}, {"shape", "li(a())"}, {"leaf", false}}});
    EXPECT_EQ(llm::MockProvider::classify_segment({{"children", same}, {"html", "<ul></ul>"}})["class"], "List");
    const auto mixed = json::array({{{"tag", "nav"}, {"shape", "nav(a())"}, {"leaf", false}},
                                    {{"tag", "main"}, {"shape", "main()"}, {"leaf", true}}});
    EXPECT_EQ(llm::MockProvider::classify_segment({{"children", mixed}, {"html", "<div></div>"}})["class"], "Container");
    const auto card = llm::MockProvider::classify_segment(
        {{"children", json::array()}, {"html", "<li><a>Short</a><span>The longest text here</span></li>"}});
    EXPECT_EQ(card["class"], "Component");
    EXPECT_EQ(card["title"], "The longest text here");
}

TEST(ClassifyInvariants, MockOnFixturesAndRandomPages) {
    std::vector<PageSnapshot> pages = {load_snapshot(vt::fixtures_dir() / "mini-cart"),
                                       load_snapshot(vt::fixtures_dir() / "login-form")};
    std::mt19937 rng(3);
    for (int i = 0; i < 30; ++i) {
        pages.push_back(vt::page_from_tree(vt::random_otree(rng, 25, {"div", "ul", "li", "a", "span"})));
    }
    for (const auto& page : pages) {
        auto mock = std::make_shared<llm::MockProvider>();
        llm::Gateway gw(mock);
        const auto seg = run_segmentation(page, {});
        const LoadedSegments loaded{seg.pruned, seg.segmentation.candidates};
        const auto result = run_classification(page, loaded, gw, {});
        std::size_t list_children = 0;
        for_each_segment(result.root, [&](const ClassifiedSegment& s, int) {
            if (s.cls == SegmentClass::List) {
                for (const auto& c : s.children) {
                    EXPECT_EQ(c.cls, SegmentClass::Component);
                    ++list_children;
                }
            }
            if (s.source == ClassSource::list_child) EXPECT_TRUE(s.children.empty());
        });
        EXPECT_EQ(mock->call_count("classify_segment"), segments(result.root) - list_children);
        EXPECT_EQ(mock->call_count("describe_page"), 1u);
    }
}

TEST(ClassifiedJson, RoundTrip) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    llm::Gateway gw(std::make_shared<llm::MockProvider>());
    const auto seg = run_segmentation(s, {});
    const auto result = run_classification(s, {seg.pruned, seg.segmentation.candidates}, gw, {});
    const auto j = to_json(result.root, s, result.page_context);
    const auto back = classification_from_json(j, s);
    EXPECT_EQ(back.page_context, result.page_context);
    EXPECT_EQ(to_json(back.root, s, back.page_context), j);
    EXPECT_THROW(classification_from_json(json::object(), s), InputError);
}
