#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "visca/errors.hpp"
#include "visca/mock_provider.hpp"
#include "visca/pipeline.hpp"
#include "visca/selector.hpp"
#include "visca/testgen.hpp"

using namespace visca;
using nlohmann::json;

namespace {

AbstractNode an(std::string tmpl, std::optional<std::string> segment = std::nullopt, std::vector<AbstractNode> kids = {}) {
    AbstractNode n;
    n.template_name = std::move(tmpl);
    n.segment = std::move(segment);
    n.children = std::move(kids);
    return n;
}

FeatureSpec feature(std::string id, std::string source, std::vector<ActionStep> actions) {
    FeatureSpec f;
    f.feature_id = std::move(id);
    f.name = "feature " + f.feature_id;
    f.source_component = std::move(source);
    f.actions = std::move(actions);
    return f;
}

std::vector<CoverageRow> table_rows() {
    std::ifstream in(vt::test_data_dir() / "data" / "table4_rows.json");
    std::vector<CoverageRow> rows;
    for (const auto& r : json::parse(in)) {
        CoverageRow row;
        row.app = r.at("app");
        row.inferred = r.at("inferred");
        row.correct = r.at("correct");
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST(Selectors, UniqueForEveryFixtureNode) {
    for (const char* name : {"mini-cart", "login-form"}) {
        const auto s = load_snapshot(vt::fixtures_dir() / name);
        for (NodeIndex i = 0; i < s.nodes().size(); ++i) {
            const auto sel = css::unique_selector(s, i);
            EXPECT_EQ(css::match(s, sel), std::vector<NodeIndex>{i}) << name << " " << s.node(i).id << " " << sel;
        }
    }
}

TEST(Selectors, ParseAndMatch) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    EXPECT_EQ(css::match(s, "li").size(), 3u);
    EXPECT_EQ(css::match(s, "ul > li:nth-of-type(2)"), std::vector<NodeIndex>{*s.index_of("n19")});
    EXPECT_EQ(css::match(s, "nav a").size(), 2u);
    EXPECT_TRUE(css::match(s, "footer").empty());
    EXPECT_THROW(css::parse("a ~ b"), InputError);
}

TEST(ComponentRoots, DeepestSegmentTaggedNodes) {
    const auto root = an("Container", "n0",
                         {an("Navbar", "n2", {an("Link")}), an("Container", std::nullopt, {an("Card", "n9"), an("Card", "n10")})});
    const auto refs = component_roots(root);
    ASSERT_EQ(refs.size(), 3u);
    EXPECT_EQ(refs[0].node->segment, "n2");
    EXPECT_EQ(refs[2].node->segment, "n10");
    ASSERT_EQ(refs[2].ancestors.size(), 2u);
    EXPECT_EQ(refs[2].ancestors[0]->segment, "n0");
    EXPECT_TRUE(component_roots(an("Image")).empty());
    EXPECT_EQ(component_roots(an("Image", "n1")).size(), 1u);
}

TEST(InferFeatures, ParsesRepliesAndSkipsDecorative) {
    auto p = std::make_shared<vt::ScriptedProvider>([](const json& in) -> json {
        EXPECT_EQ(in.at("page_context"), "ctx");
        return {{"features",
                 {{{"name", "Open item"}, {"actions", {{{"kind", "click"}, {"target", "@n16"}}}}},
                  {{"name", "Bad"}, {"actions", {{{"kind", "teleport"}, {"target", "@n16"}}}}},
                  {{"name", "Empty"}, {"actions", json::array()}}}}};
    });
    llm::Gateway gw(p);
    AbstractionDocument doc{an("Container", "n0", {an("Card", "n14"), an("Divider", "n30"), an("Card", "n19")}), "ctx", {}};
    std::vector<std::string> warnings;
    const auto features = infer_all_features(doc, gw, {}, warnings);
    EXPECT_EQ(p->count("infer_features"), 2u);
    ASSERT_EQ(features.size(), 2u);
    EXPECT_EQ(features[0].feature_id, "f1");
    EXPECT_EQ(features[1].feature_id, "f2");
    EXPECT_EQ(features[1].source_component, "n19");
    EXPECT_EQ(features[0].actions.at(0).kind, ActionKind::click);
    EXPECT_EQ(warnings.size(), 4u);
}

TEST(GenerateTests, ResolvesTargetsAndDropsBadScripts) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    std::vector<FeatureSpec> fs = {
        feature("f1", "n14", {{ActionKind::click, "@n18", std::nullopt}}),
        feature("f2", "n14", {{ActionKind::click, "@nope", std::nullopt}}),
        feature("f3", "n14", {{ActionKind::click, "li", std::nullopt}}),
        feature("f4", "n2", {{ActionKind::type, "@n7", std::nullopt}}),
        feature("f5", "n2", {{ActionKind::type, "@n7", "mouse"}, {ActionKind::click, "@n8", std::nullopt}}),
    };
    const auto suite = generate_tests(fs, s, "mock", "mock");
    ASSERT_EQ(suite.scripts.size(), 2u);
    ASSERT_EQ(suite.dropped.size(), 3u);
    EXPECT_EQ(suite.dropped[0].feature_id, "f2");
    EXPECT_EQ(suite.dropped[1].feature_id, "f3");
    EXPECT_EQ(suite.dropped[2].feature_id, "f4");

    const auto& sc = suite.scripts[0];
    EXPECT_EQ(sc.script_id, "s1");
    ASSERT_EQ(sc.steps.size(), 3u);
    EXPECT_EQ(sc.steps.front().kind, ActionKind::navigate);
    EXPECT_EQ(sc.steps.front().target, s.url());
    EXPECT_EQ(css::match(s, sc.steps[1].target), std::vector<NodeIndex>{*s.index_of("n18")});
    EXPECT_EQ(sc.steps.back().kind, ActionKind::assert_visible);
    EXPECT_EQ(css::match(s, sc.steps.back().target), std::vector<NodeIndex>{*s.index_of("n14")});
    EXPECT_EQ(suite.scripts[1].steps[1].value, "mouse");

    const auto back = suite_from_json(to_json(suite));
    EXPECT_EQ(to_json(back), to_json(suite));
    EXPECT_NE(render_webdriver_script(suite).find("/click\n"), std::string::npos);
}

TEST(GenerateTests, MockSuiteOnMiniCart) {
    const auto s = load_snapshot(vt::fixtures_dir() / "mini-cart");
    llm::Gateway gw(std::make_shared<llm::MockProvider>());
    const auto seg = run_segmentation(s, {});
    const auto cls = run_classification(s, {seg.pruned, seg.segmentation.candidates}, gw, {});
    const auto doc = run_abstraction(s, {cls.root, cls.page_context}, TemplateVocabulary::builtin(), gw, {});
    const auto suite = run_testgen(doc, s, gw, {});
    EXPECT_FALSE(suite.scripts.empty());
    EXPECT_TRUE(suite.dropped.empty());
    for (const auto& sc : suite.scripts) {
        for (const auto& st : sc.steps) {
            if (st.kind != ActionKind::navigate) EXPECT_EQ(css::match(s, st.target).size(), 1u) << st.target;
        }
    }
    std::vector<std::string> names;
    for (const auto& f : suite.features) names.push_back(f.name);
    const auto report = coverage_report(coverage_row(names, load_ground_truth(vt::fixtures_dir() / "mini-cart" / "features.yaml")));
    EXPECT_GT(report.recall, 0.5);
}

TEST(Coverage, KeywordMatching) {
    EXPECT_EQ(tokenize("Log In, then  check-out!"), (std::vector<std::string>{"log", "in", "then", "check", "out"}));
    const TruthFeature search{"Search products", {}};
    EXPECT_DOUBLE_EQ(keyword_overlap("Search for products", search), 1.0);
    EXPECT_DOUBLE_EQ(keyword_overlap("Search the site", search), 0.5);
    EXPECT_DOUBLE_EQ(keyword_overlap("anything", {"", {}}), 0.0);

    GroundTruth gt{"app", {{"Search products", {}}, {"Delete item", {"delete"}}, {"Checkout", {}}}};
    const auto row = coverage_row({"Search for products", "Delete cart item", "Delete all", "Open menu"}, gt);
    EXPECT_EQ(row.inferred, 4u);
    EXPECT_EQ(row.correct, 3u);
    EXPECT_EQ(row.covered, 2u);
    EXPECT_EQ(row.truth_total, 3u);

    MatchOverrides o;
    o.force.push_back({"Open menu", "Checkout"});
    o.reject.push_back({"Delete all", "Delete item"});
    const auto r2 = coverage_row({"Search for products", "Delete cart item", "Delete all", "Open menu"}, gt, o);
    EXPECT_EQ(r2.correct, 3u);
    EXPECT_EQ(r2.covered, 3u);
    const auto rep = coverage_report(r2);
    EXPECT_DOUBLE_EQ(rep.precision, 0.75);
    EXPECT_DOUBLE_EQ(rep.recall, 1.0);
    EXPECT_DOUBLE_EQ(rep.f1, 2 * 0.75 / 1.75);
}

TEST(Coverage, TableRows) {
    const auto rows = table_rows();
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_NEAR(coverage_report(rows[0]).precision, 0.85, 0.005);
    EXPECT_NEAR(coverage_report(rows[0]).precision, 22.0 / 26.0, 1e-12);
    const auto total = combine_rows(rows);
    EXPECT_EQ(total.inferred, 645u);
    EXPECT_EQ(total.correct, 256u);
    EXPECT_NEAR(coverage_report(total).precision, 0.40, 0.005);
    EXPECT_NEAR(coverage_report(total).precision, 256.0 / 645.0, 1e-12);
    // The rounded per-app precisions from the same table.
    const std::vector<double> printed = {0.85, 0.61, 0.32, 0.56, 0.18, 0.58, 0.28, 0.44};
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(coverage_report(rows[i]).precision, printed[i], 0.005) << rows[i].app;
    EXPECT_DOUBLE_EQ(coverage_report(CoverageRow{}).precision, 0.0);
}

TEST(Coverage, GroundTruthYaml) {
    const auto gt = ground_truth_from_yaml("app: demo\nfeatures:\n  - Log in\n  - name: Reset\n    keywords: [forgot, password]\n");
    EXPECT_EQ(gt.app, "demo");
    ASSERT_EQ(gt.features.size(), 2u);
    EXPECT_EQ(gt.features[1].keywords, (std::vector<std::string>{"forgot", "password"}));
    EXPECT_THROW(ground_truth_from_yaml("features: []"), InputError);
    EXPECT_THROW(ground_truth_from_yaml("app: x"), InputError);
    EXPECT_THROW(ground_truth_from_yaml("features: [a, {name: }"), InputError);
    EXPECT_EQ(load_ground_truth(vt::fixtures_dir() / "mini-cart" / "features.yaml").features.size(), 6u);
}
