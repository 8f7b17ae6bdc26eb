#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/abstractor.hpp"
#include "visca/llm.hpp"
#include "visca/snapshot.hpp"

namespace visca {

enum class ActionKind { click, type, select, navigate, assert_visible, assert_text };

std::string to_string(ActionKind k);
std::optional<ActionKind> parse_action_kind(const std::string& s);

struct ActionStep {
    ActionKind kind = ActionKind::click;
    std::string target;  // "@<node id>", CSS selector, or URL for navigate
    std::optional<std::string> value;

    friend bool operator==(const ActionStep&, const ActionStep&) = default;
};

struct FeatureSpec {
    std::string feature_id;
    std::string name;
    std::string source_component;
    std::vector<ActionStep> actions;
    std::string assertion_hint;
    std::optional<std::string> assertion_target;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct TestScript {
    std::string script_id;
    std::string feature_id;
    std::string feature_name;
    std::vector<ActionStep> steps;
    std::string url;
    std::string provider;
    std::string model;
};

struct DroppedScript {
    std::string feature_id;
    std::string reason;
};

struct TestSuite {
    std::vector<FeatureSpec> features;
    std::vector<TestScript> scripts;
    std::vector<DroppedScript> dropped;
    std::vector<std::string> warnings;
};

inline const std::set<std::string>& default_decorative_templates() {
    static const std::set<std::string> s = {"Divider", "Skeleton", "Spinner"};
    return s;
}

struct TestgenOptions {
    std::string model = "mock";
    double temperature = 0.0;
    std::set<std::string> decorative = default_decorative_templates();
};

// Component roots of an abstraction: nodes tagged with a segment that
// have no segment-tagged descendants. Ancestors are returned outermost
// first.
struct ComponentRef {
    const AbstractNode* node;
    std::vector<const AbstractNode*> ancestors;
};
std::vector<ComponentRef> component_roots(const AbstractNode& root);

// One provider call per component. Decorative components yield nothing.
// Returned features have empty feature_id.
std::vector<FeatureSpec> infer_features(const ComponentRef& component, const std::string& page_context,
                                        llm::Gateway& gateway, const TestgenOptions& opts,
                                        std::vector<std::string>& warnings);

// Features for every component root, numbered f1, f2, ... in document order.
std::vector<FeatureSpec> infer_all_features(const AbstractionDocument& doc, llm::Gateway& gateway,
                                            const TestgenOptions& opts, std::vector<std::string>& warnings);

// One script per feature: navigate, the feature's actions, then an
// assert_visible on the assertion target (or the source component).
// "@id" targets become unique CSS selectors over the original DOM;
// scripts with unresolvable or ambiguous targets are dropped.
TestSuite generate_tests(std::vector<FeatureSpec> features, const PageSnapshot& snapshot,
                         const std::string& provider, const std::string& model);

nlohmann::json to_json(const ActionStep& s);
nlohmann::json to_json(const FeatureSpec& f);
nlohmann::json to_json(const TestSuite& suite);
TestSuite suite_from_json(const nlohmann::json& j);

// W3C WebDriver HTTP command listing for the suite.
std::string render_webdriver_script(const TestSuite& suite);

// ------------------------------------------------------------ coverage

struct TruthFeature {
    std::string name;
    std::vector<std::string> keywords;  // defaults to the name's tokens
};

struct GroundTruth {
    std::string app;
    std::vector<TruthFeature> features;
};

// YAML: {app: <name>, features: [{name, keywords?: [..]}]}
GroundTruth load_ground_truth(const std::filesystem::path& path);
GroundTruth ground_truth_from_yaml(const std::string& text);

// Reviewer decisions that take precedence over keyword matching.
struct MatchOverrides {
    std::vector<std::pair<std::string, std::string>> force;   // (inferred name, truth name)
    std::vector<std::pair<std::string, std::string>> reject;  // (inferred name, truth name)
};
// YAML or JSON: {match: [{feature, truth}], reject: [{feature, truth}]}
MatchOverrides load_overrides(const std::filesystem::path& path);

std::vector<std::string> tokenize(const std::string& text);

// Fraction of the truth keywords present among the feature's tokens.
double keyword_overlap(const std::string& feature_name, const TruthFeature& truth);
inline constexpr double kMatchThreshold = 0.6;

struct CoverageRow {
    std::string app;
    std::size_t inferred = 0;
    std::size_t correct = 0;
    std::size_t truth_total = 0;
    std::size_t covered = 0;
};

struct CoverageReport {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double coverage = 0;
};

CoverageRow coverage_row(const std::vector<std::string>& inferred_names, const GroundTruth& truth,
                         const MatchOverrides& overrides = {});

// precision = correct / inferred; recall = coverage = covered / truth_total
// (zero when the denominator is zero).
CoverageReport coverage_report(const CoverageRow& row);
// Pools the counts of several rows before dividing.
CoverageRow combine_rows(const std::vector<CoverageRow>& rows);

nlohmann::json to_json(const CoverageRow& row, const CoverageReport& report);

}  // namespace visca
