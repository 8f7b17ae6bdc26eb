#include "visca/testgen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "visca/errors.hpp"
#include "visca/prompts.hpp"
#include "visca/selector.hpp"

namespace visca {

using nlohmann::json;

std::string to_string(ActionKind k) {
    switch (k) {
        case ActionKind::click: return "click";
        case ActionKind::type: return "type";
        case ActionKind::select: return "select";
        case ActionKind::navigate: return "navigate";
        case ActionKind::assert_visible: return "assert_visible";
        case ActionKind::assert_text: return "assert_text";
    }
    return "?";
}

std::optional<ActionKind> parse_action_kind(const std::string& s) {
    for (auto k : {ActionKind::click, ActionKind::type, ActionKind::select, ActionKind::navigate,
                   ActionKind::assert_visible, ActionKind::assert_text}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

// ------------------------------------------------------------- inference

std::vector<ComponentRef> component_roots(const AbstractNode& root) {
    std::vector<ComponentRef> out;
    std::vector<const AbstractNode*> path;
    std::function<bool(const AbstractNode&)> has_segment_below = [&](const AbstractNode& n) {
        for (const auto& c : n.children) {
            if (c.segment || has_segment_below(c)) return true;
        }
        return false;
    };
    std::function<void(const AbstractNode&)> walk = [&](const AbstractNode& n) {
        if (n.segment && !has_segment_below(n)) {
            out.push_back({&n, path});
            return;
        }
        path.push_back(&n);
        for (const auto& c : n.children) walk(c);
        path.pop_back();
    };
    walk(root);
    return out;
}

namespace {

std::optional<FeatureSpec> feature_from_json(const json& j, const std::string& component_id, std::string& problem) {
    if (!j.is_object() || !j.contains("name") || !j.at("name").is_string() ||
        j.at("name").get<std::string>().empty()) {
        problem = "feature without a name";
        return std::nullopt;
    }
    FeatureSpec f;
    f.name = j.at("name").get<std::string>();
    f.source_component = component_id;
    f.assertion_hint = j.contains("assertion_hint") && j.at("assertion_hint").is_string()
                           ? j.at("assertion_hint").get<std::string>()
                           : std::string{};
    if (j.contains("assertion_target") && j.at("assertion_target").is_string()) {
        f.assertion_target = j.at("assertion_target").get<std::string>();
    }
    for (const auto& a : j.value("actions", json::array())) {
        if (!a.is_object() || !a.contains("kind") || !a.at("kind").is_string()) {
            problem = "feature '" + f.name + "' has a malformed action";
            return std::nullopt;
        }
        const auto kind = parse_action_kind(a.at("kind").get<std::string>());
        if (!kind) {
            problem = "feature '" + f.name + "' uses unknown action kind " + a.at("kind").dump();
            return std::nullopt;
        }
        ActionStep step;
        step.kind = *kind;
        step.target = a.contains("target") && a.at("target").is_string() ? a.at("target").get<std::string>() : "";
        if (a.contains("value") && !a.at("value").is_null()) {
            step.value = a.at("value").is_string() ? a.at("value").get<std::string>() : a.at("value").dump();
        }
        f.actions.push_back(std::move(step));
    }
    if (f.actions.empty()) {
        problem = "feature '" + f.name + "' has no actions";
        return std::nullopt;
    }
    return f;
}

}  // namespace

std::vector<FeatureSpec> infer_features(const ComponentRef& component, const std::string& page_context,
                                        llm::Gateway& gateway, const TestgenOptions& opts,
                                        std::vector<std::string>& warnings) {
    const AbstractNode& node = *component.node;
    if (opts.decorative.count(node.template_name)) return {};
    const std::string component_id = node.segment.value_or(node.source.value_or(""));

    json ancestors = json::array();
    for (const auto* a : component.ancestors) {
        json entry = {{"template", a->template_name}, {"name", a->name}};
        if (a->source) entry["source"] = *a->source;
        ancestors.push_back(std::move(entry));
    }
    const json input = {{"task", prompts::kInferFeatures},
                        {"component", to_json(node)},
                        {"markup", render_markup(node)},
                        {"page_context", page_context},
                        {"ancestors", ancestors}};
    const auto req = prompts::make_request(opts.model, prompts::infer_features_instructions(), input, std::nullopt,
                                           opts.temperature);

    json reply;
    try {
        reply = gateway.complete_json(req);
    } catch (const ProviderProtocolError& e) {
        warnings.push_back("component " + component_id + ": no usable feature list: " + e.what());
        return {};
    }
    if (!reply.is_object() || !reply.contains("features") || !reply.at("features").is_array()) {
        warnings.push_back("component " + component_id + ": reply has no feature list");
        return {};
    }
    std::vector<FeatureSpec> out;
    for (const auto& fj : reply.at("features")) {
        std::string problem;
        if (auto f = feature_from_json(fj, component_id, problem)) {
            out.push_back(std::move(*f));
        } else {
            warnings.push_back("component " + component_id + ": " + problem);
        }
    }
    return out;
}

std::vector<FeatureSpec> infer_all_features(const AbstractionDocument& doc, llm::Gateway& gateway,
                                            const TestgenOptions& opts, std::vector<std::string>& warnings) {
    std::vector<FeatureSpec> all;
    for (const auto& ref : component_roots(doc.root)) {
        for (auto& f : infer_features(ref, doc.page_context, gateway, opts, warnings)) {
            f.feature_id = "f" + std::to_string(all.size() + 1);
            all.push_back(std::move(f));
        }
    }
    return all;
}

// ------------------------------------------------------------ generation

namespace {

// Resolves a target to a selector matching exactly one snapshot node.
std::optional<std::string> resolve_target(const PageSnapshot& snapshot, const std::string& target,
                                          std::string& problem) {
    if (target.empty()) {
        problem = "empty target";
        return std::nullopt;
    }
    if (target.front() == '@') {
        const auto idx = snapshot.index_of(target.substr(1));
        if (!idx) {
            problem = "target " + target + " is not in the snapshot";
            return std::nullopt;
        }
        auto sel = css::unique_selector(snapshot, *idx);
        const auto m = css::match(snapshot, sel);
        if (m.size() != 1 || m.front() != *idx) {
            problem = "no unique selector for " + target;
            return std::nullopt;
        }
        return sel;
    }
    try {
        const auto m = css::match(snapshot, target);
        if (m.size() == 1) return target;
        problem = "selector '" + target + "' matches " + std::to_string(m.size()) + " nodes";
    } catch (const InputError& e) {
        problem = e.what();
    }
    return std::nullopt;
}

}  // namespace

TestSuite generate_tests(std::vector<FeatureSpec> features, const PageSnapshot& snapshot,
                         const std::string& provider, const std::string& model) {
    TestSuite suite;
    for (const auto& f : features) {
        TestScript script;
        script.feature_id = f.feature_id;
        script.feature_name = f.name;
        script.url = snapshot.url();
        script.provider = provider;
        script.model = model;
        script.steps.push_back({ActionKind::navigate, snapshot.url(), std::nullopt});

        std::string problem;
        bool ok = true;
        for (const auto& a : f.actions) {
            ActionStep step = a;
            if (a.kind == ActionKind::navigate) {
                if (a.target.empty()) {
                    problem = "navigate without URL";
                    ok = false;
                    break;
                }
                script.steps.push_back(step);
                continue;
            }
            if ((a.kind == ActionKind::type || a.kind == ActionKind::select || a.kind == ActionKind::assert_text) &&
                !a.value) {
                problem = to_string(a.kind) + " step without value";
                ok = false;
                break;
            }
            auto sel = resolve_target(snapshot, a.target, problem);
            if (!sel) {
                ok = false;
                break;
            }
            step.target = *sel;
            script.steps.push_back(std::move(step));
        }
        if (ok) {
            const std::string assert_target = f.assertion_target.value_or("@" + f.source_component);
            auto sel = resolve_target(snapshot, assert_target, problem);
            if (sel) {
                script.steps.push_back({ActionKind::assert_visible, *sel, std::nullopt});
            } else {
                ok = false;
            }
        }
        if (!ok) {
            suite.dropped.push_back({f.feature_id, problem});
            continue;
        }
        script.script_id = "s" + std::to_string(suite.scripts.size() + 1);
        suite.scripts.push_back(std::move(script));
    }
    suite.features = std::move(features);
    return suite;
}

// ------------------------------------------------------------------ json

json to_json(const ActionStep& s) {
    return {{"kind", to_string(s.kind)}, {"target", s.target}, {"value", s.value ? json(*s.value) : json(nullptr)}};
}

json to_json(const FeatureSpec& f) {
    json actions = json::array();
    for (const auto& a : f.actions) actions.push_back(to_json(a));
    json j = {{"feature_id", f.feature_id},
              {"name", f.name},
              {"source_component", f.source_component},
              {"actions", actions},
              {"assertion_hint", f.assertion_hint}};
    if (f.assertion_target) j["assertion_target"] = *f.assertion_target;
    return j;
}

json to_json(const TestSuite& suite) {
    json features = json::array();
    for (const auto& f : suite.features) features.push_back(to_json(f));
    json scripts = json::array();
    for (const auto& s : suite.scripts) {
        json steps = json::array();
        for (const auto& st : s.steps) steps.push_back(to_json(st));
        scripts.push_back({{"script_id", s.script_id},
                           {"feature_id", s.feature_id},
                           {"feature_name", s.feature_name},
                           {"steps", steps},
                           {"metadata", {{"url", s.url}, {"provider", s.provider}, {"model", s.model}}}});
    }
    json dropped = json::array();
    for (const auto& d : suite.dropped) dropped.push_back({{"feature_id", d.feature_id}, {"reason", d.reason}});
    return {{"features", features}, {"scripts", scripts}, {"dropped", dropped}, {"warnings", suite.warnings}};
}

TestSuite suite_from_json(const json& j) {
    if (!j.is_object() || !j.contains("features")) throw InputError("suite file has no 'features'");
    TestSuite suite;
    try {
        for (const auto& fj : j.at("features")) {
            std::string problem;
            auto f = feature_from_json(fj, fj.value("source_component", std::string{}), problem);
            if (!f) throw InputError("suite: " + problem);
            f->feature_id = fj.value("feature_id", std::string{});
            suite.features.push_back(std::move(*f));
        }
        for (const auto& sj : j.value("scripts", json::array())) {
            TestScript s;
            s.script_id = sj.at("script_id").get<std::string>();
            s.feature_id = sj.at("feature_id").get<std::string>();
            s.feature_name = sj.value("feature_name", std::string{});
            const auto meta = sj.value("metadata", json::object());
            s.url = meta.value("url", std::string{});
            s.provider = meta.value("provider", std::string{});
            s.model = meta.value("model", std::string{});
            for (const auto& st : sj.at("steps")) {
                const auto kind = parse_action_kind(st.at("kind").get<std::string>());
                if (!kind) throw InputError("suite: unknown step kind " + st.at("kind").dump());
                ActionStep step{*kind, st.at("target").get<std::string>(), std::nullopt};
                if (st.contains("value") && st.at("value").is_string()) step.value = st.at("value").get<std::string>();
                s.steps.push_back(std::move(step));
            }
            suite.scripts.push_back(std::move(s));
        }
        for (const auto& d : j.value("dropped", json::array())) {
            suite.dropped.push_back({d.value("feature_id", std::string{}), d.value("reason", std::string{})});
        }
        suite.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw InputError(std::string("suite: ") + e.what());
    }
    return suite;
}

std::string render_webdriver_script(const TestSuite& suite) {
    std::ostringstream out;
    const auto find = [&](const std::string& sel) {
        out << "POST /session/{session_id}/element\n"
            << json({{"using", "css selector"}, {"value", sel}}).dump() << "\n";
    };
    for (const auto& s : suite.scripts) {
        out << "### " << s.script_id << " (" << s.feature_id << "): " << s.feature_name << "\n";
        for (const auto& st : s.steps) {
            switch (st.kind) {
                case ActionKind::navigate:
                    out << "POST /session/{session_id}/url\n" << json({{"url", st.target}}).dump() << "\n";
                    break;
                case ActionKind::click:
                    find(st.target);
                    out << "POST /session/{session_id}/element/{element_id}/click\n{}\n";
                    break;
                case ActionKind::type:
                    find(st.target);
                    out << "POST /session/{session_id}/element/{element_id}/clear\n{}\n";
                    out << "POST /session/{session_id}/element/{element_id}/value\n"
                        << json({{"text", st.value.value_or("")}}).dump() << "\n";
                    break;
                case ActionKind::select: {
                    std::string v = st.value.value_or("");
                    std::string escaped;
                    for (char c : v) {
                        if (c == '"' || c == '\\') escaped += '\\';
                        escaped += c;
                    }
                    find(st.target + " option[value=\"" + escaped + "\"]");
                    out << "POST /session/{session_id}/element/{element_id}/click\n{}\n";
                    break;
                }
                case ActionKind::assert_visible:
                    find(st.target);
                    out << "GET /session/{session_id}/element/{element_id}/displayed\n# expect: true\n";
                    break;
                case ActionKind::assert_text:
                    find(st.target);
                    out << "GET /session/{session_id}/element/{element_id}/text\n# expect: "
                        << json(st.value.value_or("")).dump() << "\n";
                    break;
            }
        }
        out << "\n";
    }
    return out.str();
}

// -------------------------------------------------------------- coverage

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || u >= 0x80) {
            cur += static_cast<char>(std::tolower(u));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double keyword_overlap(const std::string& feature_name, const TruthFeature& truth) {
    std::set<std::string> keywords;
    for (const auto& k : truth.keywords.empty() ? std::vector<std::string>{truth.name} : truth.keywords) {
        for (auto& t : tokenize(k)) keywords.insert(std::move(t));
    }
    if (keywords.empty()) return 0.0;
    const auto tokens = tokenize(feature_name);
    const std::set<std::string> have(tokens.begin(), tokens.end());
    std::size_t hit = 0;
    for (const auto& k : keywords) hit += have.count(k);
    return static_cast<double>(hit) / static_cast<double>(keywords.size());
}

GroundTruth ground_truth_from_yaml(const std::string& text) {
    GroundTruth gt;
    try {
        const YAML::Node root = YAML::Load(text);
        if (root["app"]) gt.app = root["app"].as<std::string>();
        const YAML::Node features = root["features"];
        if (!features || !features.IsSequence()) throw InputError("ground truth: 'features' must be a list");
        for (const auto& f : features) {
            TruthFeature t;
            if (f.IsScalar()) {
                t.name = f.as<std::string>();
            } else {
                t.name = f["name"].as<std::string>();
                if (f["keywords"]) t.keywords = f["keywords"].as<std::vector<std::string>>();
            }
            gt.features.push_back(std::move(t));
        }
    } catch (const YAML::Exception& e) {
        throw InputError(std::string("ground truth: ") + e.what());
    }
    if (gt.features.empty()) throw InputError("ground truth lists no features");
    return gt;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

GroundTruth load_ground_truth(const std::filesystem::path& path) { return ground_truth_from_yaml(read_file(path)); }

MatchOverrides load_overrides(const std::filesystem::path& path) {
    MatchOverrides o;
    try {
        const YAML::Node root = YAML::Load(read_file(path));
        const auto pairs = [&](const char* key, std::vector<std::pair<std::string, std::string>>& dst) {
            if (!root[key]) return;
            for (const auto& e : root[key]) dst.emplace_back(e["feature"].as<std::string>(), e["truth"].as<std::string>());
        };
        pairs("match", o.force);
        pairs("reject", o.reject);
    } catch (const YAML::Exception& e) {
        throw InputError("overrides " + path.string() + ": " + e.what());
    }
    return o;
}

CoverageRow coverage_row(const std::vector<std::string>& inferred_names, const GroundTruth& truth,
                         const MatchOverrides& overrides) {
    if (truth.features.empty()) throw InputError("ground truth lists no features");
    const auto listed = [](const auto& v, const std::string& f, const std::string& t) {
        return std::find(v.begin(), v.end(), std::make_pair(f, t)) != v.end();
    };
    CoverageRow row;
    row.app = truth.app;
    row.inferred = inferred_names.size();
    row.truth_total = truth.features.size();
    std::vector<bool> covered(truth.features.size(), false);
    for (const auto& name : inferred_names) {
        bool correct = false;
        for (std::size_t t = 0; t < truth.features.size(); ++t) {
            const auto& tf = truth.features[t];
            bool m;
            if (listed(overrides.force, name, tf.name)) {
                m = true;
            } else if (listed(overrides.reject, name, tf.name)) {
                m = false;
            } else {
                m = keyword_overlap(name, tf) >= kMatchThreshold;
            }
            if (m) {
                correct = true;
                covered[t] = true;
            }
        }
        row.correct += correct;
    }
    row.covered = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
    return row;
}

CoverageReport coverage_report(const CoverageRow& row) {
    const auto ratio = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    CoverageReport r;
    r.precision = ratio(row.correct, row.inferred);
    r.recall = ratio(row.covered, row.truth_total);
    r.coverage = r.recall;
    r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

CoverageRow combine_rows(const std::vector<CoverageRow>& rows) {
    CoverageRow total;
    total.app = "Total";
    for (const auto& r : rows) {
        total.inferred += r.inferred;
        total.correct += r.correct;
        total.truth_total += r.truth_total;
        total.covered += r.covered;
    }
    return total;
}

json to_json(const CoverageRow& row, const CoverageReport& report) {
    return {{"app", row.app},
            {"inferred", row.inferred},
            {"correct", row.correct},
            {"truth_total", row.truth_total},
            {"covered", row.covered},
            {"precision", report.precision},
            {"recall", report.recall},
            {"f1", report.f1},
            {"coverage", report.coverage}};
}

}  // namespace visca
