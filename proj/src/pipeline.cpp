#include "visca/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "visca/errors.hpp"
#include "visca/mock_provider.hpp"

namespace visca {

using nlohmann::json;
namespace fs = std::filesystem;

// ------------------------------------------------------------------ files

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw InternalError("write failed for " + path.string());
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ----------------------------------------------------------------- config

void PipelineConfig::validate() const {
    if (provider != "mock" && provider != "http") throw InputError("config.provider must be 'mock' or 'http'");
    if (provider == "http" && endpoint.empty()) throw InputError("config.endpoint is required for the http provider");
    if (!(temperature >= 0.0) || temperature > 2.0) throw InputError("config.temperature must be in [0, 2]");
    if (thresholds.pixel_tolerance < 0 || thresholds.pixel_tolerance > 255) {
        throw InputError("config.pixel_tolerance must be in [0, 255]");
    }
    if (!(thresholds.uniformity > 0.0) || thresholds.uniformity > 1.0) {
        throw InputError("config.uniformity must be in (0, 1]");
    }
    if (max_depth < 1 || max_depth > 64) throw InputError("config.max_depth must be in [1, 64]");
    if (concurrency < 1 || concurrency > 256) throw InputError("config.concurrency must be in [1, 256]");
    if (max_retries < 0 || max_retries > 10) throw InputError("config.max_retries must be in [0, 10]");
    if (timeout_seconds < 1) throw InputError("config.timeout_seconds must be positive");
}

json interpolate_env(const json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        std::string out;
        for (std::size_t i = 0; i < s.size();) {
            if (s.compare(i, 2, "${") == 0) {
                const auto end = s.find('}', i + 2);
                if (end == std::string::npos) throw InputError("config: unterminated ${ in \"" + s + "\"");
                const auto name = s.substr(i + 2, end - i - 2);
                const char* v = std::getenv(name.c_str());
                if (!v) throw InputError("config: environment variable " + name + " is not set");
                out += v;
                i = end + 1;
            } else {
                out += s[i++];
            }
        }
        return out;
    }
    if (j.is_object()) {
        json o = json::object();
        for (const auto& [k, v] : j.items()) o[k] = interpolate_env(v);
        return o;
    }
    if (j.is_array()) {
        json a = json::array();
        for (const auto& v : j) a.push_back(interpolate_env(v));
        return a;
    }
    return j;
}

PipelineConfig config_from_json(const json& raw, PipelineConfig cfg) {
    if (!raw.is_object()) throw InputError("config must be a JSON object");
    const json j = interpolate_env(raw);
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "provider") cfg.provider = v.get<std::string>();
            else if (k == "endpoint") cfg.endpoint = v.get<std::string>();
            else if (k == "model") cfg.model = v.get<std::string>();
            else if (k == "api_key") cfg.api_key = v.get<std::string>();
            else if (k == "temperature") cfg.temperature = v.get<double>();
            else if (k == "cache_dir") cfg.cache_dir = v.is_null() ? std::nullopt : std::optional<fs::path>(v.get<std::string>());
            else if (k == "pixel_tolerance") cfg.thresholds.pixel_tolerance = v.get<int>();
            else if (k == "uniformity") cfg.thresholds.uniformity = v.get<double>();
            else if (k == "max_depth") cfg.max_depth = v.get<int>();
            else if (k == "concurrency") cfg.concurrency = v.get<int>();
            else if (k == "max_retries") cfg.max_retries = v.get<int>();
            else if (k == "timeout_seconds") cfg.timeout_seconds = v.get<int>();
            else if (k == "vocabulary") cfg.vocabulary = v.is_null() ? std::nullopt : std::optional<fs::path>(v.get<std::string>());
            else if (k == "out_dir") cfg.out_dir = v.get<std::string>();
            else throw InputError("config: unknown key '" + k + "'");
        }
    } catch (const json::type_error& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
    return config_from_json(read_json_file(path), std::move(base));
}

json to_json(const PipelineConfig& cfg) {
    return {{"provider", cfg.provider},
            {"endpoint", cfg.endpoint},
            {"model", cfg.model},
            {"temperature", cfg.temperature},
            {"cache_dir", cfg.cache_dir ? json(cfg.cache_dir->string()) : json(nullptr)},
            {"pixel_tolerance", cfg.thresholds.pixel_tolerance},
            {"uniformity", cfg.thresholds.uniformity},
            {"max_depth", cfg.max_depth},
            {"concurrency", cfg.concurrency},
            {"max_retries", cfg.max_retries},
            {"timeout_seconds", cfg.timeout_seconds},
            {"vocabulary", cfg.vocabulary ? json(cfg.vocabulary->string()) : json(nullptr)},
            {"out_dir", cfg.out_dir.string()}};
}

std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& cfg) {
    std::shared_ptr<llm::Provider> provider;
    if (cfg.provider == "mock") {
        provider = std::make_shared<llm::MockProvider>();
    } else {
        llm::HttpProviderConfig hc;
        hc.endpoint = cfg.endpoint;
        hc.api_key = cfg.api_key;
        if (hc.api_key.empty()) {
            if (const char* k = std::getenv("VISCA_API_KEY")) hc.api_key = k;
        }
        hc.timeout = std::chrono::seconds(cfg.timeout_seconds);
        provider = std::make_shared<llm::HttpProvider>(hc);
    }
    std::optional<llm::ResponseCache> cache;
    if (cfg.cache_dir) cache.emplace(*cfg.cache_dir);
    llm::RetryPolicy retry;
    retry.max_retries = cfg.max_retries;
    auto gw = std::make_unique<llm::Gateway>(provider, std::move(cache), retry, cfg.concurrency);
    gw->set_default_model(cfg.model);
    return gw;
}

TemplateVocabulary load_vocabulary(const PipelineConfig& cfg) {
    if (cfg.vocabulary) return TemplateVocabulary::load(*cfg.vocabulary);
    return TemplateVocabulary::builtin();
}

// ----------------------------------------------------------------- stages

SegmentStage run_segmentation(const PageSnapshot& snapshot, const PruneThresholds& thresholds) {
    const NodeTree visible = build_visible_hierarchy(snapshot);
    auto [pruned, report] = prune_redundant(visible, snapshot, thresholds);
    SegmentStage out{std::move(pruned), std::move(report), {}};
    if (out.pruned.root()) out.segmentation = mark_candidate_segments(out.pruned);
    return out;
}

ClassifyStage run_classification(const PageSnapshot& snapshot, const LoadedSegments& segments, llm::Gateway& gateway,
                                 const ClassifyOptions& opts) {
    if (!segments.tree.root()) throw InputError("segmentation has no visible nodes to classify");
    ClassifyStage out;
    out.page_context = describe_page(snapshot, gateway, opts);
    const auto hierarchy = build_candidate_hierarchy(segments.tree, segments.candidates);
    out.root = classify_tree(snapshot, hierarchy, *hierarchy.tree.root(), out.page_context, gateway, opts);
    return out;
}

AbstractionDocument run_abstraction(const PageSnapshot& snapshot, const LoadedClassification& classified,
                                    const TemplateVocabulary& vocabulary, llm::Gateway& gateway,
                                    const AbstractionOptions& opts) {
    Abstractor abstractor(snapshot, vocabulary, gateway, classified.page_context, opts);
    AbstractionDocument doc;
    doc.root = abstractor.transform_page(classified.root);
    doc.page_context = classified.page_context;
    doc.warnings = abstractor.warnings();
    return doc;
}

TestSuite run_testgen(const AbstractionDocument& doc, const PageSnapshot& snapshot, llm::Gateway& gateway,
                      const TestgenOptions& opts) {
    std::vector<std::string> warnings;
    auto features = infer_all_features(doc, gateway, opts, warnings);
    auto suite = generate_tests(std::move(features), snapshot, gateway.provider().name(), opts.model);
    suite.warnings = std::move(warnings);
    return suite;
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::prune: return "prune";
        case Stage::segment: return "segment";
        case Stage::classify: return "classify";
        case Stage::abstract: return "abstract";
        case Stage::testgen: return "testgen";
    }
    return "?";
}

std::optional<Stage> parse_stage(const std::string& s) {
    for (auto st : {Stage::prune, Stage::segment, Stage::classify, Stage::abstract, Stage::testgen}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

// ------------------------------------------------------------------- run

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& text) {
        write_text_file(dir_ / (name + ".partial"), text);
        names_.push_back(name);
    }

    // Prefers the final artifact, then a .partial left by a failed run.
    fs::path existing(const std::string& name) const {
        const auto final_path = dir_ / name;
        if (fs::exists(final_path)) return final_path;
        const auto partial = dir_ / (name + ".partial");
        if (fs::exists(partial)) return partial;
        throw InputError("cannot resume: " + final_path.string() + " does not exist");
    }

    std::vector<fs::path> publish() {
        std::vector<fs::path> out;
        for (const auto& n : names_) {
            fs::rename(dir_ / (n + ".partial"), dir_ / n);
            out.push_back(dir_ / n);
        }
        return out;
    }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

template <typename F>
auto in_stage(Stage stage, F&& f) -> decltype(f()) {
    const std::string prefix = "stage " + to_string(stage) + ": ";
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.category(), prefix + e.what());
    } catch (const json::exception& e) {
        throw InputError(prefix + e.what());
    } catch (const fs::filesystem_error& e) {
        throw InputError(prefix + e.what());
    } catch (const std::exception& e) {
        throw InternalError(prefix + e.what());
    }
}

}  // namespace

RunResult run_pipeline(const fs::path& bundle, const PipelineConfig& cfg, Stage from, llm::Gateway* gateway) {
    cfg.validate();
    const std::string started = utc_now();
    const PageSnapshot snapshot = load_snapshot(bundle);
    const TemplateVocabulary vocabulary = load_vocabulary(cfg);

    std::unique_ptr<llm::Gateway> owned;
    if (!gateway) {
        owned = make_gateway(cfg);
        gateway = owned.get();
    }
    fs::create_directories(cfg.out_dir);
    ArtifactWriter out(cfg.out_dir);
    const auto runs = [&](Stage s) { return static_cast<int>(s) >= static_cast<int>(from); };

    // Outputs of the stages about to run must not survive from an older run.
    const std::vector<std::pair<Stage, const char*>> outputs = {
        {Stage::prune, "prune.json"},          {Stage::segment, "segments.json"},
        {Stage::classify, "classified.json"},  {Stage::abstract, "abstraction.json"},
        {Stage::abstract, "abstraction.jsx"},  {Stage::testgen, "suite.json"},
        {Stage::testgen, "suite.txt"},         {Stage::testgen, "run-manifest.json"}};
    for (const auto& [stage, name] : outputs) {
        if (!runs(stage)) continue;
        fs::remove(cfg.out_dir / name);
        fs::remove(cfg.out_dir / (std::string(name) + ".partial"));
    }
    json stages = json::array();

    // prune + segment
    LoadedSegments segments;
    if (runs(Stage::segment)) {
        in_stage(Stage::segment, [&] {
            auto seg = run_segmentation(snapshot, cfg.thresholds);
            if (runs(Stage::prune)) {
                out.write("prune.json", dump_json(to_json(seg.report)));
                stages.push_back({{"stage", "prune"}, {"artifact", "prune.json"}});
            }
            if (!seg.pruned.root()) throw InputError("page has no visible nodes");
            const auto j = to_json(seg.pruned, seg.segmentation);
            out.write("segments.json", dump_json(j));
            stages.push_back({{"stage", "segment"}, {"artifact", "segments.json"}});
            segments = segments_from_json(j, snapshot);
        });
    } else {
        segments = in_stage(Stage::segment,
                            [&] { return segments_from_json(read_json_file(out.existing("segments.json")), snapshot); });
    }

    ClassifyOptions copts;
    copts.model = cfg.model;
    copts.temperature = cfg.temperature;
    copts.max_depth = cfg.max_depth;
    LoadedClassification classified;
    if (runs(Stage::classify)) {
        in_stage(Stage::classify, [&] {
            auto c = run_classification(snapshot, segments, *gateway, copts);
            const auto j = to_json(c.root, snapshot, c.page_context);
            out.write("classified.json", dump_json(j));
            stages.push_back({{"stage", "classify"}, {"artifact", "classified.json"}});
            classified = classification_from_json(j, snapshot);
        });
    } else {
        classified = in_stage(Stage::classify, [&] {
            return classification_from_json(read_json_file(out.existing("classified.json")), snapshot);
        });
    }

    AbstractionOptions aopts;
    aopts.model = cfg.model;
    aopts.temperature = cfg.temperature;
    AbstractionDocument doc;
    if (runs(Stage::abstract)) {
        in_stage(Stage::abstract, [&] {
            doc = run_abstraction(snapshot, classified, vocabulary, *gateway, aopts);
            out.write("abstraction.json", dump_json(to_json(doc)));
            out.write("abstraction.jsx", render_markup(doc.root));
            stages.push_back({{"stage", "abstract"}, {"artifact", "abstraction.json"}});
        });
    } else {
        doc = in_stage(Stage::abstract,
                       [&] { return abstraction_from_json(read_json_file(out.existing("abstraction.json"))); });
    }

    TestgenOptions topts;
    topts.model = cfg.model;
    topts.temperature = cfg.temperature;
    in_stage(Stage::testgen, [&] {
        const auto suite = run_testgen(doc, snapshot, *gateway, topts);
        out.write("suite.json", dump_json(to_json(suite)));
        out.write("suite.txt", render_webdriver_script(suite));
        stages.push_back({{"stage", "testgen"},
                          {"artifact", "suite.json"},
                          {"scripts", suite.scripts.size()},
                          {"dropped", suite.dropped.size()}});
    });

    RunResult result;
    result.stats = gateway->stats();
    const auto cfg_json = to_json(cfg);
    const json manifest = {{"tool", "visca"},
                           {"version", kVersion},
                           {"bundle", fs::absolute(bundle).lexically_normal().string()},
                           {"url", snapshot.url()},
                           {"from", to_string(from)},
                           {"started_at", started},
                           {"finished_at", utc_now()},
                           {"config", cfg_json},
                           {"config_hash", llm::sha256_hex(cfg_json.dump())},
                           {"vocabulary_size", vocabulary.size()},
                           {"provider",
                            {{"name", gateway->provider().name()},
                             {"requests", result.stats.requests},
                             {"provider_calls", result.stats.provider_calls},
                             {"cache_hits", result.stats.cache_hits},
                             {"retries", result.stats.retries},
                             {"repairs", result.stats.repairs}}},
                           {"stages", stages}};
    out.write("run-manifest.json", dump_json(manifest));
    result.artifacts = out.publish();
    return result;
}

}  // namespace visca
