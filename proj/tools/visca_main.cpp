// visca command-line front end.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "visca/capture.hpp"
#include "visca/errors.hpp"
#include "visca/evaluator.hpp"
#include "visca/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace visca;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitProvider = 3;
constexpr int kExitInternal = 4;

// Flags shared by the subcommands that talk to a provider.
struct ProviderFlags {
    std::string config;
    std::string provider, endpoint, model, cache_dir, vocabulary;
    std::optional<double> temperature;
    std::optional<int> concurrency, max_retries, max_depth;

    void add(CLI::App* app) {
        app->add_option("--config", config, "JSON config file (${VAR} values read from the environment)");
        app->add_option("--provider", provider, "LLM provider: mock or http")->check(CLI::IsMember({"mock", "http"}));
        app->add_option("--endpoint", endpoint, "chat-completions URL for the http provider");
        app->add_option("--model", model, "model name sent to the provider");
        app->add_option("--cache-dir", cache_dir, "response cache directory");
        app->add_option("--temperature", temperature, "sampling temperature (default 0)");
        app->add_option("--concurrency", concurrency, "maximum in-flight provider requests (default 4)");
        app->add_option("--max-retries", max_retries, "retries on transient provider errors (default 2)");
        app->add_option("--max-depth", max_depth, "classification recursion cap (default 6)");
        app->add_option("--vocabulary", vocabulary, "template vocabulary JSON (default: built-in)");
    }

    PipelineConfig resolve(PipelineConfig cfg = {}) const {
        if (!config.empty()) cfg = load_config(config, cfg);
        if (!provider.empty()) cfg.provider = provider;
        if (!endpoint.empty()) cfg.endpoint = endpoint;
        if (!model.empty()) cfg.model = model;
        if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
        if (!vocabulary.empty()) cfg.vocabulary = vocabulary;
        if (temperature) cfg.temperature = *temperature;
        if (concurrency) cfg.concurrency = *concurrency;
        if (max_retries) cfg.max_retries = *max_retries;
        if (max_depth) cfg.max_depth = *max_depth;
        cfg.validate();
        return cfg;
    }
};

void print_stats(const llm::Gateway& gw) {
    const auto s = gw.stats();
    std::cerr << "provider " << gw.provider().name() << ": " << s.requests << " requests, " << s.provider_calls
              << " calls, " << s.cache_hits << " cache hits, " << s.retries << " retries\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visca: page segmentation, component abstraction and E2E test generation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // capture
    CaptureOptions cap;
    std::string cap_out, devtools = "127.0.0.1:9222";
    auto* capture = app.add_subcommand("capture", "Capture a page bundle from a running Chromium over DevTools");
    capture->add_option("--url", cap.url, "page URL")->required();
    capture->add_option("--out", cap_out, "bundle directory to write")->required();
    capture->add_option("--devtools", devtools, "remote debugging host:port")->capture_default_str();
    capture->add_option("--width", cap.viewport_width, "viewport width")->capture_default_str();
    capture->add_option("--height", cap.viewport_height, "viewport height")->capture_default_str();

    // prune
    std::string bundle, report_path;
    PruneThresholds thresholds;
    auto* prune = app.add_subcommand("prune", "Remove visually redundant wrapper nodes; write the prune report");
    prune->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    prune->add_option("--report", report_path, "prune report JSON path")->required();
    prune->add_option("--pixel-tolerance", thresholds.pixel_tolerance, "per-channel tolerance")->capture_default_str();
    prune->add_option("--uniformity", thresholds.uniformity, "residual uniformity threshold")->capture_default_str();

    // segment
    std::string out_path;
    auto* segment = app.add_subcommand("segment", "Compute potentials and candidate segments");
    segment->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    segment->add_option("--out", out_path, "segments.json path")->required();
    segment->add_option("--pixel-tolerance", thresholds.pixel_tolerance, "per-channel tolerance")->capture_default_str();
    segment->add_option("--uniformity", thresholds.uniformity, "residual uniformity threshold")->capture_default_str();

    // classify
    ProviderFlags pf;
    std::string segments_path;
    auto* classify = app.add_subcommand("classify", "Describe the page and classify the segment hierarchy");
    classify->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    classify->add_option("--segments", segments_path, "segments.json from 'segment'")->required();
    classify->add_option("--out", out_path, "classified.json path")->required();
    pf.add(classify);

    // abstract
    std::string classified_path, markup_path;
    auto* abstract = app.add_subcommand("abstract", "Transform classified segments into the component abstraction");
    abstract->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    abstract->add_option("--classified", classified_path, "classified.json from 'classify'")->required();
    abstract->add_option("--out", out_path, "abstraction.json path")->required();
    abstract->add_option("--markup", markup_path, "also write JSX-like markup here");
    pf.add(abstract);

    // testgen
    std::string abstraction_path, webdriver_path;
    auto* testgen = app.add_subcommand("testgen", "Infer features and emit E2E test scripts");
    testgen->add_option("--abstraction", abstraction_path, "abstraction.json from 'abstract'")->required();
    testgen->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    testgen->add_option("--out", out_path, "suite.json path")->required();
    testgen->add_option("--webdriver-script", webdriver_path, "also write WebDriver command script here");
    pf.add(testgen);

    // coverage
    std::vector<std::string> suite_paths;
    std::string truth_path, overrides_path, rows_path;
    auto* coverage = app.add_subcommand("coverage", "Feature precision/recall/coverage against a ground-truth list");
    coverage->add_option("--suite", suite_paths, "suite.json (repeatable; features are pooled)");
    coverage->add_option("--truth", truth_path, "ground-truth features YAML");
    coverage->add_option("--overrides", overrides_path, "reviewer match overrides (YAML or JSON)");
    coverage->add_option("--rows", rows_path, "JSON list of {app, inferred, correct, truth_total?, covered?} rows to pool");
    coverage->add_option("--out", out_path, "report JSON path (default: stdout)");

    // eval-seg
    auto* eval_seg = app.add_subcommand("eval-seg", "B-Cubed scores of a segmentation against ground truth");
    eval_seg->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    eval_seg->add_option("--segments", segments_path, "segments.json")->required();
    eval_seg->add_option("--truth", truth_path, "truth JSON: element id or XPath -> cluster id")->required();
    eval_seg->add_option("--out", out_path, "scores.json path")->required();

    // class-stats
    std::vector<std::string> classified_paths;
    auto* class_stats = app.add_subcommand("class-stats", "Component/non-component shares over classified pages");
    class_stats->add_option("--classified", classified_paths, "classified.json files, one per page")->required();
    class_stats->add_option("--out", out_path, "report JSON path (default: stdout)");

    // run
    std::string out_dir, from = "prune";
    auto* run = app.add_subcommand("run", "Run prune -> segment -> classify -> abstract -> testgen");
    run->add_option("--bundle", bundle, "snapshot bundle directory")->required();
    run->add_option("--out-dir", out_dir, "artifact directory");
    run->add_option("--from", from, "first stage to recompute; earlier artifacts are read from --out-dir")->capture_default_str()
        ->check(CLI::IsMember({"prune", "segment", "classify", "abstract", "testgen"}));
    std::optional<int> run_tolerance;
    std::optional<double> run_uniformity;
    run->add_option("--pixel-tolerance", run_tolerance, "per-channel tolerance (default 2)");
    run->add_option("--uniformity", run_uniformity, "residual uniformity threshold (default 0.95)");
    pf.add(run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    const auto emit = [&](const json& j) {
        if (out_path.empty()) {
            std::cout << dump_json(j);
        } else {
            write_text_file(out_path, dump_json(j));
        }
    };

    try {
        if (*capture) {
            const auto colon = devtools.rfind(':');
            if (colon == std::string::npos) throw InputError("--devtools must be host:port");
            cap.devtools_host = devtools.substr(0, colon);
            cap.devtools_port = std::stoi(devtools.substr(colon + 1));
            const auto snap = capture_page(cap);
            save_snapshot(snap, cap_out);
            std::cout << "captured " << snap.nodes().size() << " nodes (" << snap.visible_count() << " visible) into "
                      << cap_out << "\n";
        } else if (*prune) {
            const auto snap = load_snapshot(bundle);
            const auto seg = run_segmentation(snap, thresholds);
            write_text_file(report_path, dump_json(to_json(seg.report)));
            std::cout << "pruned " << seg.report.pruned_node_ids.size() << " of " << seg.report.before_count
                      << " visible nodes\n";
        } else if (*segment) {
            const auto snap = load_snapshot(bundle);
            const auto seg = run_segmentation(snap, thresholds);
            if (!seg.pruned.root()) throw InputError("page has no visible nodes");
            write_text_file(out_path, dump_json(to_json(seg.pruned, seg.segmentation)));
            std::cout << seg.segmentation.candidates.size() << " candidate segments over " << seg.pruned.size()
                      << " nodes\n";
        } else if (*classify) {
            const auto cfg = pf.resolve();
            const auto snap = load_snapshot(bundle);
            const auto segs = segments_from_json(read_json_file(segments_path), snap);
            auto gw = make_gateway(cfg);
            ClassifyOptions opts;
            opts.model = cfg.model;
            opts.temperature = cfg.temperature;
            opts.max_depth = cfg.max_depth;
            const auto result = run_classification(snap, segs, *gw, opts);
            write_text_file(out_path, dump_json(to_json(result.root, snap, result.page_context)));
            print_stats(*gw);
        } else if (*abstract) {
            const auto cfg = pf.resolve();
            const auto snap = load_snapshot(bundle);
            const auto classified = classification_from_json(read_json_file(classified_path), snap);
            auto gw = make_gateway(cfg);
            AbstractionOptions opts;
            opts.model = cfg.model;
            opts.temperature = cfg.temperature;
            const auto doc = run_abstraction(snap, classified, load_vocabulary(cfg), *gw, opts);
            write_text_file(out_path, dump_json(to_json(doc)));
            if (!markup_path.empty()) write_text_file(markup_path, render_markup(doc.root));
            for (const auto& w : doc.warnings) std::cerr << "warning: " << w << "\n";
            print_stats(*gw);
        } else if (*testgen) {
            const auto cfg = pf.resolve();
            const auto snap = load_snapshot(bundle);
            const auto doc = abstraction_from_json(read_json_file(abstraction_path));
            auto gw = make_gateway(cfg);
            TestgenOptions opts;
            opts.model = cfg.model;
            opts.temperature = cfg.temperature;
            const auto suite = run_testgen(doc, snap, *gw, opts);
            write_text_file(out_path, dump_json(to_json(suite)));
            if (!webdriver_path.empty()) write_text_file(webdriver_path, render_webdriver_script(suite));
            std::cout << suite.features.size() << " features, " << suite.scripts.size() << " scripts, "
                      << suite.dropped.size() << " dropped\n";
            print_stats(*gw);
        } else if (*coverage) {
            std::vector<CoverageRow> rows;
            if (!suite_paths.empty()) {
                if (truth_path.empty()) throw InputError("--truth is required with --suite");
                std::vector<std::string> names;
                for (const auto& p : suite_paths) {
                    for (const auto& f : suite_from_json(read_json_file(p)).features) names.push_back(f.name);
                }
                MatchOverrides overrides;
                if (!overrides_path.empty()) overrides = load_overrides(overrides_path);
                rows.push_back(coverage_row(names, load_ground_truth(truth_path), overrides));
            }
            if (!rows_path.empty()) {
                const auto rj = read_json_file(rows_path);
                if (!rj.is_array()) throw InputError("--rows must hold a JSON array");
                for (const auto& r : rj) {
                    CoverageRow row;
                    row.app = r.value("app", std::string{});
                    row.inferred = r.at("inferred").get<std::size_t>();
                    row.correct = r.at("correct").get<std::size_t>();
                    row.truth_total = r.value("truth_total", std::size_t{0});
                    row.covered = r.value("covered", std::size_t{0});
                    if (row.correct > row.inferred) throw InputError("row " + row.app + ": correct exceeds inferred");
                    rows.push_back(row);
                }
            }
            if (rows.empty()) throw InputError("coverage needs --suite/--truth or --rows");
            json report = json::array();
            for (const auto& r : rows) report.push_back(to_json(r, coverage_report(r)));
            const auto total = combine_rows(rows);
            emit({{"rows", report}, {"total", to_json(total, coverage_report(total))}});
        } else if (*eval_seg) {
            const auto snap = load_snapshot(bundle);
            const auto segs = segments_from_json(read_json_file(segments_path), snap);
            const auto hyp = segments_to_clustering(segs.candidates, segs.tree);
            const auto truth = load_truth_clustering(read_json_file(truth_path), snap, segs.tree.leaves());
            const auto scores = b3_scores(hyp, truth);
            auto j = to_json(scores);
            j["elements"] = hyp.size();
            write_text_file(out_path, dump_json(j));
            std::cout << "P=" << scores.precision << " R=" << scores.recall << " F1=" << scores.f1 << "\n";
        } else if (*class_stats) {
            std::vector<PageClassCounts> pages;
            for (const auto& p : classified_paths) pages.push_back(count_classes(read_json_file(p)));
            const auto stats = classification_stats(pages);
            emit(to_json(stats));
        } else if (*run) {
            auto cfg = pf.resolve();
            if (run_tolerance) cfg.thresholds.pixel_tolerance = *run_tolerance;
            if (run_uniformity) cfg.thresholds.uniformity = *run_uniformity;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            cfg.validate();
            const auto result = run_pipeline(bundle, cfg, *parse_stage(from));
            for (const auto& a : result.artifacts) std::cout << a.string() << "\n";
            std::cerr << "provider: " << result.stats.requests << " requests, " << result.stats.provider_calls
                      << " calls, " << result.stats.cache_hits << " cache hits, " << result.stats.retries
                      << " retries\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.category()) {
            case Error::Category::input: return kExitInput;
            case Error::Category::provider: return kExitProvider;
            case Error::Category::internal: return kExitInternal;
        }
        return kExitInternal;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << "\n";
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}
