#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/abstractor.hpp"
#include "visca/classify.hpp"
#include "visca/llm.hpp"
#include "visca/prune.hpp"
#include "visca/segmenter.hpp"
#include "visca/snapshot.hpp"
#include "visca/testgen.hpp"
#include "visca/vocabulary.hpp"

namespace visca {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
    std::string provider = "mock";  // mock | http
    std::string endpoint;           // http: chat-completions URL
    std::string model = "mock";
    std::string api_key;            // never serialized
    double temperature = 0.0;
    std::optional<std::filesystem::path> cache_dir;
    PruneThresholds thresholds;
    int max_depth = 6;
    int concurrency = 4;
    int max_retries = 2;
    int timeout_seconds = 120;
    std::optional<std::filesystem::path> vocabulary;
    std::filesystem::path out_dir = "visca-out";

    // Throws InputError naming the offending field.
    void validate() const;
};

// Replaces ${NAME} in every string value with the environment variable;
// unset variables raise InputError.
nlohmann::json interpolate_env(const nlohmann::json& j);

// Keys override `base`; unknown keys raise InputError.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
nlohmann::json to_json(const PipelineConfig& cfg);  // without the API key

// Gateway for the configured provider. The API key falls back to
// $VISCA_API_KEY.
std::unique_ptr<llm::Gateway> make_gateway(const PipelineConfig& cfg);
TemplateVocabulary load_vocabulary(const PipelineConfig& cfg);

// ---------------------------------------------------------------- stages

struct SegmentStage {
    NodeTree pruned;
    PruneReport report;
    Segmentation segmentation;
};
SegmentStage run_segmentation(const PageSnapshot& snapshot, const PruneThresholds& thresholds);

struct ClassifyStage {
    std::string page_context;
    ClassifiedSegment root;
};
ClassifyStage run_classification(const PageSnapshot& snapshot, const LoadedSegments& segments, llm::Gateway& gateway,
                                 const ClassifyOptions& opts);

AbstractionDocument run_abstraction(const PageSnapshot& snapshot, const LoadedClassification& classified,
                                    const TemplateVocabulary& vocabulary, llm::Gateway& gateway,
                                    const AbstractionOptions& opts);

TestSuite run_testgen(const AbstractionDocument& doc, const PageSnapshot& snapshot, llm::Gateway& gateway,
                      const TestgenOptions& opts);

enum class Stage { prune, segment, classify, abstract, testgen };
std::string to_string(Stage s);
std::optional<Stage> parse_stage(const std::string& s);

struct RunResult {
    std::vector<std::filesystem::path> artifacts;
    llm::GatewayStats stats;
};

// prune -> segment -> classify -> abstract -> testgen into cfg.out_dir.
// Artifacts are written as <name>.partial and renamed once every stage
// succeeded; on failure the .partial files stay and the error names the
// stage. Stages before `from` read their artifacts from the output
// directory (final or .partial). `gateway` overrides the configured one.
RunResult run_pipeline(const std::filesystem::path& bundle, const PipelineConfig& cfg, Stage from = Stage::prune,
                       llm::Gateway* gateway = nullptr);

// Helpers shared with the CLI.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string dump_json(const nlohmann::json& j);

}  // namespace visca
