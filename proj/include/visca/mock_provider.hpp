#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/llm.hpp"

namespace visca::llm {

// Deterministic rule-based provider used by tests and offline runs. It
// reads the structured INPUT block of each request:
//  - describe_page: "Unknown page" for a blank screenshot, otherwise a
//    sentence built from the page title and first heading;
//  - classify_segment: List when >= 3 children share one shape (>= 2 if
//    they have children of their own), Container when >= 2 children differ
//    in tag and at least one has children, Component otherwise. Title:
//    first heading for List/Container, else longest visible text, else
//    aria-label/placeholder/alt/value/name; untitled Lists use the
//    humanized first class name or "List of N items". 40 chars max;
//  - transform_component: tag rule table (img, a, button, input, select,
//    textarea, table, ul/ol, nav, header, footer, form; otherwise Card or
//    Container by child count at the root, transparent below it);
//  - infer_features: one feature per interactive node.
class MockProvider : public Provider {
public:
    struct Call {
        std::string task;
        std::string subject;  // segment id, component name, or empty
    };

    std::string name() const override { return "mock"; }
    CompletionResponse complete(const CompletionRequest& request) override;

    std::vector<Call> calls() const;
    std::size_t call_count(const std::string& task) const;
    std::size_t call_count() const;
    void reset();

    static nlohmann::json describe_page(const nlohmann::json& input, const RgbImage* screenshot);
    static nlohmann::json classify_segment(const nlohmann::json& input);
    static nlohmann::json transform_component(const nlohmann::json& input);
    static nlohmann::json infer_features(const nlohmann::json& input);

private:
    mutable std::mutex mutex_;
    std::vector<Call> calls_;
};

}  // namespace visca::llm
