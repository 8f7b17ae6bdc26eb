#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/image.hpp"
#include "visca/llm.hpp"

namespace visca::prompts {

// Every request carries its structured inputs as the last "INPUT:" text
// part, a fenced JSON object with a "task" key. Instructions come first.
inline constexpr const char* kDescribePage = "describe_page";
inline constexpr const char* kClassifySegment = "classify_segment";
inline constexpr const char* kTransformComponent = "transform_component";
inline constexpr const char* kInferFeatures = "infer_features";

llm::CompletionRequest make_request(const std::string& model, const std::string& instructions,
                                    const nlohmann::json& input, const std::optional<RgbImage>& image,
                                    double temperature = 0.0);

// Structured input of a request built by make_request(), if any.
std::optional<nlohmann::json> find_input(const llm::CompletionRequest& request);

// First image part of a request, if any.
const RgbImage* find_image(const llm::CompletionRequest& request);

std::string describe_page_instructions();
std::string classify_instructions();
std::string transform_instructions(const nlohmann::json& vocabulary);
std::string infer_features_instructions();
std::string unknown_template_repair(const std::vector<std::string>& unknown);

}  // namespace visca::prompts
