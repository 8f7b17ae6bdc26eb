#include "visca/prompts.hpp"

namespace visca::prompts {

namespace {
constexpr std::string_view kInputHeader = "INPUT:\n```json\n";
}

llm::CompletionRequest make_request(const std::string& model, const std::string& instructions,
                                    const nlohmann::json& input, const std::optional<RgbImage>& image,
                                    double temperature) {
    llm::CompletionRequest req;
    req.model = model;
    req.temperature = temperature;
    req.text(instructions);
    if (image) req.image(*image);
    req.text(std::string(kInputHeader) + input.dump(2) + "\n```");
    return req;
}

std::optional<nlohmann::json> find_input(const llm::CompletionRequest& request) {
    for (auto it = request.parts.rbegin(); it != request.parts.rend(); ++it) {
        const auto* t = std::get_if<llm::TextPart>(&*it);
        if (!t || t->text.rfind(kInputHeader, 0) != 0) continue;
        auto body = t->text.substr(kInputHeader.size());
        const auto end = body.rfind("\n```");
        if (end != std::string::npos) body.resize(end);
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

const RgbImage* find_image(const llm::CompletionRequest& request) {
    for (const auto& part : request.parts) {
        if (const auto* img = std::get_if<llm::ImagePart>(&part)) return img->image.get();
    }
    return nullptr;
}

std::string describe_page_instructions() {
    return R"(You are analysing a screenshot of a web application page.
Describe the purpose of the page in one or two sentences, as a tester would
summarise it before exploring the application. Use the page title and the
visible texts listed in INPUT as hints.

Reply with a JSON object: {"description": "<text>"})";
}

std::string classify_instructions() {
    return R"(You classify one segment of a web page. The image shows the segment's
rendering; INPUT holds its HTML, a summary of its child segments, the page
description and the titles/descriptions of its ancestor segments.

Segment categories:
- Container: groups sub-segments by layout or hierarchy without strong
  semantic cohesion. Children may be of any category.
- List: groups several instances of the same conceptual entity that play
  the same role. Children are Components built from one template.
- Component: a coherent unit of information and functionality, an
  instance of a common UI template (card, navigation bar, form, ...).
  Components may nest Lists or smaller Components.

Think step by step: look at the internal homogeneity of the content and of
the structure, compare the children with each other, and decide which
category fits best. Then give the segment a short title and a one to three
sentence description of its role on the page, taking the ancestors into
account.

Reply with a JSON object:
{"reasoning": "<your step by step analysis>",
 "class": "Container" | "List" | "Component",
 "title": "<short title>",
 "context": "<description>"})";
}

std::string transform_instructions(const nlohmann::json& vocabulary) {
    std::string text = R"(You convert one UI component of a web page into an abstraction built only
from the common templates listed below. The image shows the component; INPUT
holds its HTML (every element has a data-visca-id), its title and the
descriptions of its ancestor segments.

Rules:
- Use only template names from the vocabulary.
- Keep every visible text, link target (href), image source (src),
  placeholder and value that appears in the HTML, either as the node
  name or as an attribute.
- Set "source" to the data-visca-id of the element each node stands for.

Reply with one JSON node:
{"template": "<name>", "name": "<semantic label>", "attrs": {"<k>": "<v>"},
 "source": "<data-visca-id>", "children": [<nodes>]}

Vocabulary:
)";
    for (const auto& entry : vocabulary) {
        text += "- " + entry.at("name").get<std::string>() + ": " + entry.at("definition").get<std::string>() + "\n";
    }
    return text;
}

std::string infer_features_instructions() {
    return R"(You infer the user-facing features offered by one UI component of a web
application. INPUT holds the component abstraction (JSX-like markup and
JSON), the page description and the component's ancestors.

For each feature give an imperative name, the ordered user actions that
exercise it and a hint for the assertion that shows it worked. Action kinds:
click, type, select, navigate, assert_visible, assert_text. Targets are
"@<source id>" references to nodes of the abstraction or CSS selectors.

Reply with a JSON object:
{"features": [{"name": "<feature>",
               "actions": [{"kind": "click", "target": "@n12", "value": null}],
               "assertion_hint": "<text>",
               "assertion_target": "@n7"}]})";
}

std::string unknown_template_repair(const std::vector<std::string>& unknown) {
    std::string names;
    for (const auto& u : unknown) {
        if (!names.empty()) names += ", ";
        names += u;
    }
    return "Your reply used template names that are not in the vocabulary: " + names +
           ". Reply again with the same JSON structure using only vocabulary names.";
}

}  // namespace visca::prompts
