#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/classify.hpp"
#include "visca/llm.hpp"
#include "visca/snapshot.hpp"
#include "visca/vocabulary.hpp"

namespace visca {

struct AbstractNode {
    std::string template_name;
    std::string name;
    std::map<std::string, std::string> attrs;
    std::vector<AbstractNode> children;
    std::optional<std::size_t> count;   // List nodes: original item count
    std::optional<std::string> segment;  // segment this node was produced for
    std::optional<std::string> source;   // snapshot node id it stands for

    friend bool operator==(const AbstractNode&, const AbstractNode&) = default;
};

nlohmann::json to_json(const AbstractNode& node);
AbstractNode abstract_node_from_json(const nlohmann::json& j);

struct AbstractionOptions {
    std::string model = "mock";
    double temperature = 0.0;
};

class Abstractor {
public:
    Abstractor(const PageSnapshot& snapshot, const TemplateVocabulary& vocabulary, llm::Gateway& gateway,
               std::string page_context, AbstractionOptions opts = {});

    AbstractNode transform_component(const ClassifiedSegment& segment, const std::vector<SegmentContext>& ancestors);
    AbstractNode transform_list(const ClassifiedSegment& segment, const std::vector<SegmentContext>& ancestors);
    AbstractNode transform_container(const ClassifiedSegment& segment, const std::vector<SegmentContext>& ancestors);
    AbstractNode transform_page(const ClassifiedSegment& root);

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    std::size_t component_calls() const noexcept { return component_calls_; }

private:
    AbstractNode transform(const ClassifiedSegment& segment, std::vector<SegmentContext>& ancestors);
    std::vector<std::string> unknown_templates(const AbstractNode& node) const;
    void substitute_unknown(AbstractNode& node, const std::string& segment_id);

    const PageSnapshot& snapshot_;
    const TemplateVocabulary& vocabulary_;
    llm::Gateway& gateway_;
    std::string page_context_;
    AbstractionOptions opts_;
    std::vector<std::string> warnings_;
    std::size_t component_calls_ = 0;
};

// Representative item of a List segment: largest original DOM subtree,
// ties broken by document order. Requires at least one child.
const ClassifiedSegment& representative_child(const PageSnapshot& snapshot, const ClassifiedSegment& list);

// abstraction.json: {page_context, warnings, abstraction}
struct AbstractionDocument {
    AbstractNode root;
    std::string page_context;
    std::vector<std::string> warnings;
};
nlohmann::json to_json(const AbstractionDocument& doc);
AbstractionDocument abstraction_from_json(const nlohmann::json& j);

// JSX-like markup: name first, then count, then attributes by name.
std::string render_markup(const AbstractNode& root);
AbstractNode parse_markup(const std::string& markup);

// Hrefs, srcs and visible texts of an html_snippet that the abstraction
// does not carry in any name or attribute value.
std::vector<std::string> missing_content(const std::string& html_snippet, const AbstractNode& abstraction);

}  // namespace visca
