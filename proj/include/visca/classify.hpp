#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/llm.hpp"
#include "visca/snapshot.hpp"
#include "visca/tree.hpp"

namespace visca {

enum class SegmentClass { Container, List, Component };

std::string to_string(SegmentClass c);
std::optional<SegmentClass> parse_segment_class(const std::string& s);

struct SegmentContext {
    std::string title;
    std::string context;
};

// Where a hierarchy node sits relative to the candidate segments.
enum class SegmentRole {
    structural,  // unmarked ancestor of candidates, kept where the hierarchy branches
    candidate,   // marked by candidate extraction
    gap,         // maximal subtree holding no candidate
    inner,       // below a candidate or gap; reached only through Container recursion
};

std::string to_string(SegmentRole r);

struct CandidateHierarchy {
    NodeTree tree;                  // slots aligned with the snapshot
    std::vector<SegmentRole> role;  // per slot
};

// Skeleton of structural nodes over the candidate and gap segments, with
// the pruned subtrees of those segments hanging below. Structural nodes
// with a single child are skipped so candidates attach to the nearest
// kept ancestor.
CandidateHierarchy build_candidate_hierarchy(const NodeTree& pruned, const std::vector<NodeIndex>& candidates);

enum class ClassSource {
    llm,         // provider answer
    list_child,  // assigned because the parent is a List
    fallback,    // unusable answer; default class applied
    depth_cap,   // forced to Component at the recursion cap
};

std::string to_string(ClassSource s);

struct ClassifiedSegment {
    NodeIndex node = 0;
    SegmentClass cls = SegmentClass::Component;
    SegmentContext ctx;
    ClassSource source = ClassSource::llm;
    SegmentRole role = SegmentRole::inner;
    std::string error;
    std::vector<ClassifiedSegment> children;
};

struct ClassifyOptions {
    int max_depth = 6;
    std::string model = "mock";
    double temperature = 0.0;
};

// Page-level description from the full screenshot.
std::string describe_page(const PageSnapshot& snapshot, llm::Gateway& gateway, const ClassifyOptions& opts = {});

// One combined classification + context call for a single segment.
// Throws ClassificationError when the reply has no usable class.
std::pair<SegmentClass, SegmentContext> classify_segment(const PageSnapshot& snapshot,
                                                         const CandidateHierarchy& hierarchy, NodeIndex segment,
                                                         const std::string& page_context,
                                                         const std::vector<SegmentContext>& ancestors,
                                                         llm::Gateway& gateway, const ClassifyOptions& opts = {});

// Top-down classification: Containers recurse, List children become
// Components without calls, Components stop. Ancestors' contexts are
// always produced before their descendants'.
ClassifiedSegment classify_tree(const PageSnapshot& snapshot, const CandidateHierarchy& hierarchy, NodeIndex root,
                                const std::string& page_context, llm::Gateway& gateway,
                                const ClassifyOptions& opts = {});

// classified.json: {page_context, segments: [{id, parent, class, title, context, role, source, error?}]}
nlohmann::json to_json(const ClassifiedSegment& root, const PageSnapshot& snapshot, const std::string& page_context);

struct LoadedClassification {
    ClassifiedSegment root;
    std::string page_context;
};
LoadedClassification classification_from_json(const nlohmann::json& j, const PageSnapshot& snapshot);

// Preorder visit helper.
template <typename F>
void for_each_segment(const ClassifiedSegment& s, F&& f, int depth = 0) {
    f(s, depth);
    for (const auto& c : s.children) for_each_segment(c, f, depth + 1);
}

}  // namespace visca
