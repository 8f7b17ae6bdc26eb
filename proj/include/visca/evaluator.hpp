#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/classify.hpp"
#include "visca/snapshot.hpp"
#include "visca/tree.hpp"

namespace visca {

// element id -> cluster id
struct Clustering {
    std::map<std::string, std::string> cluster_of;

    std::size_t size() const noexcept { return cluster_of.size(); }
};

struct B3Scores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

// Atomic elements are the tree's leaves; each goes to the cluster of its
// nearest segment ancestor (inclusive), or to a singleton cluster.
// Throws InvalidSegmentation when one segment lies inside another or a
// segment is not in the tree.
Clustering segments_to_clustering(const std::vector<NodeIndex>& segments, const NodeTree& tree);

// Throws ElementMismatch when the element sets differ.
B3Scores b3_scores(const Clustering& hypothesis, const Clustering& truth);

// Truth file: JSON object mapping element id or XPath ("/html/body/div[2]")
// to cluster id. Keys may name inner nodes; each element takes the cluster
// of its nearest listed DOM ancestor-or-self (finest granularity wins), and
// elements with none become singletons.
Clustering load_truth_clustering(const nlohmann::json& j, const PageSnapshot& snapshot,
                                 const std::vector<NodeIndex>& elements);

// Resolves an absolute XPath of element steps (tag or tag[k]).
std::optional<NodeIndex> resolve_xpath(const PageSnapshot& snapshot, const std::string& xpath);

struct ClassificationStats {
    double avg_segments = 0;
    double component_fraction = 0;
    double non_component_fraction = 0;
};

// Class counts over every segment of one page's classified tree.
struct PageClassCounts {
    std::size_t components = 0;
    std::size_t non_components = 0;
};
PageClassCounts count_classes(const ClassifiedSegment& root);
// Same counts read from a classified.json document.
PageClassCounts count_classes(const nlohmann::json& classified);

// Per-page fractions averaged over pages. Throws InputError when empty.
ClassificationStats classification_stats(const std::vector<PageClassCounts>& pages);

// "74.5% / 25.5%"
std::string format_fractions(const ClassificationStats& s);

nlohmann::json to_json(const B3Scores& s);
nlohmann::json to_json(const ClassificationStats& s);

}  // namespace visca
