#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/snapshot.hpp"
#include "visca/tree.hpp"

namespace visca {

struct PotentialScore {
    std::string node_id;
    std::size_t size = 1;
    double sibling_distance_sum = 0.0;
    double psi = 0.0;
};

// psi = ln(size / (1 + sibling_distance_sum))
double potential_value(std::size_t size, double sibling_distance_sum);

struct CandidateMarking {
    std::string node_id;
    bool is_candidate = false;
    double assigned_potential = 0.0;
};

// Potentials and candidate marks for every node of a tree, indexed by slot.
struct Segmentation {
    std::vector<PotentialScore> scores;
    std::vector<CandidateMarking> marks;
    std::vector<NodeIndex> candidates;  // document order

    const PotentialScore& score(NodeIndex i) const { return scores.at(i); }
    const CandidateMarking& mark(NodeIndex i) const { return marks.at(i); }
};

// Computes size, sibling distance sums and psi for every node of `tree`.
// Siblings are the other children of the node's parent; distances are
// unit-cost tree edit distances over tag labels.
std::vector<PotentialScore> compute_potentials(const NodeTree& tree);

// Post-order marking: a node is marked when its own psi is at least the
// sum of its children's assigned potentials; marking clears every mark
// below it. Returns the marks and the flat candidate list.
Segmentation mark_candidate_segments(const NodeTree& tree, std::vector<PotentialScore> scores);
Segmentation mark_candidate_segments(const NodeTree& tree);

// segments.json rows: {id, parent, size, distance_sum, psi, assigned_potential, is_candidate}
nlohmann::json to_json(const NodeTree& tree, const Segmentation& seg);

// Rebuilds the tree and candidate list written by to_json(); tree slots
// are aligned with the snapshot's node indices.
struct LoadedSegments {
    NodeTree tree;
    std::vector<NodeIndex> candidates;
};
LoadedSegments segments_from_json(const nlohmann::json& j, const PageSnapshot& snapshot);

}  // namespace visca
