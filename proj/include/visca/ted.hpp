#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "visca/tree.hpp"

namespace visca {

// Unit-cost ordered tree edit distance (insert, delete, relabel) between
// the subtrees rooted at `a` and `b`. Labels are compared as strings.
// Zhang-Shasha keyroot dynamic programme.
std::size_t tree_edit_distance(const NodeTree& ta, NodeIndex a, const NodeTree& tb, NodeIndex b);

// Canonical text of a labeled ordered subtree: label(child,child,...).
// Two subtrees have distance 0 exactly when their shapes are equal.
std::string subtree_shape(const NodeTree& tree, NodeIndex root);

// Memoizing distance oracle over one tree. Subtrees are interned by shape,
// so repeated structures (list items, table rows) are compared once.
class DistanceCache {
public:
    explicit DistanceCache(const NodeTree& tree);

    std::size_t distance(NodeIndex a, NodeIndex b);
    const std::string& shape(NodeIndex i);
    std::size_t shape_id(NodeIndex i);

    std::size_t computed_pairs() const noexcept { return computed_; }

private:
    struct PairHash {
        std::size_t operator()(const std::pair<std::size_t, std::size_t>& p) const noexcept {
            return std::hash<std::size_t>()(p.first) * 1000003u ^ std::hash<std::size_t>()(p.second);
        }
    };

    const NodeTree& tree_;
    std::unordered_map<NodeIndex, std::size_t> node_shape_;
    std::unordered_map<std::string, std::size_t> shape_ids_;
    std::vector<std::string> shapes_;
    std::unordered_map<std::pair<std::size_t, std::size_t>, std::size_t, PairHash> distances_;
    std::size_t computed_ = 0;
};

}  // namespace visca
