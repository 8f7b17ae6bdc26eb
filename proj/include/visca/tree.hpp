#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace visca {

using NodeIndex = std::size_t;

// Ordered, labeled tree over a fixed slot table. Slots are usually aligned
// with PageSnapshot::nodes, so a slot index doubles as a snapshot index.
// Slots may be absent (hidden or pruned nodes); only slots reachable from
// the root belong to the tree.
class NodeTree {
public:
    NodeTree() = default;

    // Reserves `slots` absent slots.
    explicit NodeTree(std::size_t slots);

    std::size_t slot_count() const noexcept { return ids_.size(); }

    // Declares slot `i` as present with the given id and label.
    void define(NodeIndex i, std::string id, std::string label);
    NodeIndex add(std::string id, std::string label);

    void set_root(NodeIndex i);
    // Appends `child` to `parent`'s children (document order).
    void attach(NodeIndex parent, NodeIndex child);

    // Removes `node` and splices its children into its parent in place.
    void splice_out(NodeIndex node);

    std::optional<NodeIndex> root() const noexcept { return root_; }
    bool contains(NodeIndex i) const noexcept { return i < present_.size() && present_[i]; }
    std::optional<NodeIndex> parent(NodeIndex i) const noexcept { return parents_[i]; }
    const std::vector<NodeIndex>& children(NodeIndex i) const noexcept { return children_[i]; }
    const std::string& id(NodeIndex i) const noexcept { return ids_[i]; }
    const std::string& label(NodeIndex i) const noexcept { return labels_[i]; }
    bool is_leaf(NodeIndex i) const noexcept { return children_[i].empty(); }

    std::optional<NodeIndex> find(const std::string& id) const;

    // Number of nodes reachable from the root.
    std::size_t size() const;
    std::size_t subtree_size(NodeIndex i) const;

    std::vector<NodeIndex> preorder() const;
    std::vector<NodeIndex> preorder(NodeIndex from) const;
    std::vector<NodeIndex> postorder() const;
    std::vector<NodeIndex> leaves() const;

    bool is_ancestor(NodeIndex ancestor, NodeIndex node) const;

private:
    std::vector<std::string> ids_;
    std::vector<std::string> labels_;
    std::vector<std::optional<NodeIndex>> parents_;
    std::vector<std::vector<NodeIndex>> children_;
    std::vector<bool> present_;
    std::optional<NodeIndex> root_;
};

bool operator==(const NodeTree& a, const NodeTree& b);

}  // namespace visca
