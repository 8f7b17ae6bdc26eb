#include "visca/tree.hpp"

#include <algorithm>

#include "visca/errors.hpp"

namespace visca {

NodeTree::NodeTree(std::size_t slots)
    : ids_(slots), labels_(slots), parents_(slots), children_(slots), present_(slots, false) {}

void NodeTree::define(NodeIndex i, std::string id, std::string label) {
    if (i >= slot_count()) throw InternalError("NodeTree::define: slot out of range");
    ids_[i] = std::move(id);
    labels_[i] = std::move(label);
    present_[i] = true;
}

NodeIndex NodeTree::add(std::string id, std::string label) {
    ids_.push_back(std::move(id));
    labels_.push_back(std::move(label));
    parents_.emplace_back();
    children_.emplace_back();
    present_.push_back(true);
    return ids_.size() - 1;
}

void NodeTree::set_root(NodeIndex i) {
    if (!contains(i)) throw InternalError("NodeTree::set_root: absent slot");
    root_ = i;
    parents_[i].reset();
}

void NodeTree::attach(NodeIndex parent, NodeIndex child) {
    if (!contains(parent) || !contains(child)) throw InternalError("NodeTree::attach: absent slot");
    parents_[child] = parent;
    children_[parent].push_back(child);
}

void NodeTree::splice_out(NodeIndex node) {
    const auto p = parents_[node];
    if (!p) throw InternalError("NodeTree::splice_out: cannot remove the root");
    auto& siblings = children_[*p];
    auto pos = std::find(siblings.begin(), siblings.end(), node);
    auto grandchildren = std::move(children_[node]);
    children_[node].clear();
    for (NodeIndex g : grandchildren) parents_[g] = *p;
    pos = siblings.erase(pos);
    siblings.insert(pos, grandchildren.begin(), grandchildren.end());
    parents_[node].reset();
    present_[node] = false;
}

std::optional<NodeIndex> NodeTree::find(const std::string& id) const {
    for (NodeIndex i : preorder()) {
        if (ids_[i] == id) return i;
    }
    return std::nullopt;
}

std::size_t NodeTree::size() const {
    return root_ ? subtree_size(*root_) : 0;
}

std::size_t NodeTree::subtree_size(NodeIndex i) const {
    std::size_t n = 0;
    std::vector<NodeIndex> stack{i};
    while (!stack.empty()) {
        const NodeIndex cur = stack.back();
        stack.pop_back();
        ++n;
        stack.insert(stack.end(), children_[cur].begin(), children_[cur].end());
    }
    return n;
}

std::vector<NodeIndex> NodeTree::preorder() const {
    if (!root_) return {};
    return preorder(*root_);
}

std::vector<NodeIndex> NodeTree::preorder(NodeIndex from) const {
    std::vector<NodeIndex> out;
    std::vector<NodeIndex> stack{from};
    while (!stack.empty()) {
        const NodeIndex cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        const auto& kids = children_[cur];
        stack.insert(stack.end(), kids.rbegin(), kids.rend());
    }
    return out;
}

std::vector<NodeIndex> NodeTree::postorder() const {
    std::vector<NodeIndex> out;
    if (!root_) return out;
    // Reverse of a right-to-left preorder.
    std::vector<NodeIndex> stack{*root_};
    while (!stack.empty()) {
        const NodeIndex cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        const auto& kids = children_[cur];
        stack.insert(stack.end(), kids.begin(), kids.end());
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<NodeIndex> NodeTree::leaves() const {
    std::vector<NodeIndex> out;
    for (NodeIndex i : preorder()) {
        if (children_[i].empty()) out.push_back(i);
    }
    return out;
}

bool NodeTree::is_ancestor(NodeIndex ancestor, NodeIndex node) const {
    auto cur = parents_[node];
    while (cur) {
        if (*cur == ancestor) return true;
        cur = parents_[*cur];
    }
    return false;
}

bool operator==(const NodeTree& a, const NodeTree& b) {
    if (a.root().has_value() != b.root().has_value()) return false;
    if (!a.root()) return true;
    // Structural comparison by id, label and child order.
    std::vector<std::pair<NodeIndex, NodeIndex>> stack{{*a.root(), *b.root()}};
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        if (a.id(x) != b.id(y) || a.label(x) != b.label(y)) return false;
        const auto& cx = a.children(x);
        const auto& cy = b.children(y);
        if (cx.size() != cy.size()) return false;
        for (std::size_t k = 0; k < cx.size(); ++k) stack.emplace_back(cx[k], cy[k]);
    }
    return true;
}

}  // namespace visca
