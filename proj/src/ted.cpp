#include "visca/ted.hpp"

#include <algorithm>

namespace visca {

namespace {

// Postorder flattening used by the keyroot recurrence (1-based arrays).
struct Flat {
    std::vector<const std::string*> label;  // label[i] for postorder i
    std::vector<std::size_t> leftmost;      // leftmost leaf descendant
    std::vector<std::size_t> keyroots;
};

Flat flatten(const NodeTree& tree, NodeIndex root) {
    Flat f;
    f.label.push_back(nullptr);
    f.leftmost.push_back(0);

    // Iterative postorder keeping, per frame, the position of its first leaf.
    struct Frame {
        NodeIndex node;
        std::size_t next_child;
        std::size_t leftmost;
    };
    std::vector<Frame> stack{{root, 0, 0}};
    while (!stack.empty()) {
        auto& top = stack.back();
        const auto& kids = tree.children(top.node);
        if (top.next_child < kids.size()) {
            const NodeIndex child = kids[top.next_child++];
            stack.push_back({child, 0, 0});
            continue;
        }
        const std::size_t pos = f.label.size();
        const std::size_t lm = kids.empty() ? pos : top.leftmost;
        f.label.push_back(&tree.label(top.node));
        f.leftmost.push_back(lm);
        stack.pop_back();
        if (!stack.empty() && stack.back().next_child == 1) stack.back().leftmost = lm;
    }

    // Keyroots: highest node for each distinct leftmost leaf.
    const std::size_t n = f.label.size() - 1;
    std::vector<bool> taken(n + 1, false);
    for (std::size_t i = n; i >= 1; --i) {
        if (!taken[f.leftmost[i]]) {
            taken[f.leftmost[i]] = true;
            f.keyroots.push_back(i);
        }
    }
    std::sort(f.keyroots.begin(), f.keyroots.end());
    return f;
}

}  // namespace

std::size_t tree_edit_distance(const NodeTree& ta, NodeIndex a, const NodeTree& tb, NodeIndex b) {
    const Flat A = flatten(ta, a);
    const Flat B = flatten(tb, b);
    const std::size_t n = A.label.size() - 1;
    const std::size_t m = B.label.size() - 1;

    std::vector<std::size_t> td((n + 1) * (m + 1), 0);
    auto tree_dist = [&](std::size_t i, std::size_t j) -> std::size_t& { return td[i * (m + 1) + j]; };
    std::vector<std::size_t> fd((n + 2) * (m + 2), 0);

    for (std::size_t i : A.keyroots) {
        for (std::size_t j : B.keyroots) {
            const std::size_t li = A.leftmost[i];
            const std::size_t lj = B.leftmost[j];
            const std::size_t rows = i - li + 2;
            const std::size_t cols = j - lj + 2;
            // forest distance indexed relative to (li-1, lj-1)
            auto forest = [&](std::size_t x, std::size_t y) -> std::size_t& { return fd[x * cols + y]; };
            forest(0, 0) = 0;
            for (std::size_t x = 1; x < rows; ++x) forest(x, 0) = forest(x - 1, 0) + 1;
            for (std::size_t y = 1; y < cols; ++y) forest(0, y) = forest(0, y - 1) + 1;
            for (std::size_t x = 1; x < rows; ++x) {
                const std::size_t i1 = li + x - 1;
                for (std::size_t y = 1; y < cols; ++y) {
                    const std::size_t j1 = lj + y - 1;
                    const std::size_t del = forest(x - 1, y) + 1;
                    const std::size_t ins = forest(x, y - 1) + 1;
                    if (A.leftmost[i1] == li && B.leftmost[j1] == lj) {
                        const std::size_t rel = forest(x - 1, y - 1) + (*A.label[i1] == *B.label[j1] ? 0 : 1);
                        forest(x, y) = std::min({del, ins, rel});
                        tree_dist(i1, j1) = forest(x, y);
                    } else {
                        const std::size_t px = A.leftmost[i1] - li;
                        const std::size_t py = B.leftmost[j1] - lj;
                        forest(x, y) = std::min({del, ins, forest(px, py) + tree_dist(i1, j1)});
                    }
                }
            }
        }
    }
    return tree_dist(n, m);
}

std::string subtree_shape(const NodeTree& tree, NodeIndex root) {
    std::string out = tree.label(root);
    const auto& kids = tree.children(root);
    if (!kids.empty()) {
        out += '(';
        for (std::size_t k = 0; k < kids.size(); ++k) {
            if (k) out += ',';
            out += subtree_shape(tree, kids[k]);
        }
        out += ')';
    }
    return out;
}

DistanceCache::DistanceCache(const NodeTree& tree) : tree_(tree) {}

std::size_t DistanceCache::shape_id(NodeIndex i) {
    if (auto it = node_shape_.find(i); it != node_shape_.end()) return it->second;
    // Build from children's interned shapes so each subtree text is
    // assembled once.
    std::string text = tree_.label(i);
    const auto& kids = tree_.children(i);
    if (!kids.empty()) {
        text += '(';
        for (std::size_t k = 0; k < kids.size(); ++k) {
            if (k) text += ',';
            text += shapes_[shape_id(kids[k])];
        }
        text += ')';
    }
    auto [it, inserted] = shape_ids_.emplace(std::move(text), shapes_.size());
    if (inserted) shapes_.push_back(it->first);
    node_shape_.emplace(i, it->second);
    return it->second;
}

const std::string& DistanceCache::shape(NodeIndex i) { return shapes_[shape_id(i)]; }

std::size_t DistanceCache::distance(NodeIndex a, NodeIndex b) {
    std::size_t sa = shape_id(a);
    std::size_t sb = shape_id(b);
    if (sa == sb) return 0;
    if (sa > sb) std::swap(sa, sb);
    if (auto it = distances_.find({sa, sb}); it != distances_.end()) return it->second;
    const std::size_t d = tree_edit_distance(tree_, a, tree_, b);
    ++computed_;
    distances_.emplace(std::make_pair(sa, sb), d);
    return d;
}

}  // namespace visca
