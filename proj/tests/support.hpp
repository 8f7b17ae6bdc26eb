#pragma once

// Shared helpers and independent oracles for the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "visca/evaluator.hpp"
#include "visca/image.hpp"
#include "visca/llm.hpp"
#include "visca/prompts.hpp"
#include "visca/prune.hpp"
#include "visca/segmenter.hpp"
#include "visca/snapshot.hpp"
#include "visca/tree.hpp"

namespace vt {

using visca::NodeIndex;
using visca::NodeTree;

inline std::filesystem::path fixtures_dir() { return VISCA_FIXTURES_DIR; }
inline std::filesystem::path test_data_dir() { return VISCA_TEST_DATA_DIR; }

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("visca-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// ------------------------------------------------------------ plain trees

struct OTree {
    std::string label;
    std::vector<OTree> kids;
};
using Forest = std::vector<OTree>;

inline std::size_t forest_size(const Forest& f) {
    std::size_t n = 0;
    for (const auto& t : f) n += 1 + forest_size(t.kids);
    return n;
}

inline std::string encode(const Forest& f);
inline std::string encode(const OTree& t) { return t.label + "(" + encode(t.kids) + ")"; }
inline std::string encode(const Forest& f) {
    std::string s;
    for (const auto& t : f) s += encode(t);
    return s;
}

inline NodeTree to_node_tree(const OTree& t) {
    NodeTree tree;
    std::function<NodeIndex(const OTree&)> add = [&](const OTree& n) {
        const NodeIndex i = tree.add("n" + std::to_string(tree.slot_count()), n.label);
        for (const auto& k : n.kids) tree.attach(i, add(k));
        return i;
    };
    tree.set_root(add(t));
    return tree;
}

inline OTree from_node_tree(const NodeTree& tree, NodeIndex i) {
    OTree t{tree.label(i), {}};
    for (NodeIndex c : tree.children(i)) t.kids.push_back(from_node_tree(tree, c));
    return t;
}

// Random ordered tree: each new node hangs off a uniformly chosen earlier
// node, which gives a spread of deep and bushy shapes.
inline OTree random_otree(std::mt19937& rng, int nodes, const std::vector<std::string>& labels) {
    std::uniform_int_distribution<std::size_t> pick_label(0, labels.size() - 1);
    std::vector<int> parent(static_cast<std::size_t>(nodes), -1);
    for (int i = 1; i < nodes; ++i) parent[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, i - 1)(rng);
    std::vector<std::vector<int>> kids(static_cast<std::size_t>(nodes));
    for (int i = 1; i < nodes; ++i) kids[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])].push_back(i);
    std::vector<std::string> lab(static_cast<std::size_t>(nodes));
    for (auto& l : lab) l = labels[pick_label(rng)];
    std::function<OTree(int)> build = [&](int i) {
        OTree t{lab[static_cast<std::size_t>(i)], {}};
        for (int k : kids[static_cast<std::size_t>(i)]) t.kids.push_back(build(k));
        return t;
    };
    return build(0);
}

inline NodeTree random_tree(std::mt19937& rng, int max_nodes, const std::vector<std::string>& labels) {
    const int n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
    return to_node_tree(random_otree(rng, n, labels));
}

// ------------------------------------------------------- TED oracles

// Textbook recursive forest distance on rightmost roots, memoized on the
// encoded pair. Independent of the keyroot formulation.
class RecursiveTed {
public:
    std::size_t distance(const OTree& a, const OTree& b) { return forest({a}, {b}); }

    std::size_t forest(const Forest& f, const Forest& g) {
        if (f.empty() && g.empty()) return 0;
        if (f.empty()) return forest_size(g);
        if (g.empty()) return forest_size(f);
        const auto key = encode(f) + "|" + encode(g);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        const OTree& v = f.back();
        const OTree& w = g.back();
        Forest f_minus_v(f.begin(), f.end() - 1);
        f_minus_v.insert(f_minus_v.end(), v.kids.begin(), v.kids.end());
        Forest g_minus_w(g.begin(), g.end() - 1);
        g_minus_w.insert(g_minus_w.end(), w.kids.begin(), w.kids.end());
        const Forest f_rest(f.begin(), f.end() - 1);
        const Forest g_rest(g.begin(), g.end() - 1);

        std::size_t best = forest(f_minus_v, g) + 1;
        best = std::min(best, forest(f, g_minus_w) + 1);
        best = std::min(best, forest(v.kids, w.kids) + forest(f_rest, g_rest) + (v.label == w.label ? 0 : 1));
        memo_.emplace(key, best);
        return best;
    }

private:
    std::unordered_map<std::string, std::size_t> memo_;
};

// Every result of applying one unit edit (relabel, delete, insert) to a
// forest, never growing it beyond `max_size` nodes.
inline void single_edits(const Forest& f, const std::vector<std::string>& labels, std::size_t max_size,
                         std::size_t total_size, std::vector<Forest>& out) {
    // Insert a node at this level adopting the sibling range [i, j).
    if (total_size < max_size) {
        for (std::size_t i = 0; i <= f.size(); ++i) {
            for (std::size_t j = i; j <= f.size(); ++j) {
                for (const auto& l : labels) {
                    Forest g(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(i));
                    OTree n{l, Forest(f.begin() + static_cast<std::ptrdiff_t>(i), f.begin() + static_cast<std::ptrdiff_t>(j))};
                    g.push_back(std::move(n));
                    g.insert(g.end(), f.begin() + static_cast<std::ptrdiff_t>(j), f.end());
                    out.push_back(std::move(g));
                }
            }
        }
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        // Delete root i, splicing its children in place.
        {
            Forest g(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(i));
            g.insert(g.end(), f[i].kids.begin(), f[i].kids.end());
            g.insert(g.end(), f.begin() + static_cast<std::ptrdiff_t>(i) + 1, f.end());
            out.push_back(std::move(g));
        }
        for (const auto& l : labels) {
            if (l == f[i].label) continue;
            Forest g = f;
            g[i].label = l;
            out.push_back(std::move(g));
        }
        std::vector<Forest> inner;
        single_edits(f[i].kids, labels, max_size, total_size, inner);
        for (auto& k : inner) {
            Forest g = f;
            g[i].kids = std::move(k);
            out.push_back(std::move(g));
        }
    }
}

// Edit graph over every forest of at most `max_size` nodes; BFS from a
// tree gives its exact edit distance to every other tree. An optimal script
// can always delete first and insert last, so intermediate forests never
// exceed the larger of the two trees.
class EditGraph {
public:
    EditGraph(std::vector<std::string> labels, std::size_t max_size) : labels_(std::move(labels)), max_(max_size) {
        intern(Forest{});
        for (std::size_t at = 0; at < states_.size(); ++at) {
            std::vector<Forest> next;
            single_edits(states_[at], labels_, max_, forest_size(states_[at]), next);
            std::vector<std::uint32_t> adj;
            adj.reserve(next.size());
            for (auto& n : next) adj.push_back(intern(std::move(n)));
            std::sort(adj.begin(), adj.end());
            adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
            edges_.push_back(std::move(adj));
        }
    }

    std::size_t state_count() const { return states_.size(); }
    const Forest& state(std::uint32_t i) const { return states_[i]; }
    bool is_tree(std::uint32_t i) const { return states_[i].size() == 1; }
    std::uint32_t id_of(const Forest& f) const { return ids_.at(encode(f)); }

    std::vector<std::uint16_t> distances_from(std::uint32_t src) const {
        std::vector<std::uint16_t> dist(states_.size(), UINT16_MAX);
        std::vector<std::uint32_t> frontier{src}, next;
        dist[src] = 0;
        std::uint16_t d = 0;
        while (!frontier.empty()) {
            ++d;
            next.clear();
            for (auto u : frontier) {
                for (auto v : edges_[u]) {
                    if (dist[v] == UINT16_MAX) {
                        dist[v] = d;
                        next.push_back(v);
                    }
                }
            }
            frontier.swap(next);
        }
        return dist;
    }

private:
    std::uint32_t intern(Forest f) {
        auto key = encode(f);
        if (auto it = ids_.find(key); it != ids_.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(states_.size());
        ids_.emplace(std::move(key), id);
        states_.push_back(std::move(f));
        return id;
    }

    std::vector<std::string> labels_;
    std::size_t max_;
    std::vector<Forest> states_;
    std::unordered_map<std::string, std::uint32_t> ids_;
    std::vector<std::vector<std::uint32_t>> edges_;
};

// Snapshot whose DOM is `t` (ids n0, n1, ... in preorder), every node
// visible with a box nested in its parent's.
inline visca::PageSnapshot page_from_tree(const OTree& t, const std::string& title = "Test page") {
    std::vector<visca::NodeRecord> nodes;
    std::function<void(const OTree&, std::optional<std::string>, visca::Rect)> add =
        [&](const OTree& n, std::optional<std::string> parent, visca::Rect box) {
            visca::NodeRecord r;
            r.id = "n" + std::to_string(nodes.size());
            r.parent_id = std::move(parent);
            r.tag = n.label;
            r.bbox = box;
            r.visible = true;
            if (n.kids.empty()) r.text = "text " + r.id;
            const auto id = r.id;
            nodes.push_back(std::move(r));
            const int k = static_cast<int>(n.kids.size());
            for (int i = 0; i < k; ++i) {
                const int w = std::max(1, box.w / k);
                add(n.kids[static_cast<std::size_t>(i)], id, {box.x + i * w, box.y, w, std::max(1, box.h - 1)});
            }
        };
    add(t, std::nullopt, {0, 0, 64, 64});
    visca::RgbImage img(64, 64, {250, 250, 250});
    img.fill_rect({3, 3, 5, 5}, {10, 20, 30});
    return visca::PageSnapshot("http://test.example/", {64, 64}, std::move(nodes),
                               "<html><head><title>" + title + "</title></head></html>", std::move(img));
}

// Provider answering every request through a callback on its INPUT block.
class ScriptedProvider : public visca::llm::Provider {
public:
    using Reply = std::function<nlohmann::json(const nlohmann::json& input)>;
    explicit ScriptedProvider(Reply reply) : reply_(std::move(reply)) {}
    std::string name() const override { return "scripted"; }
    visca::llm::CompletionResponse complete(const visca::llm::CompletionRequest& request) override {
        auto input = visca::prompts::find_input(request).value_or(nlohmann::json::object());
        {
            std::lock_guard lock(mutex_);
            inputs_.push_back(input);
        }
        visca::llm::CompletionResponse r;
        r.text = reply_(input).dump();
        r.provider = name();
        return r;
    }
    std::vector<nlohmann::json> inputs() const {
        std::lock_guard lock(mutex_);
        return inputs_;
    }
    std::size_t count(const std::string& task) const {
        std::lock_guard lock(mutex_);
        return static_cast<std::size_t>(std::count_if(inputs_.begin(), inputs_.end(), [&](const nlohmann::json& j) {
            return j.value("task", std::string{}) == task;
        }));
    }

private:
    Reply reply_;
    mutable std::mutex mutex_;
    std::vector<nlohmann::json> inputs_;
};

// ------------------------------------------------- segmentation oracles

// Best total psi over all antichains (empty allowed), by recursion.
inline double best_antichain_dp(const NodeTree& t, const std::vector<visca::PotentialScore>& s, NodeIndex i) {
    double kids = 0;
    for (NodeIndex c : t.children(i)) kids += best_antichain_dp(t, s, c);
    return std::max(s[i].psi, kids);
}

// Same maximum by listing every antichain explicitly.
inline void enumerate_antichains(const NodeTree& t, NodeIndex i, std::vector<std::vector<NodeIndex>>& out) {
    std::vector<std::vector<NodeIndex>> combos{{}};
    for (NodeIndex c : t.children(i)) {
        std::vector<std::vector<NodeIndex>> sub;
        enumerate_antichains(t, c, sub);
        std::vector<std::vector<NodeIndex>> grown;
        for (const auto& a : combos) {
            for (const auto& b : sub) {
                auto m = a;
                m.insert(m.end(), b.begin(), b.end());
                grown.push_back(std::move(m));
            }
        }
        combos = std::move(grown);
    }
    out = std::move(combos);
    out.push_back({i});
}

inline double best_antichain_brute(const NodeTree& t, const std::vector<visca::PotentialScore>& s) {
    std::vector<std::vector<NodeIndex>> all;
    enumerate_antichains(t, *t.root(), all);
    double best = -1e300;
    for (const auto& a : all) {
        double sum = 0;
        for (NodeIndex i : a) sum += s[i].psi;
        best = std::max(best, sum);
    }
    return best;
}

inline bool is_antichain(const NodeTree& t, const std::vector<NodeIndex>& nodes) {
    for (NodeIndex a : nodes) {
        for (NodeIndex b : nodes) {
            if (a != b && t.is_ancestor(a, b)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------- prune suite

struct PruneCase {
    std::string name;
    visca::RgbImage parent;
    visca::RgbImage child;
    visca::Offset offset;
    std::optional<visca::PruneRule> expected;
};

inline visca::RgbImage patterned(int w, int h, int seed) {
    visca::RgbImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.set(x, y, {static_cast<std::uint8_t>((x * 37 + y * 11 + seed * 53) % 200 + 20),
                           static_cast<std::uint8_t>((x * 7 + y * 29 + seed * 17) % 200 + 20),
                           static_cast<std::uint8_t>((x * 13 + y * 5 + seed * 71) % 200 + 20)});
        }
    }
    return img;
}

inline void paste(visca::RgbImage& dst, const visca::RgbImage& src, int ox, int oy) {
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) dst.set(x + ox, y + oy, src.at(x, y));
    }
}

// Residual of a 20x20 parent around a 10x10 child at (5,5) has 300 pixels;
// `off` of them get a second color.
inline visca::RgbImage padded(const visca::RgbImage& child, int off, visca::Rgb bg = {255, 255, 255}) {
    visca::RgbImage p(20, 20, bg);
    paste(p, child, 5, 5);
    int placed = 0;
    for (int y = 0; y < 20 && placed < off; ++y) {
        for (int x = 0; x < 20 && placed < off; ++x) {
            if (x >= 5 && x < 15 && y >= 5 && y < 15) continue;
            p.set(x, y, {0, 0, 0});
            ++placed;
        }
    }
    return p;
}

inline std::vector<PruneCase> prune_suite() {
    using visca::PruneRule;
    using visca::Rgb;
    using visca::RgbImage;
    std::vector<PruneCase> cases;
    const RgbImage c = patterned(10, 10, 1);
    const RgbImage big = patterned(20, 20, 2);

    // exact
    cases.push_back({"exact identical", big, big, {0, 0}, PruneRule::exact});
    {
        RgbImage nudged = big;
        auto px = nudged.at(3, 4);
        px.g = static_cast<std::uint8_t>(px.g + 2);
        nudged.set(3, 4, px);
        cases.push_back({"exact within tolerance", big, nudged, {0, 0}, PruneRule::exact});
    }
    cases.push_back({"exact uniform", RgbImage(12, 7, {9, 9, 9}), RgbImage(12, 7, {10, 8, 11}), {0, 0}, PruneRule::exact});
    {
        // +3 on one channel breaks exactness; the 20x20 child cannot pad or shift
        // inside an equal-size parent either.
        RgbImage nudged = big;
        auto px = nudged.at(3, 4);
        px.r = static_cast<std::uint8_t>(px.r + 3);
        nudged.set(3, 4, px);
        cases.push_back({"exact off by 3", big, nudged, {0, 0}, std::nullopt});
    }

    // padding
    cases.push_back({"padding white residual", padded(c, 0), c, {5, 5}, PruneRule::padding});
    cases.push_back({"padding 95% uniform", padded(c, 15), c, {5, 5}, PruneRule::padding});
    cases.push_back({"padding 94% uniform", padded(c, 18), c, {5, 5}, std::nullopt});
    cases.push_back({"padding colored residual", padded(c, 0, {30, 60, 90}), c, {5, 5}, PruneRule::padding});
    {
        RgbImage checker(20, 20);
        for (int y = 0; y < 20; ++y) {
            for (int x = 0; x < 20; ++x) checker.set(x, y, (x + y) % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
        }
        paste(checker, c, 5, 5);
        cases.push_back({"padding checkerboard", checker, c, {5, 5}, std::nullopt});
    }
    {
        RgbImage p(100, 100, {255, 255, 255});
        const RgbImage c80 = patterned(80, 80, 3);
        paste(p, c80, 10, 10);
        cases.push_back({"padding 80 in 100", p, c80, {10, 10}, PruneRule::padding});
    }
    {
        RgbImage p(20, 20, {255, 255, 255});
        paste(p, c, 0, 0);
        cases.push_back({"padding corner", p, c, {0, 0}, PruneRule::padding});
    }
    {
        RgbImage p = padded(c, 0);
        p.set(8, 8, {1, 2, 3});
        cases.push_back({"padding content differs", p, c, {5, 5}, std::nullopt});
    }

    // shift: content is not where the box says
    {
        RgbImage p(20, 20, {255, 255, 255});
        paste(p, c, 10, 5);
        cases.push_back({"shift by (5,0)", p, c, {5, 5}, PruneRule::shift});
    }
    {
        RgbImage p(30, 16, {240, 240, 240});
        const RgbImage c2 = patterned(10, 6, 4);
        paste(p, c2, 17, 9);
        cases.push_back({"shift diagonal", p, c2, {2, 2}, PruneRule::shift});
    }
    {
        RgbImage p(20, 20, {255, 255, 255});
        paste(p, c, 3, 7);
        cases.push_back({"shift overflowing box", p, c, {15, 15}, PruneRule::shift});
    }
    {
        RgbImage p(20, 20, {255, 255, 255});
        paste(p, patterned(10, 10, 9), 10, 5);
        cases.push_back({"shift nowhere", p, c, {5, 5}, std::nullopt});
    }
    {
        RgbImage p(20, 20, {255, 255, 255});
        paste(p, c, 10, 5);
        for (int x = 0; x < 20; ++x) p.set(x, 0, {0, 0, 0}), p.set(x, 1, {0, 0, 0});
        cases.push_back({"shift noisy residual", p, c, {5, 5}, std::nullopt});
    }

    // unrelated
    cases.push_back({"different images", patterned(20, 20, 5), patterned(20, 20, 6), {0, 0}, std::nullopt});
    cases.push_back({"child larger", c, big, {0, 0}, std::nullopt});
    cases.push_back({"solid in different solid", RgbImage(20, 20, {255, 0, 0}), RgbImage(10, 10, {0, 0, 255}), {5, 5},
                     std::nullopt});
    return cases;
}

// Random page: nested boxes, some wrappers drawn identically to or padded
// around their single child so the pruner has work to do.
inline visca::PageSnapshot random_page(std::mt19937& rng, int max_nodes) {
    using visca::NodeRecord;
    using visca::Rect;
    const int W = 120, H = 120;
    visca::RgbImage shot(W, H, {255, 255, 255});
    std::vector<NodeRecord> nodes;
    std::uniform_int_distribution<int> coin(0, 99);
    std::uniform_int_distribution<int> color(0, 255);

    std::function<void(std::optional<std::string>, Rect, int)> grow = [&](std::optional<std::string> parent, Rect box,
                                                                       int budget) {
        NodeRecord n;
        n.id = "n" + std::to_string(nodes.size());
        n.parent_id = parent;
        n.tag = std::vector<std::string>{"div", "span", "section", "a"}[static_cast<std::size_t>(coin(rng) % 4)];
        n.bbox = box;
        n.visible = coin(rng) >= 10 || !parent;
        const bool fill = coin(rng) < 40;
        const std::size_t self = nodes.size();
        nodes.push_back(n);
        if (fill) {
            shot.fill_rect(box, {static_cast<std::uint8_t>(color(rng)), static_cast<std::uint8_t>(color(rng)),
                                 static_cast<std::uint8_t>(color(rng))});
        }
        if (budget <= 1 || box.w < 6 || box.h < 6) {
            // Leaves carry a little texture.
            for (int y = box.y; y < box.y + box.h; y += 2) shot.set(box.x + (y % box.w), y, {0, 0, 0});
            return;
        }
        const int kind = coin(rng);
        if (kind < 25) {
            grow(nodes[self].id, box, budget - 1);  // same box
        } else if (kind < 45) {
            grow(nodes[self].id, {box.x + 2, box.y + 2, box.w - 4, box.h - 4}, budget - 1);
        } else {
            const int k = std::uniform_int_distribution<int>(1, 3)(rng);
            const int step = box.w / k;
            int left = budget - 1;
            for (int i = 0; i < k && left > 0; ++i) {
                const int share = std::max(1, left / (k - i));
                grow(nodes[self].id, {box.x + i * step, box.y, std::max(1, step - 1), box.h}, share);
                left -= share;
            }
        }
    };
    grow(std::nullopt, {0, 0, W, H}, max_nodes);
    for (auto& n : nodes) {
        if (!n.visible) n.bbox = {0, 0, 0, 0};
    }
    return visca::PageSnapshot("about:blank", {W, H}, std::move(nodes), "<html></html>", std::move(shot));
}

inline std::vector<std::string> leaf_ids(const NodeTree& t) {
    std::vector<std::string> ids;
    for (NodeIndex i : t.leaves()) ids.push_back(t.id(i));
    std::sort(ids.begin(), ids.end());
    return ids;
}

// ------------------------------------------------------------- B-Cubed

inline visca::Clustering clustering(const std::vector<int>& labels) {
    visca::Clustering c;
    for (std::size_t i = 0; i < labels.size(); ++i) c.cluster_of["e" + std::to_string(i)] = std::to_string(labels[i]);
    return c;
}

// Splits every cluster of `labels` further at random.
inline std::vector<int> refine(std::mt19937& rng, const std::vector<int>& labels) {
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] * 100 + std::uniform_int_distribution<int>(0, 2)(rng);
    return out;
}

}  // namespace vt
