#include "visca/segmenter.hpp"

#include <cmath>

#include "visca/errors.hpp"
#include "visca/ted.hpp"

namespace visca {

double potential_value(std::size_t size, double sibling_distance_sum) {
    return std::log(static_cast<double>(size) / (1.0 + sibling_distance_sum));
}

std::vector<PotentialScore> compute_potentials(const NodeTree& tree) {
    std::vector<PotentialScore> scores(tree.slot_count());
    if (!tree.root()) return scores;

    // Subtree sizes bottom-up.
    for (NodeIndex i : tree.postorder()) {
        std::size_t size = 1;
        for (NodeIndex c : tree.children(i)) size += scores[c].size;
        scores[i].node_id = tree.id(i);
        scores[i].size = size;
    }

    DistanceCache cache(tree);
    for (NodeIndex p : tree.preorder()) {
        const auto& kids = tree.children(p);
        for (std::size_t a = 0; a < kids.size(); ++a) {
            for (std::size_t b = a + 1; b < kids.size(); ++b) {
                const auto d = static_cast<double>(cache.distance(kids[a], kids[b]));
                scores[kids[a]].sibling_distance_sum += d;
                scores[kids[b]].sibling_distance_sum += d;
            }
        }
    }
    for (NodeIndex i : tree.preorder()) {
        scores[i].psi = potential_value(scores[i].size, scores[i].sibling_distance_sum);
    }
    return scores;
}

Segmentation mark_candidate_segments(const NodeTree& tree, std::vector<PotentialScore> scores) {
    Segmentation seg;
    seg.scores = std::move(scores);
    seg.marks.resize(tree.slot_count());
    if (!tree.root()) return seg;

    // Tentative marks as set by the post-order pass; a later mark on an
    // ancestor clears everything below it, which is applied afterwards.
    for (NodeIndex i : tree.postorder()) {
        double children_combined = 0.0;
        for (NodeIndex c : tree.children(i)) children_combined += seg.marks[c].assigned_potential;
        auto& m = seg.marks[i];
        m.node_id = tree.id(i);
        const double own = seg.scores[i].psi;
        if (own >= children_combined) {
            m.is_candidate = true;
            m.assigned_potential = own;
        } else {
            m.is_candidate = false;
            m.assigned_potential = children_combined;
        }
    }
    std::vector<NodeIndex> stack{*tree.root()};
    while (!stack.empty()) {
        const NodeIndex i = stack.back();
        stack.pop_back();
        if (seg.marks[i].is_candidate) {
            seg.candidates.push_back(i);
            for (NodeIndex d : tree.preorder(i)) {
                if (d != i) seg.marks[d].is_candidate = false;
            }
            continue;
        }
        const auto& kids = tree.children(i);
        stack.insert(stack.end(), kids.rbegin(), kids.rend());
    }
    return seg;
}

Segmentation mark_candidate_segments(const NodeTree& tree) {
    return mark_candidate_segments(tree, compute_potentials(tree));
}

nlohmann::json to_json(const NodeTree& tree, const Segmentation& seg) {
    nlohmann::json nodes = nlohmann::json::array();
    for (NodeIndex i : tree.preorder()) {
        const auto& s = seg.scores[i];
        const auto& m = seg.marks[i];
        const auto parent = tree.parent(i);
        nodes.push_back({
            {"id", tree.id(i)},
            {"parent", parent ? nlohmann::json(tree.id(*parent)) : nlohmann::json(nullptr)},
            {"tag", tree.label(i)},
            {"size", s.size},
            {"distance_sum", s.sibling_distance_sum},
            {"psi", s.psi},
            {"assigned_potential", m.assigned_potential},
            {"is_candidate", m.is_candidate},
        });
    }
    nlohmann::json candidates = nlohmann::json::array();
    for (NodeIndex c : seg.candidates) candidates.push_back(tree.id(c));
    return {{"nodes", nodes}, {"candidates", candidates}};
}

LoadedSegments segments_from_json(const nlohmann::json& j, const PageSnapshot& snapshot) {
    LoadedSegments out{NodeTree(snapshot.nodes().size()), {}};
    if (!j.contains("nodes") || !j.at("nodes").is_array()) throw InputError("segments: missing 'nodes' array");
    for (const auto& row : j.at("nodes")) {
        const auto id = row.at("id").get<std::string>();
        const auto idx = snapshot.index_of(id);
        if (!idx) throw InputError("segments: node '" + id + "' is not in the snapshot");
        out.tree.define(*idx, id, snapshot.node(*idx).tag);
    }
    // Rows are in preorder, so a parent is always defined before its children.
    for (const auto& row : j.at("nodes")) {
        const auto idx = *snapshot.index_of(row.at("id").get<std::string>());
        if (row.at("parent").is_null()) {
            out.tree.set_root(idx);
        } else {
            const auto pid = row.at("parent").get<std::string>();
            const auto p = snapshot.index_of(pid);
            if (!p || !out.tree.contains(*p)) throw InputError("segments: unknown parent '" + pid + "'");
            out.tree.attach(*p, idx);
        }
    }
    for (const auto& c : j.value("candidates", nlohmann::json::array())) {
        const auto idx = snapshot.index_of(c.get<std::string>());
        if (!idx || !out.tree.contains(*idx)) throw InputError("segments: unknown candidate " + c.dump());
        out.candidates.push_back(*idx);
    }
    return out;
}

}  // namespace visca
