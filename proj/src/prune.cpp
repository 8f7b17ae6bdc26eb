#include "visca/prune.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_map>

#include "visca/errors.hpp"

namespace visca {

std::string to_string(PruneRule rule) {
    switch (rule) {
        case PruneRule::exact: return "exact";
        case PruneRule::padding: return "padding";
        case PruneRule::shift: return "shift";
    }
    return "?";
}

nlohmann::json to_json(const PruneReport& report) {
    nlohmann::json pruned = nlohmann::json::array();
    for (std::size_t i = 0; i < report.pruned_node_ids.size(); ++i) {
        pruned.push_back({{"id", report.pruned_node_ids[i]}, {"rule", to_string(report.rule_used[i])}});
    }
    return {{"pruned", pruned}, {"before_count", report.before_count}, {"after_count", report.after_count}};
}

namespace {

bool close(Rgb a, Rgb b, int tol) {
    return std::abs(a.r - b.r) <= tol && std::abs(a.g - b.g) <= tol && std::abs(a.b - b.b) <= tol;
}

bool region_matches(const RgbImage& parent, const RgbImage& child, Offset at, int tol) {
    for (int y = 0; y < child.height(); ++y) {
        for (int x = 0; x < child.width(); ++x) {
            if (!close(parent.at(x + at.dx, y + at.dy), child.at(x, y), tol)) return false;
        }
    }
    return true;
}

std::uint32_t pack(Rgb c) { return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b; }

}  // namespace

bool compare_exact(const RgbImage& a, const RgbImage& b, const PruneThresholds& t) {
    if (a.width() != b.width() || a.height() != b.height()) return false;
    return region_matches(a, b, {0, 0}, t.pixel_tolerance);
}

double residual_uniformity(const RgbImage& parent, const Rect& child_rect) {
    std::unordered_map<std::uint32_t, std::size_t> histogram;
    std::size_t total = 0;
    for (int y = 0; y < parent.height(); ++y) {
        for (int x = 0; x < parent.width(); ++x) {
            const bool inside = x >= child_rect.x && x < child_rect.x + child_rect.w && y >= child_rect.y &&
                                y < child_rect.y + child_rect.h;
            if (inside) continue;
            ++histogram[pack(parent.at(x, y))];
            ++total;
        }
    }
    if (total == 0) return 1.0;
    std::size_t best = 0;
    for (const auto& [color, count] : histogram) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(total);
}

bool compare_padding(const RgbImage& parent, const RgbImage& child, Offset child_offset, const PruneThresholds& t) {
    if (child_offset.dx < 0 || child_offset.dy < 0 || child_offset.dx + child.width() > parent.width() ||
        child_offset.dy + child.height() > parent.height()) {
        throw GeometryError("child rectangle does not fit inside parent");
    }
    if (!region_matches(parent, child, child_offset, t.pixel_tolerance)) return false;
    const Rect rect{child_offset.dx, child_offset.dy, child.width(), child.height()};
    return residual_uniformity(parent, rect) >= t.uniformity;
}

bool compare_shift(const RgbImage& parent, const RgbImage& child, const PruneThresholds& t) {
    if (child.width() > parent.width() || child.height() > parent.height()) {
        throw GeometryError("child larger than parent");
    }
    for (int dy = 0; dy + child.height() <= parent.height(); ++dy) {
        for (int dx = 0; dx + child.width() <= parent.width(); ++dx) {
            if (!region_matches(parent, child, {dx, dy}, t.pixel_tolerance)) continue;
            if (residual_uniformity(parent, {dx, dy, child.width(), child.height()}) >= t.uniformity) return true;
        }
    }
    return false;
}

std::optional<PruneRule> redundancy_rule(const RgbImage& parent, const RgbImage& child, Offset child_offset,
                                         const PruneThresholds& t) {
    if (compare_exact(parent, child, t)) return PruneRule::exact;
    try {
        if (compare_padding(parent, child, child_offset, t)) return PruneRule::padding;
    } catch (const GeometryError&) {
        // Child overflows its parent box; padding cannot apply.
    }
    try {
        if (compare_shift(parent, child, t)) return PruneRule::shift;
    } catch (const GeometryError&) {
    }
    return std::nullopt;
}

std::pair<NodeTree, PruneReport> prune_redundant(const NodeTree& tree, const PageSnapshot& snapshot,
                                                 const PruneThresholds& t) {
    NodeTree out = tree;
    PruneReport report;
    report.before_count = tree.size();
    if (!out.root()) return {out, report};

    auto render = [&](NodeIndex i) { return crop_rendering(snapshot, snapshot.node(i)); };

    // Top-down; removing a child only rewires the parent's own children, so
    // ancestors never need revisiting and one pass reaches the fixpoint.
    std::vector<NodeIndex> stack{*out.root()};
    while (!stack.empty()) {
        const NodeIndex parent = stack.back();
        stack.pop_back();
        while (out.children(parent).size() == 1) {
            const NodeIndex child = out.children(parent).front();
            if (out.is_leaf(child)) break;  // leaves are content, never wrappers
            const auto& pnode = snapshot.node(parent);
            const auto& cnode = snapshot.node(child);
            const Rect pbox = clamped_box(snapshot, pnode);
            const Rect cbox = clamped_box(snapshot, cnode);
            const auto rule = redundancy_rule(render(parent), render(child), {cbox.x - pbox.x, cbox.y - pbox.y}, t);
            if (!rule) break;
            report.pruned_node_ids.push_back(out.id(child));
            report.rule_used.push_back(*rule);
            out.splice_out(child);
        }
        const auto& kids = out.children(parent);
        stack.insert(stack.end(), kids.rbegin(), kids.rend());
    }
    report.after_count = out.size();
    return {out, report};
}

}  // namespace visca
