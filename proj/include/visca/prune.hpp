#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/image.hpp"
#include "visca/snapshot.hpp"
#include "visca/tree.hpp"

namespace visca {

struct PruneThresholds {
    int pixel_tolerance = 2;        // per channel, 0-255 scale
    double uniformity = 0.95;       // share of residual pixels with one exact color
};

struct Offset {
    int dx = 0, dy = 0;
};

enum class PruneRule { exact, padding, shift };

std::string to_string(PruneRule rule);

struct PruneReport {
    std::vector<std::string> pruned_node_ids;
    std::vector<PruneRule> rule_used;  // parallel to pruned_node_ids
    std::size_t before_count = 0;
    std::size_t after_count = 0;
};

nlohmann::json to_json(const PruneReport& report);

// Same size and every channel within tolerance.
bool compare_exact(const RgbImage& a, const RgbImage& b, const PruneThresholds& t = {});

// Child region at `child_offset` matches and the rest of the parent is
// (near-)uniform. Throws GeometryError if the child does not fit.
bool compare_padding(const RgbImage& parent, const RgbImage& child, Offset child_offset,
                     const PruneThresholds& t = {});

// Like compare_padding, searching every offset where the child fits.
// Throws GeometryError if the child is larger than the parent.
bool compare_shift(const RgbImage& parent, const RgbImage& child, const PruneThresholds& t = {});

// Share of the most frequent exact color among parent pixels outside the
// child rectangle; 1.0 when nothing is outside.
double residual_uniformity(const RgbImage& parent, const Rect& child_rect);

// First rule that declares the child redundant with respect to its parent.
std::optional<PruneRule> redundancy_rule(const RgbImage& parent, const RgbImage& child, Offset child_offset,
                                         const PruneThresholds& t = {});

// Removes visually redundant single children until no single-child parent
// matches its child. Leaf children are kept, so the leaf set is preserved. Renderings are crops of the snapshot screenshot.
std::pair<NodeTree, PruneReport> prune_redundant(const NodeTree& tree, const PageSnapshot& snapshot,
                                                 const PruneThresholds& t = {});

}  // namespace visca
