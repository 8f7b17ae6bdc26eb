#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "visca/image.hpp"
#include "visca/tree.hpp"

namespace visca {

struct NodeRecord {
    std::string id;
    std::optional<std::string> parent_id;
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::optional<std::string> text;  // own direct text only
    Rect bbox;
    bool visible = false;

    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct Viewport {
    int width = 0;
    int height = 0;

    friend bool operator==(const Viewport&, const Viewport&) = default;
};

// Frozen capture of one page. Immutable once loaded; node order is the
// manifest order, which capture emits in document order.
class PageSnapshot {
public:
    PageSnapshot() = default;
    PageSnapshot(std::string url, Viewport viewport, std::vector<NodeRecord> nodes, std::string page_html,
                 RgbImage screenshot);

    const std::string& url() const noexcept { return url_; }
    const Viewport& viewport() const noexcept { return viewport_; }
    const std::vector<NodeRecord>& nodes() const noexcept { return nodes_; }
    const std::string& page_html() const noexcept { return page_html_; }
    const RgbImage& screenshot() const noexcept { return screenshot_; }

    const NodeRecord& node(NodeIndex i) const { return nodes_.at(i); }
    std::optional<NodeIndex> index_of(const std::string& id) const;
    NodeIndex root_index() const noexcept { return root_; }
    std::optional<NodeIndex> dom_parent(NodeIndex i) const noexcept { return dom_parent_[i]; }
    const std::vector<NodeIndex>& dom_children(NodeIndex i) const noexcept { return dom_children_[i]; }

    std::size_t visible_count() const;

    // Contents of the <title> element of page.html, or empty.
    std::string page_title() const;

    friend bool operator==(const PageSnapshot& a, const PageSnapshot& b) {
        return a.url_ == b.url_ && a.viewport_ == b.viewport_ && a.nodes_ == b.nodes_ &&
               a.page_html_ == b.page_html_ && a.screenshot_ == b.screenshot_;
    }

private:
    void index();

    std::string url_;
    Viewport viewport_;
    std::vector<NodeRecord> nodes_;
    std::string page_html_;
    RgbImage screenshot_;

    std::unordered_map<std::string, NodeIndex> by_id_;
    std::vector<std::optional<NodeIndex>> dom_parent_;
    std::vector<std::vector<NodeIndex>> dom_children_;
    NodeIndex root_ = 0;
};

// Parses and validates manifest JSON against a screenshot; throws
// BundleInvalid with the offending field path.
PageSnapshot snapshot_from_json(const nlohmann::json& manifest, std::string page_html, RgbImage screenshot);
nlohmann::json snapshot_manifest(const PageSnapshot& snapshot);

PageSnapshot load_snapshot(const std::filesystem::path& bundle_dir);
void save_snapshot(const PageSnapshot& snapshot, const std::filesystem::path& bundle_dir);

// Tree of visible nodes; each visible node hangs off its nearest visible
// ancestor. Slot i corresponds to snapshot node i.
NodeTree build_visible_hierarchy(const PageSnapshot& snapshot);

// Screenshot region under the node's box, clamped to the screenshot.
RgbImage crop_rendering(const PageSnapshot& snapshot, const NodeRecord& node);
Rect clamped_box(const PageSnapshot& snapshot, const NodeRecord& node);

// HTML serialization of a node's original DOM subtree (hidden nodes
// included). Every element carries data-visca-id; hidden ones also carry
// data-visca-hidden.
std::string html_snippet(const PageSnapshot& snapshot, NodeIndex node);

}  // namespace visca
