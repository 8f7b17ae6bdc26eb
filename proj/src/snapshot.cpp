#include "visca/snapshot.hpp"

#include <fstream>
#include <sstream>

#include "visca/errors.hpp"
#include "visca/html.hpp"

namespace visca {

using nlohmann::json;

PageSnapshot::PageSnapshot(std::string url, Viewport viewport, std::vector<NodeRecord> nodes, std::string page_html,
                           RgbImage screenshot)
    : url_(std::move(url)),
      viewport_(viewport),
      nodes_(std::move(nodes)),
      page_html_(std::move(page_html)),
      screenshot_(std::move(screenshot)) {
    index();
}

void PageSnapshot::index() {
    by_id_.clear();
    dom_parent_.assign(nodes_.size(), std::nullopt);
    dom_children_.assign(nodes_.size(), {});

    std::optional<NodeIndex> root;
    for (NodeIndex i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        const std::string path = "nodes[" + std::to_string(i) + "]";
        if (n.id.empty()) throw BundleInvalid(path + ".id", "empty id");
        if (!by_id_.emplace(n.id, i).second) throw BundleInvalid(path + ".id", "duplicate id '" + n.id + "'");
        if (n.visible && (n.bbox.w <= 0 || n.bbox.h <= 0)) {
            throw BundleInvalid(path + ".bbox", "visible node with empty box");
        }
        if (n.bbox.w < 0 || n.bbox.h < 0) throw BundleInvalid(path + ".bbox", "negative size");
        if (n.visible && clamp_rect(n.bbox, screenshot_.width(), screenshot_.height()).empty()) {
            throw BundleInvalid(path + ".bbox", "visible node lies outside the screenshot");
        }
        if (!n.parent_id) {
            if (root) throw BundleInvalid(path + ".parent_id", "second root node");
            root = i;
        }
    }
    if (!root) throw BundleInvalid("nodes", "no root node");
    root_ = *root;

    for (NodeIndex i = 0; i < nodes_.size(); ++i) {
        const auto& pid = nodes_[i].parent_id;
        if (!pid) continue;
        auto it = by_id_.find(*pid);
        if (it == by_id_.end()) {
            throw BundleInvalid("nodes[" + std::to_string(i) + "].parent_id", "unknown parent '" + *pid + "'");
        }
        dom_parent_[i] = it->second;
        dom_children_[it->second].push_back(i);
    }

    // Every node must reach the root; a cycle would leave nodes unreachable.
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<NodeIndex> stack{root_};
    std::size_t reached = 0;
    while (!stack.empty()) {
        const NodeIndex cur = stack.back();
        stack.pop_back();
        if (seen[cur]) continue;
        seen[cur] = true;
        ++reached;
        stack.insert(stack.end(), dom_children_[cur].begin(), dom_children_[cur].end());
    }
    if (reached != nodes_.size()) {
        for (NodeIndex i = 0; i < nodes_.size(); ++i) {
            if (!seen[i]) throw BundleInvalid("nodes[" + std::to_string(i) + "].parent_id", "parent cycle");
        }
    }
}

std::optional<NodeIndex> PageSnapshot::index_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

std::size_t PageSnapshot::visible_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.visible ? 1 : 0;
    return n;
}

std::string PageSnapshot::page_title() const {
    const auto doc = html::parse(page_html_);
    const auto* title = html::find_first(doc, "title");
    return title ? title->text : std::string{};
}

namespace {

template <typename T>
T require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw BundleInvalid(path + "." + key, "missing field");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw BundleInvalid(path + "." + key, e.what());
    }
}

std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PageSnapshot snapshot_from_json(const json& manifest, std::string page_html, RgbImage screenshot) {
    if (!manifest.is_object()) throw BundleInvalid("$", "manifest is not an object");
    Viewport viewport;
    const auto& vp = manifest.contains("viewport") ? manifest.at("viewport") : json();
    viewport.width = require<int>(vp, "width", "viewport");
    viewport.height = require<int>(vp, "height", "viewport");
    std::string url = manifest.value("url", std::string{});

    if (!manifest.contains("nodes") || !manifest.at("nodes").is_array()) {
        throw BundleInvalid("nodes", "missing or not an array");
    }
    std::vector<NodeRecord> nodes;
    const auto& arr = manifest.at("nodes");
    nodes.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& n = arr[i];
        const std::string path = "nodes[" + std::to_string(i) + "]";
        NodeRecord rec;
        rec.id = require<std::string>(n, "id", path);
        if (n.contains("parent_id") && !n.at("parent_id").is_null()) {
            rec.parent_id = require<std::string>(n, "parent_id", path);
        }
        rec.tag = require<std::string>(n, "tag", path);
        if (n.contains("attrs")) {
            if (!n.at("attrs").is_object()) throw BundleInvalid(path + ".attrs", "not an object");
            for (const auto& [k, v] : n.at("attrs").items()) {
                if (!v.is_string()) throw BundleInvalid(path + ".attrs." + k, "attribute value is not a string");
                rec.attrs.emplace(k, v.get<std::string>());
            }
        }
        if (n.contains("text") && !n.at("text").is_null()) rec.text = require<std::string>(n, "text", path);
        const json bbox = n.contains("bbox") ? n.at("bbox") : json();
        rec.bbox.x = require<int>(bbox, "x", path + ".bbox");
        rec.bbox.y = require<int>(bbox, "y", path + ".bbox");
        rec.bbox.w = require<int>(bbox, "w", path + ".bbox");
        rec.bbox.h = require<int>(bbox, "h", path + ".bbox");
        rec.visible = require<bool>(n, "visible", path);
        nodes.push_back(std::move(rec));
    }
    return PageSnapshot(std::move(url), viewport, std::move(nodes), std::move(page_html), std::move(screenshot));
}

json snapshot_manifest(const PageSnapshot& snapshot) {
    json nodes = json::array();
    for (const auto& n : snapshot.nodes()) {
        json attrs = json::object();
        for (const auto& [k, v] : n.attrs) attrs[k] = v;
        nodes.push_back({
            {"id", n.id},
            {"parent_id", n.parent_id ? json(*n.parent_id) : json(nullptr)},
            {"tag", n.tag},
            {"attrs", attrs},
            {"text", n.text ? json(*n.text) : json(nullptr)},
            {"bbox", {{"x", n.bbox.x}, {"y", n.bbox.y}, {"w", n.bbox.w}, {"h", n.bbox.h}}},
            {"visible", n.visible},
        });
    }
    return {
        {"url", snapshot.url()},
        {"viewport", {{"width", snapshot.viewport().width}, {"height", snapshot.viewport().height}}},
        {"nodes", nodes},
    };
}

PageSnapshot load_snapshot(const std::filesystem::path& bundle_dir) {
    const auto manifest_path = bundle_dir / "manifest.json";
    const auto html_path = bundle_dir / "page.html";
    const auto png_path = bundle_dir / "screenshot.png";
    for (const auto& p : {manifest_path, html_path, png_path}) {
        if (!std::filesystem::is_regular_file(p)) throw BundleIncomplete("missing " + p.string());
    }
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw BundleInvalid("$", std::string("manifest.json is not valid JSON: ") + e.what());
    }
    RgbImage screenshot;
    try {
        screenshot = read_png(png_path);
    } catch (const InputError& e) {
        throw BundleInvalid("screenshot.png", e.what());
    }
    return snapshot_from_json(manifest, read_text_file(html_path), std::move(screenshot));
}

void save_snapshot(const PageSnapshot& snapshot, const std::filesystem::path& bundle_dir) {
    std::filesystem::create_directories(bundle_dir);
    {
        std::ofstream out(bundle_dir / "manifest.json", std::ios::binary);
        out << snapshot_manifest(snapshot).dump(2) << '\n';
    }
    {
        std::ofstream out(bundle_dir / "page.html", std::ios::binary);
        out << snapshot.page_html();
    }
    write_png(bundle_dir / "screenshot.png", snapshot.screenshot());
}

NodeTree build_visible_hierarchy(const PageSnapshot& snapshot) {
    const auto& nodes = snapshot.nodes();
    NodeTree tree(nodes.size());
    for (NodeIndex i = 0; i < nodes.size(); ++i) {
        if (nodes[i].visible) tree.define(i, nodes[i].id, nodes[i].tag);
    }

    // Document-order walk carrying the nearest visible ancestor. A hidden
    // root with several visible descendants cannot host them, so the first
    // visible node in document order becomes the root and later top-level
    // visible nodes attach to it.
    std::optional<NodeIndex> root;
    std::vector<std::pair<NodeIndex, std::optional<NodeIndex>>> stack{{snapshot.root_index(), std::nullopt}};
    while (!stack.empty()) {
        auto [cur, anchor] = stack.back();
        stack.pop_back();
        std::optional<NodeIndex> next_anchor = anchor;
        if (nodes[cur].visible) {
            if (anchor) {
                tree.attach(*anchor, cur);
            } else if (!root) {
                root = cur;
                tree.set_root(cur);
            } else {
                tree.attach(*root, cur);
            }
            next_anchor = cur;
        }
        const auto& kids = snapshot.dom_children(cur);
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.emplace_back(*it, next_anchor);
    }
    return tree;
}

Rect clamped_box(const PageSnapshot& snapshot, const NodeRecord& node) {
    return clamp_rect(node.bbox, snapshot.screenshot().width(), snapshot.screenshot().height());
}

RgbImage crop_rendering(const PageSnapshot& snapshot, const NodeRecord& node) {
    if (!node.visible) throw NotRenderable("node '" + node.id + "' is hidden");
    return snapshot.screenshot().crop(node.bbox);
}

namespace {

void serialize(const PageSnapshot& snapshot, NodeIndex i, std::string& out) {
    const auto& n = snapshot.node(i);
    out += '<';
    out += n.tag;
    out += " data-visca-id=\"" + html::escape_attr(n.id) + '"';
    if (!n.visible) out += " data-visca-hidden";
    for (const auto& [k, v] : n.attrs) {
        out += ' ';
        out += k;
        out += "=\"" + html::escape_attr(v) + '"';
    }
    out += '>';
    if (html::is_void_tag(n.tag)) return;
    if (n.text) out += html::escape_text(*n.text);
    for (NodeIndex c : snapshot.dom_children(i)) serialize(snapshot, c, out);
    out += "</" + n.tag + '>';
}

}  // namespace

std::string html_snippet(const PageSnapshot& snapshot, NodeIndex node) {
    std::string out;
    serialize(snapshot, node, out);
    return out;
}

}  // namespace visca
