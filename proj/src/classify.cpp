#include "visca/classify.hpp"

#include <functional>
#include <unordered_map>

#include "visca/errors.hpp"
#include "visca/prompts.hpp"
#include "visca/ted.hpp"

namespace visca {

using nlohmann::json;

std::string to_string(SegmentClass c) {
    switch (c) {
        case SegmentClass::Container: return "Container";
        case SegmentClass::List: return "List";
        case SegmentClass::Component: return "Component";
    }
    return "?";
}

std::optional<SegmentClass> parse_segment_class(const std::string& s) {
    if (s == "Container") return SegmentClass::Container;
    if (s == "List") return SegmentClass::List;
    if (s == "Component") return SegmentClass::Component;
    return std::nullopt;
}

std::string to_string(SegmentRole r) {
    switch (r) {
        case SegmentRole::structural: return "structural";
        case SegmentRole::candidate: return "candidate";
        case SegmentRole::gap: return "gap";
        case SegmentRole::inner: return "inner";
    }
    return "?";
}

std::string to_string(ClassSource s) {
    switch (s) {
        case ClassSource::llm: return "llm";
        case ClassSource::list_child: return "list_child";
        case ClassSource::fallback: return "fallback";
        case ClassSource::depth_cap: return "depth_cap";
    }
    return "?";
}

namespace {

std::optional<SegmentRole> parse_role(const std::string& s) {
    for (auto r : {SegmentRole::structural, SegmentRole::candidate, SegmentRole::gap, SegmentRole::inner}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::optional<ClassSource> parse_source(const std::string& s) {
    for (auto r : {ClassSource::llm, ClassSource::list_child, ClassSource::fallback, ClassSource::depth_cap}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

SegmentContext default_context(const PageSnapshot& snapshot, NodeIndex node) {
    const auto& tag = snapshot.node(node).tag;
    return {tag + " segment", "Unclassified " + tag + " segment of the page."};
}

}  // namespace

CandidateHierarchy build_candidate_hierarchy(const NodeTree& pruned, const std::vector<NodeIndex>& candidates) {
    CandidateHierarchy h{NodeTree(pruned.slot_count()), std::vector<SegmentRole>(pruned.slot_count(), SegmentRole::inner)};
    if (!pruned.root()) return h;

    std::vector<bool> is_candidate(pruned.slot_count(), false);
    for (NodeIndex c : candidates) is_candidate[c] = true;
    std::vector<bool> holds_candidate(pruned.slot_count(), false);
    for (NodeIndex i : pruned.postorder()) {
        bool any = is_candidate[i];
        for (NodeIndex c : pruned.children(i)) any = any || holds_candidate[c];
        holds_candidate[i] = any;
    }

    const NodeIndex root = *pruned.root();
    std::function<void(NodeIndex, std::optional<NodeIndex>, bool)> place =
        [&](NodeIndex node, std::optional<NodeIndex> hparent, bool below_segment) {
            SegmentRole role;
            if (below_segment) {
                role = SegmentRole::inner;
            } else if (is_candidate[node]) {
                role = SegmentRole::candidate;
            } else if (holds_candidate[node]) {
                role = SegmentRole::structural;
            } else {
                role = SegmentRole::gap;
            }
            const auto& kids = pruned.children(node);
            if (role == SegmentRole::structural && node != root && kids.size() == 1) {
                place(kids.front(), hparent, false);
                return;
            }
            h.tree.define(node, pruned.id(node), pruned.label(node));
            h.role[node] = role;
            if (hparent) {
                h.tree.attach(*hparent, node);
            } else {
                h.tree.set_root(node);
            }
            const bool next_below = role != SegmentRole::structural;
            for (NodeIndex c : kids) place(c, node, next_below);
        };
    place(root, std::nullopt, false);
    return h;
}

std::string describe_page(const PageSnapshot& snapshot, llm::Gateway& gateway, const ClassifyOptions& opts) {
    json headings = json::array();
    json texts = json::array();
    for (const auto& n : snapshot.nodes()) {
        if (!n.visible || !n.text || n.text->empty()) continue;
        if (n.tag.size() == 2 && n.tag[0] == 'h' && n.tag[1] >= '1' && n.tag[1] <= '3') headings.push_back(*n.text);
        if (texts.size() < 20) texts.push_back(*n.text);
    }
    const json input = {{"task", prompts::kDescribePage},
                        {"url", snapshot.url()},
                        {"title", snapshot.page_title()},
                        {"headings", headings},
                        {"texts", texts}};
    const auto req =
        prompts::make_request(opts.model, prompts::describe_page_instructions(), input, snapshot.screenshot(),
                              opts.temperature);
    const auto reply = gateway.complete_json(req);
    std::string text = reply.is_object() ? reply.value("description", std::string{}) : std::string{};
    return text.empty() ? "Unknown page" : text;
}

std::pair<SegmentClass, SegmentContext> classify_segment(const PageSnapshot& snapshot,
                                                         const CandidateHierarchy& hierarchy, NodeIndex segment,
                                                         const std::string& page_context,
                                                         const std::vector<SegmentContext>& ancestors,
                                                         llm::Gateway& gateway, const ClassifyOptions& opts) {
    json children = json::array();
    for (NodeIndex c : hierarchy.tree.children(segment)) {
        children.push_back({{"id", hierarchy.tree.id(c)},
                            {"tag", hierarchy.tree.label(c)},
                            {"shape", subtree_shape(hierarchy.tree, c)},
                            {"leaf", hierarchy.tree.is_leaf(c)}});
    }
    json anc = json::array();
    for (const auto& a : ancestors) anc.push_back({{"title", a.title}, {"context", a.context}});
    const json input = {{"task", prompts::kClassifySegment},
                        {"segment_id", hierarchy.tree.id(segment)},
                        {"html", html_snippet(snapshot, segment)},
                        {"children", children},
                        {"page_context", page_context},
                        {"ancestors", anc}};
    const auto req = prompts::make_request(opts.model, prompts::classify_instructions(), input,
                                           crop_rendering(snapshot, snapshot.node(segment)), opts.temperature);
    json reply;
    try {
        reply = gateway.complete_json(req);
    } catch (const ProviderProtocolError& e) {
        throw ClassificationError(hierarchy.tree.id(segment) + ": " + e.what());
    }
    if (!reply.is_object() || !reply.contains("class") || !reply.at("class").is_string()) {
        throw ClassificationError(hierarchy.tree.id(segment) + ": reply has no class");
    }
    const auto cls = parse_segment_class(reply.at("class").get<std::string>());
    if (!cls) throw ClassificationError(hierarchy.tree.id(segment) + ": unknown class " + reply.at("class").dump());

    SegmentContext ctx = default_context(snapshot, segment);
    if (reply.contains("title") && reply.at("title").is_string() && !reply.at("title").get<std::string>().empty()) {
        ctx.title = reply.at("title").get<std::string>();
    }
    if (reply.contains("context") && reply.at("context").is_string() &&
        !reply.at("context").get<std::string>().empty()) {
        ctx.context = reply.at("context").get<std::string>();
    }
    return {*cls, ctx};
}

namespace {

struct TreeClassifier {
    const PageSnapshot& snapshot;
    const CandidateHierarchy& hierarchy;
    const std::string& page_context;
    llm::Gateway& gateway;
    const ClassifyOptions& opts;

    ClassifiedSegment run(NodeIndex node, int depth, std::vector<SegmentContext>& ancestors) {
        ClassifiedSegment seg;
        seg.node = node;
        seg.role = hierarchy.role[node];
        try {
            auto [cls, ctx] = classify_segment(snapshot, hierarchy, node, page_context, ancestors, gateway, opts);
            seg.cls = cls;
            seg.ctx = std::move(ctx);
            seg.source = ClassSource::llm;
        } catch (const ClassificationError& e) {
            seg.cls = SegmentClass::Container;
            seg.ctx = default_context(snapshot, node);
            seg.source = ClassSource::fallback;
            seg.error = e.what();
        }
        if (depth >= opts.max_depth && seg.cls != SegmentClass::Component) {
            seg.cls = SegmentClass::Component;
            seg.source = ClassSource::depth_cap;
        }

        const auto& kids = hierarchy.tree.children(node);
        if (seg.cls == SegmentClass::Container) {
            ancestors.push_back(seg.ctx);
            for (NodeIndex c : kids) seg.children.push_back(run(c, depth + 1, ancestors));
            ancestors.pop_back();
        } else if (seg.cls == SegmentClass::List) {
            for (NodeIndex c : kids) {
                ClassifiedSegment item;
                item.node = c;
                item.role = hierarchy.role[c];
                item.cls = SegmentClass::Component;
                item.source = ClassSource::list_child;
                item.ctx = {seg.ctx.title + " item", seg.ctx.context};
                seg.children.push_back(std::move(item));
            }
        }
        return seg;
    }
};

}  // namespace

ClassifiedSegment classify_tree(const PageSnapshot& snapshot, const CandidateHierarchy& hierarchy, NodeIndex root,
                                const std::string& page_context, llm::Gateway& gateway, const ClassifyOptions& opts) {
    std::vector<SegmentContext> ancestors;
    return TreeClassifier{snapshot, hierarchy, page_context, gateway, opts}.run(root, 0, ancestors);
}

json to_json(const ClassifiedSegment& root, const PageSnapshot& snapshot, const std::string& page_context) {
    json rows = json::array();
    std::function<void(const ClassifiedSegment&, const ClassifiedSegment*)> walk =
        [&](const ClassifiedSegment& s, const ClassifiedSegment* parent) {
            json row = {{"id", snapshot.node(s.node).id},
                        {"parent", parent ? json(snapshot.node(parent->node).id) : json(nullptr)},
                        {"class", to_string(s.cls)},
                        {"title", s.ctx.title},
                        {"context", s.ctx.context},
                        {"role", to_string(s.role)},
                        {"source", to_string(s.source)}};
            if (!s.error.empty()) row["error"] = s.error;
            rows.push_back(std::move(row));
            for (const auto& c : s.children) walk(c, &s);
        };
    walk(root, nullptr);
    return {{"page_context", page_context}, {"segments", rows}};
}

LoadedClassification classification_from_json(const json& j, const PageSnapshot& snapshot) {
    if (!j.contains("segments") || !j.at("segments").is_array() || j.at("segments").empty()) {
        throw InputError("classified: missing or empty 'segments'");
    }
    // Rows are preorder; keep a path of open segments keyed by id.
    LoadedClassification out;
    out.page_context = j.value("page_context", std::string{});
    std::unordered_map<std::string, ClassifiedSegment*> by_id;
    bool have_root = false;
    for (const auto& row : j.at("segments")) {
        const auto id = row.at("id").get<std::string>();
        const auto idx = snapshot.index_of(id);
        if (!idx) throw InputError("classified: segment '" + id + "' is not in the snapshot");
        ClassifiedSegment seg;
        seg.node = *idx;
        const auto cls = parse_segment_class(row.at("class").get<std::string>());
        if (!cls) throw InputError("classified: bad class for '" + id + "'");
        seg.cls = *cls;
        seg.ctx = {row.value("title", std::string{}), row.value("context", std::string{})};
        seg.role = parse_role(row.value("role", std::string{"inner"})).value_or(SegmentRole::inner);
        seg.source = parse_source(row.value("source", std::string{"llm"})).value_or(ClassSource::llm);
        seg.error = row.value("error", std::string{});

        ClassifiedSegment* placed = nullptr;
        if (row.at("parent").is_null()) {
            if (have_root) throw InputError("classified: more than one root");
            out.root = std::move(seg);
            placed = &out.root;
            have_root = true;
        } else {
            const auto pid = row.at("parent").get<std::string>();
            auto it = by_id.find(pid);
            if (it == by_id.end()) throw InputError("classified: parent '" + pid + "' not seen before '" + id + "'");
            it->second->children.push_back(std::move(seg));
            placed = &it->second->children.back();
            // Earlier siblings' pointers were invalidated by push_back;
            // refresh them from the parent.
            for (auto& sib : it->second->children) by_id[snapshot.node(sib.node).id] = &sib;
        }
        by_id[id] = placed;
    }
    if (!have_root) throw InputError("classified: no root segment");
    return out;
}

}  // namespace visca
