#include "visca/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "visca/errors.hpp"

namespace visca {

using nlohmann::json;

Clustering segments_to_clustering(const std::vector<NodeIndex>& segments, const NodeTree& tree) {
    std::vector<bool> marked(tree.slot_count(), false);
    for (NodeIndex s : segments) {
        if (!tree.contains(s)) throw InvalidSegmentation("segment slot " + std::to_string(s) + " is not in the tree");
        if (marked[s]) throw InvalidSegmentation("segment " + tree.id(s) + " listed twice");
        marked[s] = true;
    }
    for (NodeIndex s : segments) {
        for (auto p = tree.parent(s); p; p = tree.parent(*p)) {
            if (marked[*p]) {
                throw InvalidSegmentation("segment " + tree.id(s) + " lies inside segment " + tree.id(*p));
            }
        }
    }
    Clustering c;
    for (NodeIndex leaf : tree.leaves()) {
        std::optional<NodeIndex> owner;
        for (std::optional<NodeIndex> a = leaf; a; a = tree.parent(*a)) {
            if (marked[*a]) {
                owner = *a;
                break;
            }
        }
        c.cluster_of[tree.id(leaf)] = owner ? "seg:" + tree.id(*owner) : "single:" + tree.id(leaf);
    }
    return c;
}

B3Scores b3_scores(const Clustering& hypothesis, const Clustering& truth) {
    if (hypothesis.size() != truth.size()) throw ElementMismatch("clusterings cover different element sets");
    for (const auto& [e, _] : hypothesis.cluster_of) {
        if (!truth.cluster_of.count(e)) throw ElementMismatch("element '" + e + "' missing from truth");
    }
    B3Scores s;
    if (hypothesis.size() == 0) return s;

    std::map<std::string, std::size_t> hyp_size, truth_size;
    std::map<std::pair<std::string, std::string>, std::size_t> joint;
    for (const auto& [e, h] : hypothesis.cluster_of) {
        const auto& t = truth.cluster_of.at(e);
        ++hyp_size[h];
        ++truth_size[t];
        ++joint[{h, t}];
    }
    double p = 0, r = 0;
    for (const auto& [e, h] : hypothesis.cluster_of) {
        const auto& t = truth.cluster_of.at(e);
        const double both = static_cast<double>(joint.at({h, t}));
        p += both / static_cast<double>(hyp_size.at(h));
        r += both / static_cast<double>(truth_size.at(t));
    }
    const double n = static_cast<double>(hypothesis.size());
    s.precision = p / n;
    s.recall = r / n;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

std::optional<NodeIndex> resolve_xpath(const PageSnapshot& snapshot, const std::string& xpath) {
    if (xpath.empty() || xpath.front() != '/') return std::nullopt;
    std::optional<NodeIndex> cur;
    std::size_t pos = 1;
    while (pos <= xpath.size()) {
        auto end = xpath.find('/', pos);
        if (end == std::string::npos) end = xpath.size();
        const auto step = xpath.substr(pos, end - pos);
        pos = end + 1;
        if (step.empty()) return std::nullopt;
        std::string tag = step;
        std::size_t k = 1;
        if (const auto lb = step.find('['); lb != std::string::npos) {
            if (step.back() != ']') return std::nullopt;
            tag = step.substr(0, lb);
            try {
                k = std::stoul(step.substr(lb + 1, step.size() - lb - 2));
            } catch (const std::exception&) {
                return std::nullopt;
            }
            if (k == 0) return std::nullopt;
        }
        for (auto& ch : tag) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (!cur) {
            const auto root = snapshot.root_index();
            if (snapshot.node(root).tag != tag || k != 1) return std::nullopt;
            cur = root;
            continue;
        }
        std::size_t seen = 0;
        std::optional<NodeIndex> next;
        for (NodeIndex c : snapshot.dom_children(*cur)) {
            if (snapshot.node(c).tag == tag && ++seen == k) {
                next = c;
                break;
            }
        }
        if (!next) return std::nullopt;
        cur = next;
    }
    return cur;
}

Clustering load_truth_clustering(const json& j, const PageSnapshot& snapshot, const std::vector<NodeIndex>& elements) {
    if (!j.is_object()) throw InputError("truth file must be a JSON object of element -> cluster");
    std::unordered_map<NodeIndex, std::string> listed;
    for (const auto& [key, value] : j.items()) {
        std::optional<NodeIndex> idx = key.front() == '/' ? resolve_xpath(snapshot, key) : snapshot.index_of(key);
        if (!idx) throw InputError("truth: element '" + key + "' not found in snapshot");
        listed[*idx] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    Clustering c;
    for (NodeIndex e : elements) {
        std::string cluster = "single:" + snapshot.node(e).id;
        for (std::optional<NodeIndex> a = e; a; a = snapshot.dom_parent(*a)) {
            if (auto it = listed.find(*a); it != listed.end()) {
                cluster = "truth:" + it->second;
                break;
            }
        }
        c.cluster_of[snapshot.node(e).id] = cluster;
    }
    return c;
}

PageClassCounts count_classes(const ClassifiedSegment& root) {
    PageClassCounts c;
    for_each_segment(root, [&](const ClassifiedSegment& s, int) {
        if (s.cls == SegmentClass::Component) {
            ++c.components;
        } else {
            ++c.non_components;
        }
    });
    return c;
}

PageClassCounts count_classes(const json& classified) {
    if (!classified.is_object() || !classified.contains("segments") || !classified.at("segments").is_array()) {
        throw InputError("classified: missing 'segments'");
    }
    PageClassCounts c;
    for (const auto& row : classified.at("segments")) {
        const auto cls = parse_segment_class(row.value("class", std::string{}));
        if (!cls) throw InputError("classified: bad class in row " + row.dump());
        if (*cls == SegmentClass::Component) {
            ++c.components;
        } else {
            ++c.non_components;
        }
    }
    return c;
}

ClassificationStats classification_stats(const std::vector<PageClassCounts>& pages) {
    if (pages.empty()) throw InputError("classification_stats needs at least one page");
    ClassificationStats s;
    for (const auto& p : pages) {
        const auto total = p.components + p.non_components;
        if (total == 0) throw InputError("page without classified segments");
        s.avg_segments += static_cast<double>(total);
        s.component_fraction += static_cast<double>(p.components) / static_cast<double>(total);
    }
    const double n = static_cast<double>(pages.size());
    s.avg_segments /= n;
    s.component_fraction /= n;
    s.non_component_fraction = 1.0 - s.component_fraction;
    return s;
}

std::string format_fractions(const ClassificationStats& s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f%% / %.1f%%", s.component_fraction * 100.0, s.non_component_fraction * 100.0);
    return buf;
}

json to_json(const B3Scores& s) { return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}}; }

json to_json(const ClassificationStats& s) {
    return {{"avg_segments", s.avg_segments},
            {"component_fraction", s.component_fraction},
            {"non_component_fraction", s.non_component_fraction},
            {"formatted", format_fractions(s)}};
}

}  // namespace visca
