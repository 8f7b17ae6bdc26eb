#include "visca/abstractor.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "visca/errors.hpp"
#include "visca/html.hpp"
#include "visca/prompts.hpp"

namespace visca {

using nlohmann::json;

// ------------------------------------------------------------------ json

json to_json(const AbstractNode& node) {
    json j = {{"template", node.template_name}, {"name", node.name}, {"attrs", node.attrs}};
    if (node.count) j["count"] = *node.count;
    if (node.segment) j["segment"] = *node.segment;
    if (node.source) j["source"] = *node.source;
    json kids = json::array();
    for (const auto& c : node.children) kids.push_back(to_json(c));
    j["children"] = std::move(kids);
    return j;
}

namespace {

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return {};
    return v.dump();
}

}  // namespace

AbstractNode abstract_node_from_json(const json& j) {
    if (!j.is_object()) throw InputError("abstraction node must be a JSON object");
    AbstractNode n;
    n.template_name = j.contains("template") ? scalar_text(j.at("template")) : std::string{};
    n.name = j.contains("name") ? scalar_text(j.at("name")) : std::string{};
    if (j.contains("attrs") && j.at("attrs").is_object()) {
        for (const auto& [k, v] : j.at("attrs").items()) {
            if (!v.is_null()) n.attrs[k] = scalar_text(v);
        }
    }
    if (j.contains("count") && j.at("count").is_number_unsigned()) n.count = j.at("count").get<std::size_t>();
    if (j.contains("segment") && j.at("segment").is_string()) n.segment = j.at("segment").get<std::string>();
    if (j.contains("source") && j.at("source").is_string() && !j.at("source").get<std::string>().empty()) {
        n.source = j.at("source").get<std::string>();
    }
    if (j.contains("children") && j.at("children").is_array()) {
        for (const auto& c : j.at("children")) n.children.push_back(abstract_node_from_json(c));
    }
    return n;
}

json to_json(const AbstractionDocument& doc) {
    return {{"page_context", doc.page_context}, {"warnings", doc.warnings}, {"abstraction", to_json(doc.root)}};
}

AbstractionDocument abstraction_from_json(const json& j) {
    if (!j.is_object() || !j.contains("abstraction")) throw InputError("abstraction file has no 'abstraction' key");
    AbstractionDocument doc;
    doc.root = abstract_node_from_json(j.at("abstraction"));
    doc.page_context = j.value("page_context", std::string{});
    doc.warnings = j.value("warnings", std::vector<std::string>{});
    return doc;
}

// -------------------------------------------------------------- abstractor

Abstractor::Abstractor(const PageSnapshot& snapshot, const TemplateVocabulary& vocabulary, llm::Gateway& gateway,
                       std::string page_context, AbstractionOptions opts)
    : snapshot_(snapshot),
      vocabulary_(vocabulary),
      gateway_(gateway),
      page_context_(std::move(page_context)),
      opts_(std::move(opts)) {}

std::vector<std::string> Abstractor::unknown_templates(const AbstractNode& node) const {
    std::set<std::string> unknown;
    std::function<void(const AbstractNode&)> walk = [&](const AbstractNode& n) {
        if (!vocabulary_.contains(n.template_name)) unknown.insert(n.template_name);
        for (const auto& c : n.children) walk(c);
    };
    walk(node);
    return {unknown.begin(), unknown.end()};
}

void Abstractor::substitute_unknown(AbstractNode& node, const std::string& segment_id) {
    if (!vocabulary_.contains(node.template_name)) {
        warnings_.push_back("segment " + segment_id + ": unknown template '" + node.template_name +
                            "' replaced by Container");
        node.template_name = "Container";
    }
    for (auto& c : node.children) substitute_unknown(c, segment_id);
}

AbstractNode Abstractor::transform_component(const ClassifiedSegment& segment,
                                             const std::vector<SegmentContext>& ancestors) {
    const auto& rec = snapshot_.node(segment.node);
    json anc = json::array();
    for (const auto& a : ancestors) anc.push_back({{"title", a.title}, {"context", a.context}});
    const json input = {{"task", prompts::kTransformComponent},
                        {"segment_id", rec.id},
                        {"title", segment.ctx.title},
                        {"context", segment.ctx.context},
                        {"html", html_snippet(snapshot_, segment.node)},
                        {"page_context", page_context_},
                        {"ancestors", anc}};
    std::optional<RgbImage> rendering;
    if (rec.visible) rendering = crop_rendering(snapshot_, rec);
    auto req = prompts::make_request(opts_.model, prompts::transform_instructions(vocabulary_.to_json()), input,
                                     rendering, opts_.temperature);
    ++component_calls_;

    auto reply = gateway_.complete_json(req);
    AbstractNode node = abstract_node_from_json(reply);
    auto unknown = unknown_templates(node);
    if (!unknown.empty()) {
        req.text("Previous reply:\n" + reply.dump() + "\n" + prompts::unknown_template_repair(unknown));
        try {
            node = abstract_node_from_json(gateway_.complete_json(req));
        } catch (const ProviderProtocolError& e) {
            warnings_.push_back("segment " + rec.id + ": template repair failed: " + e.what());
        }
        substitute_unknown(node, rec.id);
    }
    node.segment = rec.id;
    if (!node.source) node.source = rec.id;
    return node;
}

const ClassifiedSegment& representative_child(const PageSnapshot& snapshot, const ClassifiedSegment& list) {
    if (list.children.empty()) throw InternalError("representative_child on an empty List");
    std::function<std::size_t(NodeIndex)> dom_size = [&](NodeIndex i) {
        std::size_t n = 1;
        for (NodeIndex c : snapshot.dom_children(i)) n += dom_size(c);
        return n;
    };
    const ClassifiedSegment* best = &list.children.front();
    std::size_t best_size = dom_size(best->node);
    for (const auto& c : list.children) {
        const auto s = dom_size(c.node);
        if (s > best_size) {
            best = &c;
            best_size = s;
        }
    }
    return *best;
}

AbstractNode Abstractor::transform_list(const ClassifiedSegment& segment,
                                        const std::vector<SegmentContext>& ancestors) {
    const auto& id = snapshot_.node(segment.node).id;
    AbstractNode node;
    node.template_name = "List";
    node.name = segment.ctx.title;
    node.count = segment.children.size();
    node.segment = id;
    node.source = id;
    if (segment.children.empty()) {
        warnings_.push_back("segment " + id + ": List has no items");
        return node;
    }
    auto inner = ancestors;
    inner.push_back(segment.ctx);
    node.children.push_back(transform_component(representative_child(snapshot_, segment), inner));
    return node;
}

AbstractNode Abstractor::transform_container(const ClassifiedSegment& segment,
                                             const std::vector<SegmentContext>& ancestors) {
    auto path = ancestors;
    AbstractNode node;
    node.template_name = "Container";
    node.name = segment.ctx.title;
    node.segment = snapshot_.node(segment.node).id;
    node.source = node.segment;
    if (segment.children.empty()) warnings_.push_back("segment " + *node.segment + ": Container has no children");
    path.push_back(segment.ctx);
    for (const auto& c : segment.children) node.children.push_back(transform(c, path));
    return node;
}

AbstractNode Abstractor::transform(const ClassifiedSegment& segment, std::vector<SegmentContext>& ancestors) {
    if (!segment.error.empty()) {
        warnings_.push_back("segment " + snapshot_.node(segment.node).id + ": classification fell back: " +
                            segment.error);
    }
    switch (segment.cls) {
        case SegmentClass::Component: return transform_component(segment, ancestors);
        case SegmentClass::List: return transform_list(segment, ancestors);
        case SegmentClass::Container: return transform_container(segment, ancestors);
    }
    throw InternalError("unreachable segment class");
}

AbstractNode Abstractor::transform_page(const ClassifiedSegment& root) {
    std::vector<SegmentContext> ancestors;
    AbstractNode node = transform(root, ancestors);
    if (root.cls == SegmentClass::Container) {
        const auto title = snapshot_.page_title();
        if (!title.empty()) node.name = title;
    }
    return node;
}

// ------------------------------------------------------------------ markup

namespace {

void render_into(const AbstractNode& n, int depth, std::string& out) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += '<';
    out += n.template_name;
    if (!n.name.empty()) out += " name=\"" + html::escape_attr(n.name) + "\"";
    if (n.count) out += " count=\"" + std::to_string(*n.count) + "\"";
    for (const auto& [k, v] : n.attrs) {
        if (k == "name" || k == "count") continue;
        out += " " + k + "=\"" + html::escape_attr(v) + "\"";
    }
    if (n.children.empty()) {
        out += " />\n";
        return;
    }
    out += ">\n";
    for (const auto& c : n.children) render_into(c, depth + 1, out);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += "</" + n.template_name + ">\n";
}

class MarkupParser {
public:
    explicit MarkupParser(const std::string& s) : s_(s) {}

    AbstractNode parse_document() {
        skip_ws();
        AbstractNode root = parse_element();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing content");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("markup: " + what + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string ident() {
        const auto start = pos_;
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '.') {
                ++pos_;
            } else {
                break;
            }
        }
        if (start == pos_) fail("expected a name");
        return s_.substr(start, pos_ - start);
    }

    AbstractNode parse_element() {
        if (!consume('<')) fail("expected '<'");
        AbstractNode n;
        n.template_name = ident();
        for (;;) {
            skip_ws();
            if (consume('/')) {
                if (!consume('>')) fail("expected '>'");
                return n;
            }
            if (consume('>')) break;
            const auto key = ident();
            if (!consume('=') || !consume('"')) fail("expected =\"");
            const auto end = s_.find('"', pos_);
            if (end == std::string::npos) fail("unterminated attribute");
            const auto value = html::unescape(std::string_view(s_).substr(pos_, end - pos_));
            pos_ = end + 1;
            if (key == "name") {
                n.name = value;
            } else if (key == "count" && !value.empty() &&
                       std::all_of(value.begin(), value.end(), [](char c) { return c >= '0' && c <= '9'; })) {
                n.count = std::stoull(value);
            } else {
                n.attrs[key] = value;
            }
        }
        for (;;) {
            skip_ws();
            if (s_.compare(pos_, 2, "</") == 0) {
                pos_ += 2;
                if (ident() != n.template_name) fail("mismatched closing tag for " + n.template_name);
                skip_ws();
                if (!consume('>')) fail("expected '>'");
                return n;
            }
            if (pos_ >= s_.size()) fail("unclosed element " + n.template_name);
            n.children.push_back(parse_element());
        }
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

void collect_content(const html::Element& el, std::vector<std::string>& out) {
    const bool hidden = el.has_attr("data-visca-hidden");
    if (!hidden) {
        if (!el.text.empty()) out.push_back(el.text);
        for (const char* k : {"href", "src"}) {
            if (const auto* v = el.attr(k); v && !v->empty()) out.push_back(*v);
        }
    }
    for (const auto& c : el.children) collect_content(c, out);
}

void collect_carried(const AbstractNode& n, std::vector<std::string>& out) {
    out.push_back(n.name);
    for (const auto& [k, v] : n.attrs) out.push_back(v);
    for (const auto& c : n.children) collect_carried(c, out);
}

}  // namespace

std::string render_markup(const AbstractNode& root) {
    std::string out;
    render_into(root, 0, out);
    return out;
}

AbstractNode parse_markup(const std::string& markup) { return MarkupParser(markup).parse_document(); }

std::vector<std::string> missing_content(const std::string& snippet, const AbstractNode& abstraction) {
    std::vector<std::string> wanted;
    collect_content(html::parse(snippet), wanted);
    std::vector<std::string> carried;
    collect_carried(abstraction, carried);
    std::vector<std::string> missing;
    for (const auto& w : wanted) {
        const bool found = std::any_of(carried.begin(), carried.end(),
                                       [&](const std::string& c) { return c.find(w) != std::string::npos; });
        if (!found) missing.push_back(w);
    }
    return missing;
}

}  // namespace visca
