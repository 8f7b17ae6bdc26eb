#include "visca/mock_provider.hpp"

#include <algorithm>
#include <set>

#include "visca/html.hpp"
#include "visca/prompts.hpp"

namespace visca::llm {

using nlohmann::json;

namespace {

constexpr std::size_t kTitleLimit = 40;

bool is_hidden(const html::Element& el) { return el.has_attr("data-visca-hidden"); }

// Truncates to at most `limit` bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(const std::string& s, std::size_t limit) {
    if (s.size() <= limit) return s;
    std::size_t cut = limit;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut);
}

void collect_texts(const html::Element& el, std::vector<std::string>& out) {
    if (!is_hidden(el) && !el.text.empty()) out.push_back(el.text);
    for (const auto& c : el.children) collect_texts(c, out);
}

std::string longest_text(const html::Element& root) {
    std::vector<std::string> texts;
    collect_texts(root, texts);
    std::string best;
    for (const auto& t : texts) {
        if (t.size() > best.size()) best = t;
    }
    return best;
}

std::string first_heading(const html::Element& el) {
    if (is_hidden(el)) return {};
    if (el.tag.size() == 2 && el.tag[0] == 'h' && el.tag[1] >= '1' && el.tag[1] <= '6' && !el.text.empty()) {
        return el.text;
    }
    for (const auto& c : el.children) {
        if (auto t = first_heading(c); !t.empty()) return t;
    }
    return {};
}

const html::Element* first_element(const html::Element& doc) {
    return doc.children.empty() ? nullptr : &doc.children.front();
}

std::string attr_or(const html::Element& el, const char* name, const std::string& fallback = {}) {
    const auto* v = el.attr(name);
    return v && !v->empty() ? *v : fallback;
}

// "cart-list main" -> "Cart list"
std::string humanize(const std::string& cls) {
    std::string out = cls.substr(0, cls.find(' '));
    for (auto& ch : out) {
        if (ch == '-' || ch == '_') ch = ' ';
    }
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out;
}

struct Mapper {
    std::string root_title;

    std::vector<json> map(const html::Element& el, bool is_root) const {
        std::vector<json> kids;
        for (const auto& c : el.children) {
            auto mapped = map(c, false);
            kids.insert(kids.end(), std::make_move_iterator(mapped.begin()), std::make_move_iterator(mapped.end()));
        }
        if (is_hidden(el) && !is_root) return kids;

        const std::string& tag = el.tag;
        const std::string type = attr_or(el, "type");
        std::string tmpl;
        std::string name = el.text;
        json attrs = json::object();

        if (tag == "img") {
            tmpl = "Image";
            name = attr_or(el, "alt", "Image");
            if (el.has_attr("src")) attrs["src"] = *el.attr("src");
            if (el.has_attr("alt")) attrs["alt"] = *el.attr("alt");
        } else if (tag == "a") {
            tmpl = "Link";
            if (el.has_attr("href")) attrs["href"] = *el.attr("href");
            if (name.empty()) name = attr_or(el, "href", "Link");
        } else if (tag == "button" || (tag == "input" && (type == "button" || type == "submit"))) {
            tmpl = "Button";
            if (el.has_attr("value")) attrs["value"] = *el.attr("value");
            if (name.empty()) name = attr_or(el, "value", "Button");
        } else if (tag == "input") {
            tmpl = "Input";
            for (const char* k : {"placeholder", "value", "type"}) {
                if (el.has_attr(k)) attrs[k] = *el.attr(k);
            }
            name = attr_or(el, "placeholder", attr_or(el, "name", attr_or(el, "type", "Input")));
        } else if (tag == "select") {
            tmpl = "Select";
            if (name.empty()) name = attr_or(el, "name", "Select");
        } else if (tag == "textarea") {
            tmpl = "Textarea";
            if (el.has_attr("placeholder")) attrs["placeholder"] = *el.attr("placeholder");
            if (!el.text.empty()) attrs["value"] = el.text;
            name = attr_or(el, "placeholder", attr_or(el, "name", "Textarea"));
        } else if (tag == "table") {
            tmpl = "Table";
        } else if (tag == "ul" || tag == "ol") {
            tmpl = "List";
        } else if (tag == "nav") {
            tmpl = "Navbar";
        } else if (tag == "header") {
            tmpl = "Header";
        } else if (tag == "footer") {
            tmpl = "Footer";
        } else if (tag == "form") {
            tmpl = "Form";
            for (const char* k : {"action", "method"}) {
                if (el.has_attr(k)) attrs[k] = *el.attr(k);
            }
        } else {
            // Plain wrappers add nothing below the segment root.
            if (el.text.empty() && (kids.size() == 1 || (!is_root && !kids.empty()))) {
                if (is_root) retitle(kids.front());
                return kids;
            }
            tmpl = kids.size() >= 2 ? "Card" : "Container";
        }

        json node = {{"template", tmpl}, {"name", name}, {"attrs", attrs}};
        if (const auto* id = el.attr("data-visca-id")) node["source"] = *id;
        node["children"] = std::move(kids);
        if (is_root) retitle(node);
        return {std::move(node)};
    }

    void retitle(json& node) const {
        if (root_title.empty()) return;
        const auto old = node.value("name", std::string{});
        if (!old.empty() && old != root_title && !node["attrs"].contains("text")) node["attrs"]["text"] = old;
        node["name"] = root_title;
    }
};

const std::set<std::string> kInteractive = {"Button", "Link",     "Input",  "Textarea", "Select", "SearchBar",
                                            "Checkbox", "Radio", "Switch", "Slider",   "Tab"};

void collect_features(const json& node, const json& component, bool is_root, json& out) {
    const auto tmpl = node.value("template", std::string{});
    if (kInteractive.count(tmpl) && node.contains("source")) {
        const auto node_name = node.value("name", tmpl);
        const auto comp_name = component.value("name", component.value("template", std::string{}));
        std::string feature_name = is_root || comp_name.empty() ? node_name : node_name + " in " + comp_name;
        json action = {{"target", "@" + node.at("source").get<std::string>()}, {"value", nullptr}};
        if (tmpl == "Input" || tmpl == "Textarea" || tmpl == "SearchBar") {
            action["kind"] = "type";
            action["value"] = "sample text";
        } else if (tmpl == "Select") {
            action["kind"] = "select";
            action["value"] = node.contains("attrs") ? node["attrs"].value("value", std::string("1")) : "1";
        } else {
            action["kind"] = "click";
        }
        out.push_back({{"name", feature_name}, {"actions", json::array({action})}});
    }
    for (const auto& c : node.value("children", json::array())) collect_features(c, component, false, out);
}

}  // namespace

CompletionResponse MockProvider::complete(const CompletionRequest& request) {
    const auto input = prompts::find_input(request);
    if (!input || !input->contains("task")) throw ProviderProtocolError("mock: request has no INPUT block");
    const auto task = input->at("task").get<std::string>();

    json reply;
    std::string subject;
    if (task == prompts::kDescribePage) {
        reply = describe_page(*input, prompts::find_image(request));
    } else if (task == prompts::kClassifySegment) {
        subject = input->value("segment_id", std::string{});
        reply = classify_segment(*input);
    } else if (task == prompts::kTransformComponent) {
        subject = input->value("segment_id", std::string{});
        reply = transform_component(*input);
    } else if (task == prompts::kInferFeatures) {
        subject = input->contains("component") ? input->at("component").value("name", std::string{}) : "";
        reply = infer_features(*input);
    } else {
        throw ProviderProtocolError("mock: unknown task '" + task + "'");
    }
    {
        std::lock_guard lock(mutex_);
        calls_.push_back({task, subject});
    }
    CompletionResponse r;
    r.text = reply.dump();
    r.provider = name();
    r.usage = Usage{0, 0};
    return r;
}

json MockProvider::describe_page(const json& input, const RgbImage* screenshot) {
    bool blank = screenshot == nullptr || screenshot->empty();
    if (!blank) {
        blank = true;
        const Rgb first = screenshot->at(0, 0);
        for (int y = 0; y < screenshot->height() && blank; ++y) {
            for (int x = 0; x < screenshot->width(); ++x) {
                if (!(screenshot->at(x, y) == first)) {
                    blank = false;
                    break;
                }
            }
        }
    }
    if (blank) return {{"description", "Unknown page"}};
    const auto title = input.value("title", std::string{});
    std::string heading;
    for (const auto& h : input.value("headings", json::array())) {
        heading = h.get<std::string>();
        break;
    }
    std::string text = title.empty() ? "Web page" : "Web page \"" + title + "\"";
    if (!heading.empty()) text += " showing " + heading;
    return {{"description", text + "."}};
}

json MockProvider::classify_segment(const json& input) {
    const auto children = input.value("children", json::array());
    std::string cls = "Component";
    if (children.size() >= 2) {
        bool same_shape = true;
        bool mixed_tags = false;
        bool any_inner = false;
        const auto& first = children.front();
        for (const auto& c : children) {
            same_shape = same_shape && c.at("shape") == first.at("shape");
            mixed_tags = mixed_tags || c.at("tag") != first.at("tag");
            any_inner = any_inner || !c.value("leaf", true);
        }
        if (same_shape && (children.size() >= 3 || any_inner)) {
            cls = "List";
        } else if (mixed_tags && any_inner) {
            cls = "Container";
        }
    }

    const auto doc = html::parse(input.value("html", std::string{}));
    const auto* root = first_element(doc);
    std::string title;
    if (root && cls != "Component") title = first_heading(*root);
    if (title.empty() && root && cls == "List") title = humanize(attr_or(*root, "class"));
    if (title.empty() && root && cls == "List") title = "List of " + std::to_string(children.size()) + " items";
    if (title.empty() && root) title = longest_text(*root);
    if (title.empty() && root) {
        for (const char* k : {"aria-label", "placeholder", "alt", "value", "name"}) {
            title = attr_or(*root, k);
            if (!title.empty()) break;
        }
    }
    title = truncate_utf8(title, kTitleLimit);
    const std::string tag = root ? root->tag : "segment";
    if (title.empty()) title = tag + " segment";

    std::string where = "the page";
    const auto ancestors = input.value("ancestors", json::array());
    if (!ancestors.empty()) where = "\"" + ancestors.back().value("title", std::string{"its parent"}) + "\"";
    std::string context;
    if (cls == "List") {
        context = "This segment lists " + std::to_string(children.size()) + " similar items inside " + where + ".";
    } else if (cls == "Container") {
        context = "This segment groups " + std::to_string(children.size()) + " sections of " + where + ".";
    } else {
        context = "This segment presents \"" + title + "\" within " + where + ".";
    }
    return {{"reasoning", "mock rule"}, {"class", cls}, {"title", title}, {"context", context}};
}

json MockProvider::transform_component(const json& input) {
    const auto doc = html::parse(input.value("html", std::string{}));
    const auto* root = first_element(doc);
    if (!root) return {{"template", "Container"}, {"name", input.value("title", std::string{})}, {"attrs", json::object()}, {"children", json::array()}};
    Mapper mapper{input.value("title", std::string{})};
    auto mapped = mapper.map(*root, true);
    if (mapped.size() == 1) return mapped.front();
    return {{"template", "Container"},
            {"name", mapper.root_title},
            {"attrs", json::object()},
            {"source", root->attr("data-visca-id") ? *root->attr("data-visca-id") : ""},
            {"children", mapped}};
}

json MockProvider::infer_features(const json& input) {
    json features = json::array();
    const auto& component = input.at("component");
    collect_features(component, component, true, features);

    std::string assertion_target;
    for (const auto& a : input.value("ancestors", json::array())) {
        if (a.value("template", std::string{}) == "List" && a.contains("source")) {
            assertion_target = a.at("source").get<std::string>();
        }
    }
    if (assertion_target.empty() && component.contains("source")) {
        assertion_target = component.at("source").get<std::string>();
    }
    const auto comp_name = component.value("name", component.value("template", std::string{}));
    for (auto& f : features) {
        f["assertion_hint"] = "\"" + comp_name + "\" is still displayed";
        if (!assertion_target.empty()) f["assertion_target"] = "@" + assertion_target;
    }
    return {{"features", features}};
}

std::vector<MockProvider::Call> MockProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t MockProvider::call_count(const std::string& task) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [&](const Call& c) { return c.task == task; }));
}

std::size_t MockProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return calls_.size();
}

void MockProvider::reset() {
    std::lock_guard lock(mutex_);
    calls_.clear();
}

}  // namespace visca::llm
