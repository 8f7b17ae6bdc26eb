#include "visca/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace visca::html {

namespace {

constexpr std::array<std::string_view, 14> kVoidTags = {"area", "base",  "br",   "col",   "embed",
                                                        "hr",   "img",   "input", "link", "meta",
                                                        "param", "source", "track", "wbr"};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Element run() {
        Element doc;
        doc.tag = "#document";
        stack_.push_back(&doc);
        while (pos_ < src_.size()) {
            if (src_[pos_] == '<') {
                if (starts_with("<!--")) {
                    skip_past("-->");
                } else if (starts_with("<!") || starts_with("<?")) {
                    skip_past(">");
                } else if (starts_with("</")) {
                    end_tag();
                } else if (pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
                    start_tag();
                } else {
                    text_.push_back('<');
                    ++pos_;
                }
            } else {
                text_.push_back(src_[pos_++]);
            }
        }
        flush_text();
        finalize(doc);
        return doc;
    }

private:
    bool starts_with(std::string_view prefix) const { return src_.substr(pos_, prefix.size()) == prefix; }

    void skip_past(std::string_view terminator) {
        const auto end = src_.find(terminator, pos_);
        pos_ = end == std::string_view::npos ? src_.size() : end + terminator.size();
    }

    void flush_text() {
        if (!text_.empty()) {
            auto& target = stack_.back()->text;
            target += ' ';
            target += unescape(text_);
            text_.clear();
        }
    }

    std::string read_name() {
        const std::size_t begin = pos_;
        while (pos_ < src_.size() && is_name_char(src_[pos_])) ++pos_;
        return lower(src_.substr(begin, pos_ - begin));
    }

    void skip_spaces() {
        while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
    }

    void start_tag() {
        flush_text();
        ++pos_;  // '<'
        Element el;
        el.tag = read_name();
        bool self_closing = false;
        while (pos_ < src_.size()) {
            skip_spaces();
            if (pos_ >= src_.size()) break;
            if (src_[pos_] == '>') {
                ++pos_;
                break;
            }
            if (starts_with("/>")) {
                self_closing = true;
                pos_ += 2;
                break;
            }
            std::string name = read_name();
            if (name.empty()) {
                ++pos_;
                continue;
            }
            skip_spaces();
            std::string value;
            if (pos_ < src_.size() && src_[pos_] == '=') {
                ++pos_;
                skip_spaces();
                if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
                    const char quote = src_[pos_++];
                    const auto end = src_.find(quote, pos_);
                    const auto stop = end == std::string_view::npos ? src_.size() : end;
                    value = unescape(src_.substr(pos_, stop - pos_));
                    pos_ = std::min(stop + 1, src_.size());
                } else {
                    const std::size_t begin = pos_;
                    while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>') ++pos_;
                    value = unescape(src_.substr(begin, pos_ - begin));
                }
            }
            el.attrs.emplace_back(std::move(name), std::move(value));
        }

        Element& parent = *stack_.back();
        parent.children.push_back(std::move(el));
        Element& inserted = parent.children.back();
        const std::string tag = inserted.tag;
        if (tag == "script" || tag == "style") {
            skip_past("</" + tag);
            skip_past(">");
            return;
        }
        if (!self_closing && !is_void_tag(tag)) {
            // Children vectors of ancestors are not touched while this
            // element is open, so the pointer stays valid.
            stack_.push_back(&inserted);
        }
    }

    void end_tag() {
        flush_text();
        pos_ += 2;
        const std::string name = read_name();
        skip_past(">");
        for (std::size_t i = stack_.size(); i > 1; --i) {
            if (stack_[i - 1]->tag == name) {
                stack_.resize(i - 1);
                return;
            }
        }
    }

    static void finalize(Element& el) {
        el.text = collapse_whitespace(el.text);
        for (auto& c : el.children) finalize(c);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::string text_;
    std::vector<Element*> stack_;
};

}  // namespace

const std::string* Element::attr(std::string_view name) const {
    for (const auto& [k, v] : attrs) {
        if (k == name) return &v;
    }
    return nullptr;
}

bool is_void_tag(std::string_view tag) {
    return std::find(kVoidTags.begin(), kVoidTags.end(), tag) != kVoidTags.end();
}

Element parse(std::string_view source) { return Parser(source).run(); }

std::string escape_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string escape_attr(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape(std::string_view s) {
    static constexpr std::pair<std::string_view, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}, {"&apos;", '\''}, {"&nbsp;", ' '}};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        bool matched = false;
        if (s[i] == '&') {
            for (const auto& [entity, ch] : kEntities) {
                if (s.substr(i, entity.size()) == entity) {
                    out += ch;
                    i += entity.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) out += s[i++];
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

const Element* find_first(const Element& root, std::string_view tag) {
    if (root.tag == tag) return &root;
    for (const auto& c : root.children) {
        if (const auto* hit = find_first(c, tag)) return hit;
    }
    return nullptr;
}

}  // namespace visca::html
