#include "visca/selector.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "visca/errors.hpp"

namespace visca::css {

namespace {

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
}

bool is_ident(const std::string& s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    if (s[0] == '-' && (s.size() == 1 || std::isdigit(static_cast<unsigned char>(s[1])))) return false;
    return std::all_of(s.begin(), s.end(), ident_char);
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    Selector run() {
        Selector sel;
        skip_ws();
        sel.compounds.push_back(compound());
        for (;;) {
            const bool had_ws = skip_ws();
            if (pos_ >= s_.size()) break;
            char comb = ' ';
            if (s_[pos_] == '>') {
                comb = '>';
                ++pos_;
                skip_ws();
            } else if (!had_ws) {
                fail("unexpected character");
            }
            sel.combinators.push_back(comb);
            sel.compounds.push_back(compound());
        }
        return sel;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("selector '" + s_ + "': " + what + " at " + std::to_string(pos_));
    }

    bool skip_ws() {
        const auto start = pos_;
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        return pos_ != start;
    }

    std::string ident() {
        const auto start = pos_;
        while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
        if (start == pos_) fail("expected identifier");
        return s_.substr(start, pos_ - start);
    }

    Compound compound() {
        Compound c;
        bool any = false;
        if (pos_ < s_.size() && s_[pos_] == '*') {
            c.tag = "*";
            ++pos_;
            any = true;
        } else if (pos_ < s_.size() && ident_char(s_[pos_])) {
            c.tag = ident();
            std::transform(c.tag.begin(), c.tag.end(), c.tag.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
            any = true;
        }
        while (pos_ < s_.size()) {
            const char ch = s_[pos_];
            if (ch == '#') {
                ++pos_;
                c.id = ident();
            } else if (ch == '.') {
                ++pos_;
                c.classes.push_back(ident());
            } else if (ch == '[') {
                ++pos_;
                skip_ws();
                auto name = ident();
                skip_ws();
                std::optional<std::string> value;
                if (pos_ < s_.size() && s_[pos_] == '=') {
                    ++pos_;
                    skip_ws();
                    value = quoted_or_ident();
                    skip_ws();
                }
                if (pos_ >= s_.size() || s_[pos_] != ']') fail("expected ']'");
                ++pos_;
                c.attrs.emplace_back(std::move(name), std::move(value));
            } else if (ch == ':') {
                static const std::string kNth = ":nth-of-type(";
                if (s_.compare(pos_, kNth.size(), kNth) != 0) fail("unsupported pseudo-class");
                pos_ += kNth.size();
                const auto start = pos_;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
                if (start == pos_ || pos_ >= s_.size() || s_[pos_] != ')') fail("bad :nth-of-type argument");
                c.nth_of_type = std::stoi(s_.substr(start, pos_ - start));
                ++pos_;
                if (c.nth_of_type < 1) fail(":nth-of-type index must be positive");
            } else {
                break;
            }
            any = true;
        }
        if (!any) fail("empty compound selector");
        return c;
    }

    std::string quoted_or_ident() {
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
            const char q = s_[pos_++];
            std::string out;
            while (pos_ < s_.size() && s_[pos_] != q) {
                if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
                out += s_[pos_++];
            }
            if (pos_ >= s_.size()) fail("unterminated string");
            ++pos_;
            return out;
        }
        return ident();
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

std::vector<std::string> split_classes(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string c; in >> c;) out.push_back(c);
    return out;
}

int nth_of_type(const PageSnapshot& snap, NodeIndex node) {
    const auto parent = snap.dom_parent(node);
    if (!parent) return 1;
    int k = 0;
    for (NodeIndex sib : snap.dom_children(*parent)) {
        if (snap.node(sib).tag == snap.node(node).tag) ++k;
        if (sib == node) return k;
    }
    return k;
}

int count_of_type(const PageSnapshot& snap, NodeIndex node) {
    const auto parent = snap.dom_parent(node);
    if (!parent) return 1;
    int k = 0;
    for (NodeIndex sib : snap.dom_children(*parent)) k += snap.node(sib).tag == snap.node(node).tag;
    return k;
}

bool matches(const PageSnapshot& snap, NodeIndex node, const Compound& c) {
    const auto& rec = snap.node(node);
    if (!c.tag.empty() && c.tag != "*" && c.tag != rec.tag) return false;
    if (!c.id.empty()) {
        auto it = rec.attrs.find("id");
        if (it == rec.attrs.end() || it->second != c.id) return false;
    }
    if (!c.classes.empty()) {
        auto it = rec.attrs.find("class");
        if (it == rec.attrs.end()) return false;
        const auto have = split_classes(it->second);
        for (const auto& want : c.classes) {
            if (std::find(have.begin(), have.end(), want) == have.end()) return false;
        }
    }
    for (const auto& [name, value] : c.attrs) {
        auto it = rec.attrs.find(name);
        if (it == rec.attrs.end()) return false;
        if (value && it->second != *value) return false;
    }
    if (c.nth_of_type && nth_of_type(snap, node) != c.nth_of_type) return false;
    return true;
}

// Right-to-left match of compounds[0..k] ending at `node`.
bool matches_at(const PageSnapshot& snap, const Selector& sel, std::size_t k, NodeIndex node) {
    if (!matches(snap, node, sel.compounds[k])) return false;
    if (k == 0) return true;
    const char comb = sel.combinators[k - 1];
    auto anc = snap.dom_parent(node);
    if (comb == '>') return anc && matches_at(snap, sel, k - 1, *anc);
    for (; anc; anc = snap.dom_parent(*anc)) {
        if (matches_at(snap, sel, k - 1, *anc)) return true;
    }
    return false;
}

std::string quote(const std::string& v) {
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

// Candidate compound selectors for a node, most specific first.
std::vector<std::string> local_candidates(const PageSnapshot& snap, NodeIndex node) {
    const auto& rec = snap.node(node);
    std::vector<std::string> out;
    if (auto it = rec.attrs.find("id"); it != rec.attrs.end() && is_ident(it->second)) {
        out.push_back(rec.tag + "#" + it->second);
    }
    if (auto it = rec.attrs.find("name"); it != rec.attrs.end() && !it->second.empty()) {
        out.push_back(rec.tag + "[name=" + quote(it->second) + "]");
    }
    if (auto it = rec.attrs.find("class"); it != rec.attrs.end()) {
        std::string s = rec.tag;
        bool any = false;
        for (const auto& c : split_classes(it->second)) {
            if (!is_ident(c)) continue;
            s += "." + c;
            any = true;
        }
        if (any) out.push_back(s);
    }
    out.push_back(rec.tag);
    return out;
}

}  // namespace

Selector parse(const std::string& text) { return Parser(text).run(); }

std::vector<NodeIndex> match(const PageSnapshot& snapshot, const Selector& selector) {
    std::vector<NodeIndex> out;
    const auto last = selector.compounds.size() - 1;
    for (NodeIndex i = 0; i < snapshot.nodes().size(); ++i) {
        if (matches_at(snapshot, selector, last, i)) out.push_back(i);
    }
    return out;
}

std::vector<NodeIndex> match(const PageSnapshot& snapshot, const std::string& text) {
    return match(snapshot, parse(text));
}

std::string unique_selector(const PageSnapshot& snapshot, NodeIndex node) {
    const auto unique = [&](const std::string& s) {
        const auto m = match(snapshot, s);
        return m.size() == 1 && m.front() == node;
    };
    const auto locals = local_candidates(snapshot, node);
    for (const auto& s : locals) {
        if (unique(s)) return s;
    }
    const std::string nth = ":nth-of-type(" + std::to_string(nth_of_type(snapshot, node)) + ")";
    for (const auto& s : locals) {
        if (unique(s + nth)) return s + nth;
    }
    const auto parent = snapshot.dom_parent(node);
    if (!parent) return locals.back();  // the document root is unique by tag
    const std::string step = count_of_type(snapshot, node) > 1 ? locals.back() + nth : locals.back();
    return unique_selector(snapshot, *parent) + " > " + step;
}

}  // namespace visca::css
