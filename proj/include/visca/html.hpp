#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace visca::html {

// Lightweight element tree produced by parse(). Text is the element's own
// character data, whitespace-collapsed; child elements are kept in order.
struct Element {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::string text;
    std::vector<Element> children;

    const std::string* attr(std::string_view name) const;
    bool has_attr(std::string_view name) const { return attr(name) != nullptr; }
};

bool is_void_tag(std::string_view tag);

// Tolerant parser: unknown or unbalanced end tags are ignored, unclosed
// elements are closed at end of input. Comments, doctype, <script> and
// <style> bodies are skipped. Returns a synthetic "#document" root.
Element parse(std::string_view source);

std::string escape_text(std::string_view s);
std::string escape_attr(std::string_view s);
std::string unescape(std::string_view s);

// Collapses runs of whitespace to single spaces and trims.
std::string collapse_whitespace(std::string_view s);

// Depth-first search for the first element with the given tag.
const Element* find_first(const Element& root, std::string_view tag);

}  // namespace visca::html
