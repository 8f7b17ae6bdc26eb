#pragma once

#include <optional>
#include <string>
#include <vector>

#include "visca/snapshot.hpp"

namespace visca::css {

// Subset of CSS selectors: type, #id, .class, [attr], [attr="v"],
// :nth-of-type(n), joined by descendant (space) or child (>) combinators.
struct Compound {
    std::string tag;  // empty or "*" matches any
    std::string id;
    std::vector<std::string> classes;
    std::vector<std::pair<std::string, std::optional<std::string>>> attrs;
    int nth_of_type = 0;  // 1-based; 0 = unconstrained
};

struct Selector {
    std::vector<Compound> compounds;  // left to right
    std::vector<char> combinators;    // between compounds: ' ' or '>'
};

// Throws InputError on unsupported syntax.
Selector parse(const std::string& text);

// Snapshot nodes (document order) the selector matches.
std::vector<NodeIndex> match(const PageSnapshot& snapshot, const Selector& selector);
std::vector<NodeIndex> match(const PageSnapshot& snapshot, const std::string& text);

// Shortest of: tag#id, tag.classes, tag[name=..], each optionally with
// :nth-of-type, then a child chain from the nearest uniquely selectable
// ancestor. The result matches exactly `node`.
std::string unique_selector(const PageSnapshot& snapshot, NodeIndex node);

}  // namespace visca::css
