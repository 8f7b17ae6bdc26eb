#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace visca {

struct TemplateEntry {
    std::string name;
    std::string definition;
    std::vector<std::string> attribute_hints;
};

// Ordered set of common UI template names the abstraction may use.
class TemplateVocabulary {
public:
    static constexpr std::size_t kExpectedSize = 50;

    explicit TemplateVocabulary(std::vector<TemplateEntry> entries);

    // Built-in vocabulary (same contents as data/vocabulary.json).
    static const TemplateVocabulary& builtin();
    static TemplateVocabulary load(const std::filesystem::path& path);
    static TemplateVocabulary from_json(const nlohmann::json& j);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const std::vector<TemplateEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    nlohmann::json to_json() const;

private:
    std::vector<TemplateEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace visca
