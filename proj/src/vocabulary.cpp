#include "visca/vocabulary.hpp"

#include <fstream>

#include "visca/errors.hpp"

namespace visca {

TemplateVocabulary::TemplateVocabulary(std::vector<TemplateEntry> entries) : entries_(std::move(entries)) {
    if (entries_.size() != kExpectedSize) {
        throw InputError("template vocabulary must have " + std::to_string(kExpectedSize) + " entries, got " +
                         std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name.empty()) throw InputError("template vocabulary entry " + std::to_string(i) + " has no name");
        if (!index_.emplace(entries_[i].name, i).second) {
            throw InputError("duplicate template name '" + entries_[i].name + "'");
        }
    }
}

const TemplateVocabulary& TemplateVocabulary::builtin() {
    static const TemplateVocabulary vocab(std::vector<TemplateEntry>{
        {"Accordion", "Vertically stacked headers that expand to reveal sections of content.", {}},
        {"Alert", "Inline message drawing attention to a status, warning or error.", {"severity"}},
        {"Avatar", "Small picture or initials representing a person or entity.", {"src", "alt"}},
        {"Badge", "Small count or status marker attached to another element.", {"value"}},
        {"Breadcrumb", "Trail of links showing the current location in a hierarchy.", {}},
        {"Button", "Clickable control that triggers an action.", {"value", "type"}},
        {"ButtonGroup", "Set of related buttons presented together.", {}},
        {"Calendar", "Month or week grid for viewing and picking dates.", {"value"}},
        {"Card", "Bordered container presenting content and actions about one subject.", {"title"}},
        {"Carousel", "Slideshow cycling through images or panels.", {}},
        {"Checkbox", "Box that toggles a single option on or off.", {"checked", "value"}},
        {"Chip", "Compact element representing an input, attribute or action.", {"value"}},
        {"Collapse", "Region whose content can be shown or hidden.", {}},
        {"Container", "Generic layout wrapper grouping other elements.", {}},
        {"DatePicker", "Input for choosing a date, usually with a calendar popup.", {"value", "placeholder"}},
        {"Dialog", "Modal window requiring user interaction.", {"title"}},
        {"Divider", "Thin line separating content.", {}},
        {"Drawer", "Panel sliding in from a screen edge.", {}},
        {"Dropdown", "Toggleable overlay listing actions or links.", {}},
        {"Footer", "Closing section of a page with secondary links and information.", {}},
        {"Form", "Group of input controls submitted together.", {"action", "method"}},
        {"Grid", "Two-dimensional layout of cells or items.", {}},
        {"Header", "Introductory section of a page or region, often with title and actions.", {}},
        {"Icon", "Small symbolic graphic.", {"src"}},
        {"Image", "Picture or illustration.", {"src", "alt"}},
        {"Input", "Single-line text field.", {"placeholder", "value", "type"}},
        {"Link", "Hyperlink to another page or location.", {"href"}},
        {"List", "Sequence of items sharing one template.", {}},
        {"ListItem", "One entry of a list.", {}},
        {"Menu", "List of choices or actions shown on demand.", {}},
        {"Navbar", "Primary navigation bar with branding, links and global actions.", {}},
        {"Pagination", "Controls for moving between pages of results.", {}},
        {"Popover", "Floating panel anchored to an element with extra content.", {}},
        {"Progress", "Indicator of completion of a task.", {"value"}},
        {"Radio", "Option that is one of a mutually exclusive set.", {"checked", "value"}},
        {"Rating", "Stars or similar control showing or collecting a score.", {"value"}},
        {"SearchBar", "Text field with submit control for searching.", {"placeholder", "value"}},
        {"Select", "Control for picking one option from a list.", {"value"}},
        {"Sidebar", "Vertical panel alongside the main content, often navigational.", {}},
        {"Skeleton", "Placeholder shape shown while content loads.", {}},
        {"Slider", "Control for choosing a value from a range by dragging.", {"value", "min", "max"}},
        {"Spinner", "Animated indicator of ongoing activity.", {}},
        {"Stepper", "Indicator of progress through numbered steps.", {}},
        {"Switch", "Toggle between on and off states.", {"checked"}},
        {"Tab", "Set of tabs switching between related views.", {}},
        {"Table", "Rows and columns of data.", {}},
        {"Tag", "Label categorising content.", {"value"}},
        {"Textarea", "Multi-line text field.", {"placeholder", "value"}},
        {"Toast", "Brief transient notification.", {}},
        {"Tooltip", "Short hint shown on hover or focus.", {}},
    });
    return vocab;
}

TemplateVocabulary TemplateVocabulary::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw InputError("vocabulary file must hold a JSON array");
    std::vector<TemplateEntry> entries;
    for (const auto& e : j) {
        TemplateEntry t;
        t.name = e.at("name").get<std::string>();
        t.definition = e.value("definition", std::string{});
        t.attribute_hints = e.value("attrs", std::vector<std::string>{});
        entries.push_back(std::move(t));
    }
    return TemplateVocabulary(std::move(entries));
}

TemplateVocabulary TemplateVocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("vocabulary " + path.string() + ": " + e.what());
    }
}

nlohmann::json TemplateVocabulary::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : entries_) {
        out.push_back({{"name", e.name}, {"definition", e.definition}, {"attrs", e.attribute_hints}});
    }
    return out;
}

}  // namespace visca
