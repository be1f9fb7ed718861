#include "handwash/labels.hpp"

#include <unordered_set>

#include "handwash/errors.hpp"

namespace handwash {

LabelRegistry::LabelRegistry(std::vector<std::string> names) {
    if (names.empty()) throw ConfigError("label registry must not be empty");
    std::unordered_set<std::string> seen;
    labels_.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].empty()) throw ConfigError("label names must be non-empty");
        if (!seen.insert(names[i]).second)
            throw ConfigError("duplicate label name: " + names[i]);
        labels_.push_back(ClassLabel{static_cast<int>(i), std::move(names[i])});
    }
}

LabelRegistry LabelRegistry::default_registry() {
    return LabelRegistry({"FingersInterlaced", "Linear", "Palm2Palm"});
}

const ClassLabel& LabelRegistry::at(int id) const {
    if (id < 0 || id >= size())
        throw ConfigError("label id out of range: " + std::to_string(id));
    return labels_[static_cast<std::size_t>(id)];
}

std::optional<int> LabelRegistry::find(std::string_view name) const {
    for (const auto& l : labels_)
        if (l.name == name) return l.id;
    return std::nullopt;
}

std::vector<std::string> LabelRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto& l : labels_) out.push_back(l.name);
    return out;
}

}  // namespace handwash
