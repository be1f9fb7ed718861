#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace handwash {

struct ClassLabel {
    int id = -1;
    std::string name;

    bool operator==(const ClassLabel&) const = default;
};

// Closed, ordered set of gesture classes. Ids are contiguous from 0 in
// registry order; names are unique and non-empty.
class LabelRegistry {
public:
    explicit LabelRegistry(std::vector<std::string> names);

    // The three gesture classes this project ships with, in report row order.
    static LabelRegistry default_registry();

    int size() const { return static_cast<int>(labels_.size()); }
    const ClassLabel& at(int id) const;
    std::optional<int> find(std::string_view name) const;
    const std::vector<ClassLabel>& labels() const { return labels_; }
    std::vector<std::string> names() const;

    bool operator==(const LabelRegistry&) const = default;

private:
    std::vector<ClassLabel> labels_;
};

}  // namespace handwash
