#include "flowpix/records.hpp"

#include <algorithm>

#include "flowpix/error.hpp"

namespace flowpix {

const char* to_string(Split split) noexcept { return split == Split::train ? "train" : "test"; }

Split parse_split(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "test") return Split::test;
    throw Error(ErrorKind::invalid_argument, "unknown split '" + std::string(text) + "'");
}

Header::Header(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second) {
            throw Error(ErrorKind::format, "duplicate column '" + names_[i] + "'");
        }
    }
}

std::optional<std::size_t> Header::find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string* FlowRecord::value(std::string_view column) const {
    if (!header) return nullptr;
    const auto index = header->find(column);
    if (!index || *index >= values.size()) return nullptr;
    return &values[*index];
}

void LabeledTable::recount() {
    class_counts.assign(class_names.size(), 0);
    for (const auto& record : records) ++class_counts.at(record.class_index);
}

std::vector<std::string> canonical_class_order(std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const auto normal = std::find(labels.begin(), labels.end(), kNormalClass);
    if (normal != labels.end()) std::rotate(labels.begin(), normal, normal + 1);
    return labels;
}

}  // namespace flowpix
