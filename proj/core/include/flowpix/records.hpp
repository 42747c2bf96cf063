#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace flowpix {

inline constexpr std::string_view kNormalClass = "Normal";

enum class Split { train, test };

const char* to_string(Split split) noexcept;
Split parse_split(std::string_view text);

// Column names of a source table, shared by all of its records.
class Header {
public:
    explicit Header(std::vector<std::string> names);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    std::optional<std::size_t> find(std::string_view name) const;

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

// One flow row. Values are the raw cell strings, keyed by the shared header.
struct FlowRecord {
    std::shared_ptr<const Header> header;
    std::vector<std::string> values;
    std::string label;
    std::size_t class_index = 0;
    std::string record_id;

    const std::string* value(std::string_view column) const;
};

struct RowIssue {
    std::size_t row = 0;  // 1-based line number in the source file
    std::string message;
};

struct LabeledTable {
    std::string source;
    Split split = Split::train;
    std::shared_ptr<const Header> header;
    std::string label_column;
    std::vector<FlowRecord> records;
    std::vector<std::string> class_names;
    std::vector<std::size_t> class_counts;
    std::vector<RowIssue> issues;

    std::size_t size() const { return records.size(); }
    // Recomputes class_counts from the records.
    void recount();
};

// Normal first, then the remaining labels sorted byte-wise.
std::vector<std::string> canonical_class_order(std::vector<std::string> labels);

}  // namespace flowpix
