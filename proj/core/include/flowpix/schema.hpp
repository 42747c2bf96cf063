#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowpix/records.hpp"

namespace flowpix {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    double min = 0.0;  // numeric only
    double max = 0.0;  // numeric only
    std::vector<std::string> vocab;  // categorical only, sorted byte-wise

    bool is_categorical() const { return kind == FeatureKind::categorical; }
    // Index of `category` in vocab, if present.
    std::optional<std::size_t> category_index(std::string_view category) const;

    bool operator==(const FeatureSpec&) const = default;
};

struct FeatureSchema {
    std::vector<FeatureSpec> features;  // source CSV column order
    std::string label_column;
    std::vector<std::string> class_names;

    // Throws Error(format) when an invariant is violated.
    void validate() const;
    std::optional<std::size_t> find(std::string_view feature) const;
    std::optional<std::size_t> class_index(std::string_view label) const;
    std::size_t numeric_count() const;
    std::size_t categorical_count() const;

    // Content checksum over the serialized form; stable across runs.
    std::string digest() const;

    bool operator==(const FeatureSchema&) const = default;
};

// Options for schema inference over a loaded training table.
struct SchemaOptions {
    std::set<std::string> categorical;
    // Columns that are neither features nor the label (row ids, the
    // redundant binary label).
    std::set<std::string> ignored;
};

// Defaults for the UNSW-NB15 release CSVs: proto/service/state categorical,
// id and the binary label ignored, attack_cat as the class label.
SchemaOptions unsw_schema_options();
inline constexpr std::string_view kUnswLabelColumn = "attack_cat";
inline constexpr std::string_view kUnswBinaryColumn = "label";

// Min/max and vocabularies are computed from `training` only.
FeatureSchema infer_schema(const LabeledTable& training, const SchemaOptions& options);

std::string serialize_schema(const FeatureSchema& schema);
FeatureSchema parse_schema(std::string_view text);
void save_schema(const FeatureSchema& schema, const std::string& path);
FeatureSchema load_schema(const std::string& path);

struct EncodedColumn {
    std::string name;  // feature name, or "<feature>_<category>"
    std::string source;
    std::optional<std::string> category;

    bool operator==(const EncodedColumn&) const = default;
};

// Numeric features in source order, then one-hot groups: service, protocol,
// state, then any other categorical feature in source order.
std::vector<EncodedColumn> expand_columns(const FeatureSchema& schema);

inline constexpr std::size_t kCanvasWidth = 16;
inline constexpr std::size_t kCanvasHeight = 16;
inline constexpr std::size_t kCanvasCells = kCanvasWidth * kCanvasHeight;
inline constexpr std::string_view kPadName = "PAD";

struct CellPosition {
    std::size_t row = 1;  // 1-based
    std::size_t col = 1;  // 1-based
};

inline constexpr CellPosition cell_position(std::size_t index) {
    return {index / kCanvasWidth + 1, index % kCanvasWidth + 1};
}
inline constexpr std::size_t cell_index(CellPosition pos) {
    return (pos.row - 1) * kCanvasWidth + (pos.col - 1);
}

// Bijection between encoded columns and the 256 cells of the canvas.
// cells[i] holds the column name bound to row-major cell i, or "PAD".
class LayoutManifest {
public:
    LayoutManifest(std::array<std::string, kCanvasCells> cells, std::string schema_digest);

    const std::array<std::string, kCanvasCells>& cells() const { return cells_; }
    const std::string& schema_digest() const { return schema_digest_; }
    const std::string& content(CellPosition pos) const { return cells_[cell_index(pos)]; }
    bool is_pad(std::size_t index) const { return cells_[index] == kPadName; }
    std::size_t pad_count() const;
    std::optional<std::size_t> cell_of(std::string_view column) const;

    bool operator==(const LayoutManifest&) const = default;

private:
    std::array<std::string, kCanvasCells> cells_;
    std::string schema_digest_;
};

// Row-major fill; remaining cells are PAD. Throws Error(layout_overflow)
// past 256 columns.
LayoutManifest build_layout(std::span<const EncodedColumn> columns, std::string schema_digest);
LayoutManifest build_layout(const FeatureSchema& schema);

// Seeded uniform permutation of all 256 cell bindings, PAD included.
LayoutManifest permute_layout(const LayoutManifest& manifest, std::uint64_t seed);

std::string serialize_manifest(const LayoutManifest& manifest);
LayoutManifest parse_manifest(std::string_view text);
void save_manifest(const LayoutManifest& manifest, const std::string& path);
LayoutManifest load_manifest(const std::string& path);
// Also checks the digest and column set against `schema`; throws
// Error(stale_manifest) on mismatch.
LayoutManifest load_manifest(const std::string& path, const FeatureSchema& schema);
void check_manifest_matches(const LayoutManifest& manifest, const FeatureSchema& schema);

}  // namespace flowpix
