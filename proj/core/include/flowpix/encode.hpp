#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowpix/records.hpp"
#include "flowpix/schema.hpp"

namespace flowpix {

inline constexpr std::uint8_t kDefaultPadValue = 255;
inline constexpr std::uint8_t kOneHotOn = 255;

using PixelGrid = std::array<std::uint8_t, kCanvasCells>;  // row-major 16x16

struct Thumbnail {
    PixelGrid pixels{};
    std::size_t label = 0;
    std::string record_id;

    std::uint8_t at(CellPosition pos) const { return pixels[cell_index(pos)]; }
    bool operator==(const Thumbnail&) const = default;
};

// Min-max scaling onto 0..255. Values are clamped to [min, max] first; a
// degenerate range maps to 0. Non-finite input throws Error(malformed_cell).
std::uint8_t scale_numeric(double value, double min, double max);

// Affine inverse of scale_numeric (min for a degenerate range).
double descale_numeric(std::uint8_t pixel, double min, double max);

// Encoder bound to one (schema, layout) pair. Resolves each cell's source
// once, so encoding a record costs one pass over the cells.
class Encoder {
public:
    Encoder(const FeatureSchema& schema, const LayoutManifest& layout,
            std::uint8_t pad_value = kDefaultPadValue);

    // Throws Error(malformed_record) for missing columns or unknown labels and
    // Error(malformed_cell) for unparseable numerics.
    Thumbnail encode(const FlowRecord& record) const;

    const FeatureSchema& schema() const { return schema_; }
    const LayoutManifest& layout() const { return layout_; }
    std::uint8_t pad_value() const { return pad_value_; }

private:
    struct CellSource {
        enum class Kind { pad, numeric, one_hot } kind = Kind::pad;
        std::size_t feature = 0;
        std::size_t category = 0;
    };

    FeatureSchema schema_;
    LayoutManifest layout_;
    std::uint8_t pad_value_;
    std::array<CellSource, kCanvasCells> sources_{};
};

Thumbnail encode_record(const FlowRecord& record, const FeatureSchema& schema,
                        const LayoutManifest& layout, std::uint8_t pad_value = kDefaultPadValue);

struct IndexEntry {
    std::string path;  // relative to the dataset directory
    std::string record_id;
    std::string class_name;
    Split split = Split::train;

    bool operator==(const IndexEntry&) const = default;
};

struct DatasetIndex {
    std::vector<IndexEntry> entries;
    std::size_t skipped = 0;

    bool operator==(const DatasetIndex&) const = default;
};

// "<split>_<record_id>_<class>.png"
std::string thumbnail_file_name(Split split, const std::string& record_id,
                                const std::string& class_name);
std::string index_file_name(Split split);  // "<split>_index.csv"

std::string serialize_index(const DatasetIndex& index);
DatasetIndex parse_index(std::string_view text);
DatasetIndex load_index(const std::string& path);

// Encodes every record into <output_dir>/images/ and writes
// <output_dir>/<split>_index.csv. Malformed records are skipped and counted.
// Output bytes do not depend on `workers`.
DatasetIndex encode_dataset(const LabeledTable& table, const FeatureSchema& schema,
                            const LayoutManifest& layout, const std::string& output_dir,
                            std::uint8_t pad_value = kDefaultPadValue, std::size_t workers = 1);

// Encodes in memory; records that fail are skipped and counted in `skipped`.
std::vector<Thumbnail> encode_table(const LabeledTable& table, const Encoder& encoder,
                                    std::size_t workers = 1, std::size_t* skipped = nullptr);

// Reads the thumbnails listed in an index (labels resolved against `class_names`).
std::vector<Thumbnail> load_thumbnails(const std::string& dataset_dir, const DatasetIndex& index,
                                       const std::vector<std::string>& class_names,
                                       std::size_t workers = 1);

struct DecodedRecord {
    std::map<std::string, double> numeric;
    // nullopt when no cell of the group is lit (unseen category at encode time).
    std::map<std::string, std::optional<std::string>> categorical;
};

// Throws Error(ambiguous_decode) when a one-hot group has several lit cells
// or a one-hot cell holds a value other than 0 or 255.
DecodedRecord decode_thumbnail(const Thumbnail& thumbnail, const FeatureSchema& schema,
                               const LayoutManifest& layout);

// Moves every pixel from its cell in `from` to the cell bound to the same
// content in `to`. Both layouts must bind the same column set.
PixelGrid relayout(const PixelGrid& pixels, const LayoutManifest& from, const LayoutManifest& to);

// Encoded-column values of a thumbnail, in expand_columns order.
std::vector<double> encoded_features(const Thumbnail& thumbnail,
                                     const std::vector<std::size_t>& column_cells);
// Cell index of each encoded column under `layout`.
std::vector<std::size_t> column_cells(const std::vector<EncodedColumn>& columns,
                                      const LayoutManifest& layout);

// Content digest over labels and pixels, in order.
std::string thumbnails_digest(const std::vector<Thumbnail>& thumbnails);

}  // namespace flowpix
