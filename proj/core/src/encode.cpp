#include "flowpix/encode.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <unordered_map>

#include "flowpix/error.hpp"
#include "flowpix/parallel.hpp"
#include "flowpix/png_io.hpp"
#include "flowpix/util.hpp"

namespace fs = std::filesystem;

namespace flowpix {

std::uint8_t scale_numeric(double value, double min, double max) {
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::malformed_cell, "non-finite numeric value");
    }
    if (min == max) return 0;
    const double clamped = std::clamp(value, min, max);
    const long long scaled = round_half_away(255.0 * (clamped - min) / (max - min));
    return static_cast<std::uint8_t>(std::clamp<long long>(scaled, 0, 255));
}

double descale_numeric(std::uint8_t pixel, double min, double max) {
    if (min == max) return min;
    return min + (max - min) * (static_cast<double>(pixel) / 255.0);
}

Encoder::Encoder(const FeatureSchema& schema, const LayoutManifest& layout, std::uint8_t pad_value)
    : schema_(schema), layout_(layout), pad_value_(pad_value) {
    check_manifest_matches(layout_, schema_);
    std::unordered_map<std::string, CellSource> by_name;
    for (std::size_t f = 0; f < schema_.features.size(); ++f) {
        const auto& spec = schema_.features[f];
        if (spec.is_categorical()) {
            for (std::size_t c = 0; c < spec.vocab.size(); ++c) {
                by_name[spec.name + "_" + spec.vocab[c]] = {CellSource::Kind::one_hot, f, c};
            }
        } else {
            by_name[spec.name] = {CellSource::Kind::numeric, f, 0};
        }
    }
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        if (layout_.is_pad(i)) continue;
        sources_[i] = by_name.at(layout_.cells()[i]);
    }
}

Thumbnail Encoder::encode(const FlowRecord& record) const {
    if (!record.header) {
        throw Error(ErrorKind::malformed_record, "record " + record.record_id + " has no header");
    }
    // Per feature: the scaled byte (numeric) or the category index (categorical;
    // -1 for a category not seen in training).
    std::vector<long> resolved(schema_.features.size(), -1);
    for (std::size_t f = 0; f < schema_.features.size(); ++f) {
        const auto& spec = schema_.features[f];
        const std::string* raw = record.value(spec.name);
        if (!raw) {
            throw Error(ErrorKind::malformed_record,
                        "record " + record.record_id + " lacks column '" + spec.name + "'");
        }
        if (spec.is_categorical()) {
            const auto index = spec.category_index(trim(*raw));
            resolved[f] = index ? static_cast<long>(*index) : -1;
        } else {
            const auto value = parse_double(*raw);
            if (!value || !std::isfinite(*value)) {
                throw Error(ErrorKind::malformed_cell, "row " + record.record_id + " column '" +
                                                           spec.name + "': '" + *raw + "'");
            }
            resolved[f] = scale_numeric(*value, spec.min, spec.max);
        }
    }
    const auto label = schema_.class_index(trim(record.label));
    if (!label) {
        throw Error(ErrorKind::malformed_record,
                    "record " + record.record_id + " has unknown class '" + record.label + "'");
    }

    Thumbnail out;
    out.label = *label;
    out.record_id = record.record_id;
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        const CellSource& source = sources_[i];
        switch (source.kind) {
            case CellSource::Kind::pad: out.pixels[i] = pad_value_; break;
            case CellSource::Kind::numeric:
                out.pixels[i] = static_cast<std::uint8_t>(resolved[source.feature]);
                break;
            case CellSource::Kind::one_hot:
                out.pixels[i] =
                    resolved[source.feature] == static_cast<long>(source.category) ? kOneHotOn : 0;
                break;
        }
    }
    return out;
}

Thumbnail encode_record(const FlowRecord& record, const FeatureSchema& schema,
                        const LayoutManifest& layout, std::uint8_t pad_value) {
    return Encoder(schema, layout, pad_value).encode(record);
}

namespace {

std::string sanitize_for_file(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c == '/' || c == '\\' || c == ':' || c == ' ' || c == ',' || c == '"') c = '_';
    }
    return out;
}

constexpr std::string_view kIndexHeader = "path,record_id,class,split";

}  // namespace

std::string thumbnail_file_name(Split split, const std::string& record_id,
                                const std::string& class_name) {
    return std::string(to_string(split)) + "_" + sanitize_for_file(record_id) + "_" +
           sanitize_for_file(class_name) + ".png";
}

std::string index_file_name(Split split) { return std::string(to_string(split)) + "_index.csv"; }

std::string serialize_index(const DatasetIndex& index) {
    std::ostringstream out;
    out << "# skipped=" << index.skipped << '\n' << kIndexHeader << '\n';
    for (const auto& e : index.entries) {
        out << csv_escape(e.path) << ',' << csv_escape(e.record_id) << ','
            << csv_escape(e.class_name) << ',' << to_string(e.split) << '\n';
    }
    return out.str();
}

DatasetIndex parse_index(std::string_view text) {
    DatasetIndex index;
    bool saw_header = false;
    const auto lines = split(text, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.starts_with("# skipped=")) {
            const auto n = parse_uint(line.substr(10));
            if (!n) throw Error(ErrorKind::format, "bad skipped count in index");
            index.skipped = *n;
            continue;
        }
        if (line.starts_with('#')) continue;
        if (!saw_header) {
            if (line != kIndexHeader) throw Error(ErrorKind::format, "index header mismatch");
            saw_header = true;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw Error(ErrorKind::format, "index line " + std::to_string(i + 1) + ": expected 4 fields");
        }
        index.entries.push_back(
            {std::move(fields[0]), std::move(fields[1]), std::move(fields[2]), parse_split(fields[3])});
    }
    if (!saw_header) throw Error(ErrorKind::format, "index has no header");
    return index;
}

DatasetIndex load_index(const std::string& path) { return parse_index(read_file(path)); }

std::vector<Thumbnail> encode_table(const LabeledTable& table, const Encoder& encoder,
                                    std::size_t workers, std::size_t* skipped) {
    std::vector<std::optional<Thumbnail>> slots(table.records.size());
    parallel_for(table.records.size(), workers, [&](std::size_t i) {
        try {
            slots[i] = encoder.encode(table.records[i]);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::malformed_record && e.kind() != ErrorKind::malformed_cell) {
                throw;
            }
        }
    });
    std::vector<Thumbnail> out;
    out.reserve(slots.size());
    std::size_t failures = 0;
    for (auto& slot : slots) {
        if (slot) {
            out.push_back(std::move(*slot));
        } else {
            ++failures;
        }
    }
    if (skipped) *skipped = failures;
    return out;
}

DatasetIndex encode_dataset(const LabeledTable& table, const FeatureSchema& schema,
                            const LayoutManifest& layout, const std::string& output_dir,
                            std::uint8_t pad_value, std::size_t workers) {
    const Encoder encoder(schema, layout, pad_value);
    const fs::path root(output_dir);
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + (root / "images").string());

    std::size_t skipped = 0;
    const auto thumbnails = encode_table(table, encoder, workers, &skipped);

    DatasetIndex index;
    index.skipped = skipped;
    index.entries.resize(thumbnails.size());
    parallel_for(thumbnails.size(), workers, [&](std::size_t i) {
        const Thumbnail& t = thumbnails[i];
        const std::string& class_name = schema.class_names[t.label];
        const std::string relative =
            "images/" + thumbnail_file_name(table.split, t.record_id, class_name);
        write_png(t, (root / relative).string());
        index.entries[i] = {relative, t.record_id, class_name, table.split};
    });
    write_file((root / index_file_name(table.split)).string(), serialize_index(index));
    return index;
}

std::vector<Thumbnail> load_thumbnails(const std::string& dataset_dir, const DatasetIndex& index,
                                       const std::vector<std::string>& class_names,
                                       std::size_t workers) {
    std::vector<Thumbnail> out(index.entries.size());
    const fs::path root(dataset_dir);
    parallel_for(index.entries.size(), workers, [&](std::size_t i) {
        const auto& entry = index.entries[i];
        const auto it = std::find(class_names.begin(), class_names.end(), entry.class_name);
        if (it == class_names.end()) {
            throw Error(ErrorKind::format, "index entry " + entry.path + " has unknown class '" +
                                               entry.class_name + "'");
        }
        out[i].pixels = read_png((root / entry.path).string());
        out[i].label = static_cast<std::size_t>(it - class_names.begin());
        out[i].record_id = entry.record_id;
    });
    return out;
}

DecodedRecord decode_thumbnail(const Thumbnail& thumbnail, const FeatureSchema& schema,
                               const LayoutManifest& layout) {
    DecodedRecord out;
    for (const auto& spec : schema.features) {
        if (!spec.is_categorical()) {
            const auto cell = layout.cell_of(spec.name);
            if (!cell) throw Error(ErrorKind::stale_manifest, "'" + spec.name + "' not in layout");
            out.numeric[spec.name] = descale_numeric(thumbnail.pixels[*cell], spec.min, spec.max);
            continue;
        }
        std::optional<std::string> found;
        for (const auto& category : spec.vocab) {
            const std::string column = spec.name + "_" + category;
            const auto cell = layout.cell_of(column);
            if (!cell) throw Error(ErrorKind::stale_manifest, "'" + column + "' not in layout");
            const std::uint8_t p = thumbnail.pixels[*cell];
            if (p == 0) continue;
            if (p != kOneHotOn) {
                throw Error(ErrorKind::ambiguous_decode,
                            "one-hot cell '" + column + "' holds " + std::to_string(p));
            }
            if (found) {
                throw Error(ErrorKind::ambiguous_decode,
                            "group '" + spec.name + "' has more than one lit cell");
            }
            found = category;
        }
        out.categorical[spec.name] = found;
    }
    return out;
}

PixelGrid relayout(const PixelGrid& pixels, const LayoutManifest& from, const LayoutManifest& to) {
    std::unordered_map<std::string, std::size_t> target;
    std::vector<std::size_t> target_pads;
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        if (to.is_pad(i)) {
            target_pads.push_back(i);
        } else {
            target.emplace(to.cells()[i], i);
        }
    }
    PixelGrid out{};
    std::size_t next_pad = 0;
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        if (from.is_pad(i)) {
            if (next_pad >= target_pads.size()) {
                throw Error(ErrorKind::stale_manifest, "layouts differ in pad count");
            }
            out[target_pads[next_pad++]] = pixels[i];
            continue;
        }
        const auto it = target.find(from.cells()[i]);
        if (it == target.end()) {
            throw Error(ErrorKind::stale_manifest,
                        "column '" + from.cells()[i] + "' missing from target layout");
        }
        out[it->second] = pixels[i];
    }
    return out;
}

std::vector<std::size_t> column_cells(const std::vector<EncodedColumn>& columns,
                                      const LayoutManifest& layout) {
    std::unordered_map<std::string, std::size_t> cell_by_name;
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        if (!layout.is_pad(i)) cell_by_name.emplace(layout.cells()[i], i);
    }
    std::vector<std::size_t> cells;
    cells.reserve(columns.size());
    for (const auto& c : columns) {
        const auto it = cell_by_name.find(c.name);
        if (it == cell_by_name.end()) {
            throw Error(ErrorKind::stale_manifest, "column '" + c.name + "' missing from layout");
        }
        cells.push_back(it->second);
    }
    return cells;
}

std::vector<double> encoded_features(const Thumbnail& thumbnail,
                                     const std::vector<std::size_t>& column_cells) {
    std::vector<double> out;
    out.reserve(column_cells.size());
    for (const std::size_t cell : column_cells) out.push_back(thumbnail.pixels[cell]);
    return out;
}

std::string thumbnails_digest(const std::vector<Thumbnail>& thumbnails) {
    Fnv1a h;
    for (const auto& t : thumbnails) {
        const std::uint64_t label = t.label;
        h.update(&label, sizeof(label));
        h.update(t.pixels.data(), t.pixels.size());
    }
    return h.hex();
}

}  // namespace flowpix
