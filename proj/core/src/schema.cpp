#include "flowpix/schema.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "flowpix/error.hpp"
#include "flowpix/rng.hpp"
#include "flowpix/util.hpp"

namespace flowpix {

namespace {

constexpr std::string_view kSchemaHeader = "flowpix-schema v1";
constexpr std::string_view kLayoutMagic = "flowpix-layout v1";

int group_rank(std::string_view feature) {
    if (feature == "service") return 0;
    if (feature == "proto" || feature == "protocol") return 1;
    if (feature == "state") return 2;
    return 3;
}

bool has_reserved_chars(std::string_view text) {
    return text.find_first_of(",|\n\r") != std::string_view::npos;
}

}  // namespace

std::optional<std::size_t> FeatureSpec::category_index(std::string_view category) const {
    const auto it = std::lower_bound(vocab.begin(), vocab.end(), category);
    if (it == vocab.end() || *it != category) return std::nullopt;
    return static_cast<std::size_t>(it - vocab.begin());
}

void FeatureSchema::validate() const {
    std::unordered_set<std::string> names;
    for (const auto& f : features) {
        if (f.name.empty()) throw Error(ErrorKind::format, "empty feature name");
        if (!names.insert(f.name).second) {
            throw Error(ErrorKind::format, "duplicate feature '" + f.name + "'");
        }
        if (f.is_categorical()) {
            if (f.vocab.empty()) {
                throw Error(ErrorKind::format, "feature '" + f.name + "' has an empty vocabulary");
            }
            for (std::size_t i = 1; i < f.vocab.size(); ++i) {
                if (!(f.vocab[i - 1] < f.vocab[i])) {
                    throw Error(ErrorKind::format,
                                "vocabulary of '" + f.name + "' is not sorted and duplicate-free");
                }
            }
        } else if (!(f.min <= f.max) || !std::isfinite(f.min) || !std::isfinite(f.max)) {
            throw Error(ErrorKind::format, "feature '" + f.name + "' has an invalid range");
        }
    }
    if (names.count(label_column)) {
        throw Error(ErrorKind::format, "label column '" + label_column + "' is also a feature");
    }
    std::unordered_set<std::string> classes;
    for (const auto& c : class_names) {
        if (!classes.insert(c).second) {
            throw Error(ErrorKind::format, "duplicate class '" + c + "'");
        }
    }
    const auto normal = std::find(class_names.begin(), class_names.end(), kNormalClass);
    if (normal != class_names.end() && normal != class_names.begin()) {
        throw Error(ErrorKind::format, "class 'Normal' must have index 0");
    }
}

std::optional<std::size_t> FeatureSchema::find(std::string_view feature) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].name == feature) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::class_index(std::string_view label) const {
    const auto it = std::find(class_names.begin(), class_names.end(), label);
    if (it == class_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - class_names.begin());
}

std::size_t FeatureSchema::numeric_count() const {
    return static_cast<std::size_t>(std::count_if(
        features.begin(), features.end(), [](const auto& f) { return !f.is_categorical(); }));
}

std::size_t FeatureSchema::categorical_count() const { return features.size() - numeric_count(); }

std::string FeatureSchema::digest() const { return fnv1a_hex(serialize_schema(*this)); }

SchemaOptions unsw_schema_options() {
    SchemaOptions options;
    options.categorical = {"proto", "service", "state"};
    options.ignored = {"id", std::string(kUnswBinaryColumn)};
    return options;
}

FeatureSchema infer_schema(const LabeledTable& training, const SchemaOptions& options) {
    if (training.records.empty()) {
        throw Error(ErrorKind::schema_empty, "training table '" + training.source + "' has no rows");
    }
    if (!training.header) throw Error(ErrorKind::format, "training table has no header");
    const auto& columns = training.header->names();
    for (const auto& name : options.categorical) {
        if (!training.header->find(name)) {
            throw Error(ErrorKind::invalid_argument,
                        "categorical column '" + name + "' is not in the table header");
        }
    }

    FeatureSchema schema;
    schema.label_column = training.label_column;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const std::string& name = columns[c];
        if (name == training.label_column || options.ignored.count(name)) continue;
        FeatureSpec spec;
        spec.name = name;
        if (options.categorical.count(name)) {
            spec.kind = FeatureKind::categorical;
            std::set<std::string> seen;
            for (const auto& record : training.records) seen.insert(std::string(trim(record.values[c])));
            spec.vocab.assign(seen.begin(), seen.end());
        } else {
            spec.kind = FeatureKind::numeric;
            spec.min = std::numeric_limits<double>::infinity();
            spec.max = -std::numeric_limits<double>::infinity();
            for (const auto& record : training.records) {
                const auto value = parse_double(record.values[c]);
                if (!value || !std::isfinite(*value)) {
                    throw Error(ErrorKind::malformed_cell, "row " + record.record_id + " column '" +
                                                               name + "': '" + record.values[c] + "'");
                }
                spec.min = std::min(spec.min, *value);
                spec.max = std::max(spec.max, *value);
            }
        }
        schema.features.push_back(std::move(spec));
    }

    std::vector<std::string> labels;
    labels.reserve(training.records.size());
    for (const auto& record : training.records) labels.push_back(record.label);
    schema.class_names = canonical_class_order(std::move(labels));
    schema.validate();
    return schema;
}

std::string serialize_schema(const FeatureSchema& schema) {
    std::ostringstream out;
    out << kSchemaHeader << '\n';
    out << "# label=" << schema.label_column << '\n';
    out << "# classes=" << join(schema.class_names, "|") << '\n';
    for (const auto& f : schema.features) {
        if (has_reserved_chars(f.name)) {
            throw Error(ErrorKind::format, "feature name '" + f.name + "' cannot be serialized");
        }
        if (f.is_categorical()) {
            for (const auto& v : f.vocab) {
                if (has_reserved_chars(v)) {
                    throw Error(ErrorKind::format, "category '" + v + "' cannot be serialized");
                }
            }
            out << f.name << ",categorical," << join(f.vocab, "|") << '\n';
        } else {
            out << f.name << ",numeric," << format_double(f.min) << ',' << format_double(f.max)
                << '\n';
        }
    }
    return out.str();
}

FeatureSchema parse_schema(std::string_view text) {
    FeatureSchema schema;
    const auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]) != kSchemaHeader) {
        throw Error(ErrorKind::format, "missing schema header");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        if (line.starts_with("# label=")) {
            schema.label_column = std::string(line.substr(8));
            continue;
        }
        if (line.starts_with("# classes=")) {
            const auto rest = line.substr(10);
            if (!rest.empty()) schema.class_names = split(rest, '|');
            continue;
        }
        if (line.starts_with('#')) continue;
        const auto fields = split(line, ',');
        const auto where = "schema line " + std::to_string(i + 1);
        if (fields.size() < 3) throw Error(ErrorKind::format, where + ": too few fields");
        FeatureSpec spec;
        spec.name = fields[0];
        if (fields[1] == "categorical" && fields.size() == 3) {
            spec.kind = FeatureKind::categorical;
            spec.vocab = split(fields[2], '|');
        } else if (fields[1] == "numeric" && fields.size() == 4) {
            const auto lo = parse_double(fields[2]);
            const auto hi = parse_double(fields[3]);
            if (!lo || !hi) throw Error(ErrorKind::format, where + ": bad range");
            spec.min = *lo;
            spec.max = *hi;
        } else {
            throw Error(ErrorKind::format, where + ": unknown feature kind '" + fields[1] + "'");
        }
        schema.features.push_back(std::move(spec));
    }
    schema.validate();
    return schema;
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
    write_file(path, serialize_schema(schema));
}

FeatureSchema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

std::vector<EncodedColumn> expand_columns(const FeatureSchema& schema) {
    std::vector<EncodedColumn> columns;
    std::vector<const FeatureSpec*> groups;
    for (const auto& f : schema.features) {
        if (f.is_categorical()) {
            groups.push_back(&f);
        } else {
            columns.push_back({f.name, f.name, std::nullopt});
        }
    }
    std::stable_sort(groups.begin(), groups.end(), [](const FeatureSpec* a, const FeatureSpec* b) {
        return group_rank(a->name) < group_rank(b->name);
    });
    for (const FeatureSpec* f : groups) {
        for (const auto& category : f->vocab) {
            columns.push_back({f->name + "_" + category, f->name, category});
        }
    }
    std::unordered_set<std::string> names;
    for (const auto& c : columns) {
        if (c.name == kPadName || !names.insert(c.name).second) {
            throw Error(ErrorKind::format, "encoded column name '" + c.name + "' is not unique");
        }
    }
    return columns;
}

LayoutManifest::LayoutManifest(std::array<std::string, kCanvasCells> cells, std::string schema_digest)
    : cells_(std::move(cells)), schema_digest_(std::move(schema_digest)) {
    std::unordered_set<std::string> seen;
    for (const auto& name : cells_) {
        if (name.empty()) throw Error(ErrorKind::format, "layout cell without content");
        if (name != kPadName && !seen.insert(name).second) {
            throw Error(ErrorKind::format, "column '" + name + "' bound to more than one cell");
        }
    }
}

std::size_t LayoutManifest::pad_count() const {
    return static_cast<std::size_t>(
        std::count(cells_.begin(), cells_.end(), std::string(kPadName)));
}

std::optional<std::size_t> LayoutManifest::cell_of(std::string_view column) const {
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (cells_[i] == column) return i;
    }
    return std::nullopt;
}

LayoutManifest build_layout(std::span<const EncodedColumn> columns, std::string schema_digest) {
    if (columns.size() > kCanvasCells) {
        throw Error(ErrorKind::layout_overflow, std::to_string(columns.size()) +
                                                    " encoded columns exceed the " +
                                                    std::to_string(kCanvasCells) + "-cell canvas");
    }
    std::array<std::string, kCanvasCells> cells;
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        cells[i] = i < columns.size() ? columns[i].name : std::string(kPadName);
    }
    return LayoutManifest(std::move(cells), std::move(schema_digest));
}

LayoutManifest build_layout(const FeatureSchema& schema) {
    const auto columns = expand_columns(schema);
    return build_layout(columns, schema.digest());
}

LayoutManifest permute_layout(const LayoutManifest& manifest, std::uint64_t seed) {
    std::vector<std::string> cells(manifest.cells().begin(), manifest.cells().end());
    Rng rng(derive_seed(seed, streams::layout_shuffle));
    rng.shuffle(cells);
    std::array<std::string, kCanvasCells> out;
    std::move(cells.begin(), cells.end(), out.begin());
    return LayoutManifest(std::move(out), manifest.schema_digest());
}

std::string serialize_manifest(const LayoutManifest& manifest) {
    std::ostringstream out;
    out << kLayoutMagic << ' ' << manifest.schema_digest() << '\n';
    for (std::size_t i = 0; i < kCanvasCells; ++i) {
        const auto pos = cell_position(i);
        out << pos.row << ',' << pos.col << ',' << manifest.cells()[i] << '\n';
    }
    return out.str();
}

LayoutManifest parse_manifest(std::string_view text) {
    const auto lines = split(text, '\n');
    const std::string_view first = lines.empty() ? std::string_view() : trim(lines[0]);
    if (!first.starts_with(kLayoutMagic)) throw Error(ErrorKind::format, "missing layout header");
    const std::string digest(trim(first.substr(kLayoutMagic.size())));

    std::array<std::string, kCanvasCells> cells;
    std::size_t bound = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = trim(lines[i]);
        if (line.empty()) continue;
        const auto where = "layout line " + std::to_string(i + 1);
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw Error(ErrorKind::format, where + ": expected row,col,name");
        const auto row = parse_uint(fields[0]);
        const auto col = parse_uint(fields[1]);
        if (!row || !col || *row < 1 || *row > kCanvasHeight || *col < 1 || *col > kCanvasWidth) {
            throw Error(ErrorKind::format, where + ": cell out of range");
        }
        const std::size_t index = cell_index({*row, *col});
        if (!cells[index].empty()) {
            throw Error(ErrorKind::format, where + ": duplicate cell (" + fields[0] + "," +
                                               fields[1] + ")");
        }
        if (fields[2].empty()) throw Error(ErrorKind::format, where + ": empty cell content");
        cells[index] = fields[2];
        ++bound;
    }
    if (bound != kCanvasCells) {
        throw Error(ErrorKind::format, "layout binds " + std::to_string(bound) + " of " +
                                           std::to_string(kCanvasCells) + " cells");
    }
    return LayoutManifest(std::move(cells), digest);
}

void save_manifest(const LayoutManifest& manifest, const std::string& path) {
    write_file(path, serialize_manifest(manifest));
}

LayoutManifest load_manifest(const std::string& path) { return parse_manifest(read_file(path)); }

void check_manifest_matches(const LayoutManifest& manifest, const FeatureSchema& schema) {
    const std::string digest = schema.digest();
    if (manifest.schema_digest() != digest) {
        throw Error(ErrorKind::stale_manifest, "layout was built for schema " +
                                                   manifest.schema_digest() + ", not " + digest);
    }
    const auto columns = expand_columns(schema);
    if (kCanvasCells - manifest.pad_count() != columns.size()) {
        throw Error(ErrorKind::stale_manifest, "layout column count differs from the schema");
    }
    for (const auto& c : columns) {
        if (!manifest.cell_of(c.name)) {
            throw Error(ErrorKind::stale_manifest, "column '" + c.name + "' missing from layout");
        }
    }
}

LayoutManifest load_manifest(const std::string& path, const FeatureSchema& schema) {
    auto manifest = load_manifest(path);
    check_manifest_matches(manifest, schema);
    return manifest;
}

}  // namespace flowpix
