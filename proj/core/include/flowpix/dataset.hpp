#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowpix/records.hpp"
#include "flowpix/schema.hpp"

namespace flowpix {

struct LoadOptions {
    std::string label_column{kUnswLabelColumn};
    // Binary 0/1 column checked against the class label; empty disables the check.
    std::string binary_column{kUnswBinaryColumn};
    Split split = Split::train;
};

// Rows with the wrong field count (or, with a schema, an unknown class) are
// skipped and listed in `issues`. A binary label that disagrees with the
// class label throws Error(format) naming the row.
LabeledTable load_csv(const std::string& path, const LoadOptions& options,
                      const FeatureSchema* schema = nullptr);
LabeledTable parse_csv(std::string_view text, const std::string& source, const LoadOptions& options,
                       const FeatureSchema* schema = nullptr);
std::string serialize_csv(const LabeledTable& table);
void save_csv(const LabeledTable& table, const std::string& path);

struct ClassCounts {
    std::vector<std::string> class_names;
    std::vector<std::size_t> counts;
    std::size_t normal = 0;
    std::size_t attack = 0;
    std::size_t total() const { return normal + attack; }
    std::size_t count(std::string_view class_name) const;
};

ClassCounts class_counts(const LabeledTable& table);

// "class,train_count,test_count", one row per class (train order, then any
// test-only classes), then Attack and Total rollups.
std::string count_report(const LabeledTable& train, const LabeledTable& test);

// Relabels to the two classes {Normal, Attack}.
LabeledTable to_binary(const LabeledTable& table);

// Draws min(quota, available) records per class without replacement. Output
// is grouped by class index, records in source order within a class.
LabeledTable stratified_sample(const LabeledTable& table, std::size_t per_class, std::uint64_t seed);
LabeledTable stratified_sample(const LabeledTable& table, const std::vector<std::size_t>& quotas,
                               std::uint64_t seed);

struct SubsetPlan {
    std::size_t per_class_cap = 390;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BalancedSubset {
    LabeledTable train;
    LabeledTable holdout;
    // Classes with fewer than two records after capping; kept whole in train.
    std::vector<std::string> flagged;

    std::size_t total() const { return train.size() + holdout.size(); }
};

BalancedSubset make_balanced_subset(const LabeledTable& table, const SubsetPlan& plan);

struct FixtureColumn {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> vocab;  // categorical only
    bool separated = false;          // class-dependent mean (numeric only)
};

struct FixtureShape {
    std::vector<FixtureColumn> columns;
    // Gap between consecutive class means on separated features, in
    // within-class standard deviations. Noise is truncated at 4 sd, so any
    // value above 8 makes the classes disjoint on every separated feature.
    double separation = 10.0;
    // Probability that a record takes its class's preferred category.
    double category_bias = 0.7;

    // Six numerics (three separated) plus service/proto/state groups.
    static FixtureShape small();
    // UNSW-NB15 release columns and vocabularies; sttl, ct_state_ttl and
    // ct_dst_src_ltm are the separated features.
    static FixtureShape unsw();
};

// The ten UNSW-NB15 classes, Normal first then families sorted.
const std::vector<std::string>& unsw_class_names();
// Training-split family counts of the release files, in unsw_class_names order.
const std::vector<std::size_t>& unsw_train_counts();
const std::vector<std::string>& unsw_protocols();
const std::vector<std::string>& unsw_services();
const std::vector<std::string>& unsw_states();

// Synthetic labelled table with the columns of `shape` plus id, attack_cat
// and label. Class k uses the k-th UNSW class name (generic names past ten).
// The first records cycle through every vocabulary entry so small fixtures
// still cover all categories. Byte-identical for a fixed seed.
LabeledTable synth_fixture(std::uint64_t seed, const std::vector<std::size_t>& per_class_counts,
                           const FixtureShape& shape = FixtureShape::small(),
                           Split split = Split::train);
LabeledTable synth_fixture(std::uint64_t seed, std::size_t n_per_class, std::size_t n_classes,
                           const FixtureShape& shape = FixtureShape::small(),
                           Split split = Split::train);

}  // namespace flowpix
