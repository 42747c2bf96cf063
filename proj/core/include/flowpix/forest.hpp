#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowpix/encode.hpp"
#include "flowpix/rng.hpp"

namespace flowpix {

// Dense row-major feature table with class labels.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::size_t n_classes = 0;
    std::vector<std::string> feature_names;

    double at(std::size_t row, std::size_t col) const { return values[row * cols + col]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

// Encoded-column vectors (expand_columns order) of the given thumbnails.
FeatureMatrix feature_matrix(const std::vector<Thumbnail>& thumbnails, const FeatureSchema& schema,
                             const LayoutManifest& layout, std::size_t n_classes);

// 1 - sum (n_k / N)^2. Requires a non-zero total.
double gini(std::span<const std::size_t> class_counts);

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;  // rows with value <= threshold go left
    double impurity_decrease = 0.0;
    std::size_t n_left = 0;
    std::size_t n_right = 0;
};

// Per-feature sorted distinct values and each cell's rank among them. Split
// search works on ranks, so byte-valued features use 256-bin histograms.
class BinnedMatrix {
public:
    explicit BinnedMatrix(const FeatureMatrix& data);

    const FeatureMatrix& data() const { return *data_; }
    std::uint32_t rank(std::size_t row, std::size_t col) const { return ranks_[row * cols_ + col]; }
    const std::vector<double>& distinct(std::size_t col) const { return distinct_[col]; }

private:
    const FeatureMatrix* data_;
    std::size_t cols_;
    std::vector<std::uint32_t> ranks_;
    std::vector<std::vector<double>> distinct_;
};

// Maximises the weighted Gini decrease over the candidate features and the
// midpoints between consecutive distinct values present in `rows` (which may
// repeat, as in a bootstrap sample). Ties go to the lowest feature index,
// then the lowest threshold. Returns nullopt when no split has a positive
// decrease with both children holding at least min_samples_leaf rows.
std::optional<SplitCandidate> best_split(const BinnedMatrix& binned, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         std::size_t min_samples_leaf = 1);
std::optional<SplitCandidate> best_split(const FeatureMatrix& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         std::size_t min_samples_leaf = 1);

struct ForestParams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> mtry;       // default ceil(sqrt(d))
    std::optional<std::size_t> max_depth;  // default unlimited
    std::size_t min_samples_leaf = 1;
    std::uint64_t seed = 0;
    bool bootstrap = true;

    std::size_t resolved_mtry(std::size_t n_features) const;
    void validate(std::size_t n_features) const;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::size_t n_node_samples = 0;
    double impurity_decrease = 0.0;
    std::size_t majority = 0;  // lowest class index among the most frequent

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::vector<std::size_t> class_counts;  // n_classes per node, flattened

    std::size_t leaf_for(std::span<const double> x) const;
    std::span<const std::size_t> counts(std::size_t node, std::size_t n_classes) const {
        return {class_counts.data() + node * n_classes, n_classes};
    }
};

struct ForestModel {
    ForestParams params;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    std::string schema_digest;
    std::vector<Tree> trees;
};

// Grows one CART tree on `rows` (duplicates allowed). Feature subsets are
// drawn from `rng`, one draw per node in depth-first order.
Tree train_tree(const BinnedMatrix& binned, std::vector<std::size_t> rows, const ForestParams& params,
                Rng& rng);

// Tree t is grown from Rng(derive_seed(seed, forest, t)); results do not
// depend on `workers`. Throws Error(degenerate_task) with fewer than two
// classes present.
ForestModel train_forest(const FeatureMatrix& data, const ForestParams& params,
                         std::size_t workers = 1);

std::size_t predict(const ForestModel& model, std::span<const double> x);
std::vector<std::size_t> predict_batch(const ForestModel& model, const FeatureMatrix& data,
                                       std::size_t workers = 1);

struct ImportanceEntry {
    std::string feature;
    std::size_t index = 0;
    double importance = 0.0;
};

// Mean decrease in Gini: per tree, sum over splits of
// (n_node / n_root) * decrease, averaged over trees and normalised to sum 1.
// Sorted descending, ties by feature index.
std::vector<ImportanceEntry> importance(const ForestModel& model);

std::string serialize_forest(const ForestModel& model);
ForestModel parse_forest(std::string_view text);
void save_forest(const ForestModel& model, const std::string& path);
ForestModel load_forest(const std::string& path);
std::string forest_digest(const ForestModel& model);

}  // namespace flowpix
