#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flowpix {

// counts[i][j]: records of true class i predicted as class j.
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t size() const { return class_names.size(); }
    std::size_t total() const;
    std::size_t row_sum(std::size_t i) const;
    std::size_t trace() const;
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& predicted,
                          const std::vector<std::string>& class_names);

struct ClassRecall {
    std::string class_name;
    std::optional<double> recall;  // nullopt for zero support
    std::size_t support = 0;
    std::size_t correct = 0;

    bool operator==(const ClassRecall&) const = default;
};

std::vector<ClassRecall> per_class_recall(const ConfusionMatrix& matrix);

// Trace over total; nullopt for an empty matrix.
std::optional<double> overall_accuracy(const ConfusionMatrix& matrix);

// Integer percentages per row. Each row is apportioned by largest remainder
// (ties to the lower column), so a non-empty row sums to exactly 100 and every
// cell is within one point of its exact share. Zero-support rows are nullopt.
std::vector<std::optional<std::vector<int>>> row_normalize(const ConfusionMatrix& matrix);

struct EvalReport {
    std::optional<double> overall_accuracy;
    std::vector<ClassRecall> per_class;
    ConfusionMatrix matrix;
    // Run metadata in insertion order (model digest, dataset digest, seed, ...).
    std::vector<std::pair<std::string, std::string>> metadata;

    bool operator==(const EvalReport&) const = default;
};

EvalReport make_report(ConfusionMatrix matrix,
                       std::vector<std::pair<std::string, std::string>> metadata = {});

enum class ReportFormat { text, csv, json };

ReportFormat parse_report_format(const std::string& name);

// Text: the per-class table (class, recall %, support) followed by the
// row-normalised confusion grid. CSV: one row per true class with support,
// correct, recall (4 decimals) and the raw counts per predicted class;
// metadata and overall accuracy as leading "# key=value" lines. JSON: keys
// overall_accuracy, per_class, matrix, metadata in that order, ratios at 4
// decimals.
std::string render_report(const EvalReport& report, ReportFormat format);

// Inverse of the CSV render: rebuilds the report from its counts.
EvalReport parse_report_csv(const std::string& text);

}  // namespace flowpix
