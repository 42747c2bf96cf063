#include "flowpix/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "flowpix/error.hpp"
#include "flowpix/util.hpp"
#include "json.hpp"

namespace flowpix {

std::size_t ConfusionMatrix::total() const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < size(); ++i) sum += row_sum(i);
    return sum;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
    return std::accumulate(counts[i].begin(), counts[i].end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < size(); ++i) sum += counts[i][i];
    return sum;
}

ConfusionMatrix confusion(const std::vector<std::size_t>& truth,
                          const std::vector<std::size_t>& predicted,
                          const std::vector<std::string>& class_names) {
    if (truth.size() != predicted.size()) {
        throw Error(ErrorKind::invalid_argument, "label sequences differ in length");
    }
    const std::size_t k = class_names.size();
    ConfusionMatrix m{class_names, std::vector<std::vector<std::size_t>>(k, std::vector<std::size_t>(k, 0))};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= k || predicted[i] >= k) {
            throw Error(ErrorKind::invalid_argument, "label outside the class set");
        }
        ++m.counts[truth[i]][predicted[i]];
    }
    return m;
}

std::vector<ClassRecall> per_class_recall(const ConfusionMatrix& matrix) {
    std::vector<ClassRecall> out;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        ClassRecall r;
        r.class_name = matrix.class_names[i];
        r.support = matrix.row_sum(i);
        r.correct = matrix.counts[i][i];
        if (r.support > 0) r.recall = static_cast<double>(r.correct) / static_cast<double>(r.support);
        out.push_back(std::move(r));
    }
    return out;
}

std::optional<double> overall_accuracy(const ConfusionMatrix& matrix) {
    const std::size_t total = matrix.total();
    if (total == 0) return std::nullopt;
    return static_cast<double>(matrix.trace()) / static_cast<double>(total);
}

std::vector<std::optional<std::vector<int>>> row_normalize(const ConfusionMatrix& matrix) {
    std::vector<std::optional<std::vector<int>>> out;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        const std::size_t support = matrix.row_sum(i);
        if (support == 0) {
            out.emplace_back(std::nullopt);
            continue;
        }
        // Largest remainder on exact integer shares: 100 * count = q * support + r.
        std::vector<int> cells(matrix.size());
        std::vector<std::pair<std::size_t, std::size_t>> remainders;
        int assigned = 0;
        for (std::size_t j = 0; j < matrix.size(); ++j) {
            const std::size_t scaled = 100 * matrix.counts[i][j];
            cells[j] = static_cast<int>(scaled / support);
            assigned += cells[j];
            remainders.emplace_back(scaled % support, j);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t n = 0; assigned < 100; ++n, ++assigned) ++cells[remainders[n].second];
        out.emplace_back(std::move(cells));
    }
    return out;
}

EvalReport make_report(ConfusionMatrix matrix,
                       std::vector<std::pair<std::string, std::string>> metadata) {
    EvalReport report;
    report.overall_accuracy = overall_accuracy(matrix);
    report.per_class = per_class_recall(matrix);
    report.matrix = std::move(matrix);
    report.metadata = std::move(metadata);
    return report;
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "text") return ReportFormat::text;
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    throw Error(ErrorKind::invalid_argument, "unknown report format '" + name + "'");
}

namespace {

std::string percent(std::optional<double> ratio) {
    if (!ratio) return "-";
    return std::to_string(round_half_away(*ratio * 100.0)) + "%";
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::string render_text(const EvalReport& report) {
    const auto& m = report.matrix;
    std::size_t width = 8;
    for (const auto& n : m.class_names) width = std::max(width, n.size());
    width += 2;

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Family" << std::right
        << std::setw(10) << "Accuracy" << std::setw(8) << "Test" << '\n';
    for (const auto& r : report.per_class) {
        out << std::left << std::setw(static_cast<int>(width)) << r.class_name << std::right
            << std::setw(10) << percent(r.recall) << std::setw(8) << r.support << '\n';
    }
    out << std::left << std::setw(static_cast<int>(width)) << "Overall" << std::right
        << std::setw(10) << percent(report.overall_accuracy) << std::setw(8) << m.total() << '\n';

    out << "\nConfusion matrix (% of true class)\n";
    out << std::left << std::setw(static_cast<int>(width)) << "" << std::right;
    for (const auto& n : m.class_names) out << std::setw(static_cast<int>(width)) << n;
    out << '\n';
    const auto rows = row_normalize(m);
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << std::left << std::setw(static_cast<int>(width)) << m.class_names[i] << std::right;
        for (std::size_t j = 0; j < m.size(); ++j) {
            const std::string cell = rows[i] ? std::to_string((*rows[i])[j]) + "%" : "-";
            out << std::setw(static_cast<int>(width)) << cell;
        }
        out << '\n';
    }
    if (!report.metadata.empty()) {
        out << '\n';
        for (const auto& [key, value] : report.metadata) out << key << ": " << value << '\n';
    }
    return out.str();
}

std::string render_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "# overall_accuracy="
        << (report.overall_accuracy ? format_fixed(*report.overall_accuracy, 4) : std::string("-"))
        << '\n';
    for (const auto& [key, value] : report.metadata) out << "# metadata." << key << '=' << value << '\n';
    out << "class,support,correct,recall";
    for (const auto& n : report.matrix.class_names) out << ',' << csv_escape(n);
    out << '\n';
    for (std::size_t i = 0; i < report.per_class.size(); ++i) {
        const auto& r = report.per_class[i];
        out << csv_escape(r.class_name) << ',' << r.support << ',' << r.correct << ','
            << (r.recall ? format_fixed(*r.recall, 4) : std::string());
        for (const std::size_t c : report.matrix.counts[i]) out << ',' << c;
        out << '\n';
    }
    return out.str();
}

std::string render_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["overall_accuracy"] =
        report.overall_accuracy ? nlohmann::ordered_json(round4(*report.overall_accuracy)) : nullptr;
    auto per_class = nlohmann::ordered_json::array();
    for (const auto& r : report.per_class) {
        nlohmann::ordered_json row;
        row["class"] = r.class_name;
        row["recall"] = r.recall ? nlohmann::ordered_json(round4(*r.recall)) : nullptr;
        row["support"] = r.support;
        row["correct"] = r.correct;
        per_class.push_back(std::move(row));
    }
    doc["per_class"] = std::move(per_class);
    doc["matrix"]["classes"] = report.matrix.class_names;
    doc["matrix"]["counts"] = report.matrix.counts;
    auto metadata = nlohmann::ordered_json::object();
    for (const auto& [key, value] : report.metadata) metadata[key] = value;
    doc["metadata"] = std::move(metadata);
    return doc.dump(2) + "\n";
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::text: return render_text(report);
        case ReportFormat::csv: return render_csv(report);
        case ReportFormat::json: return render_json(report);
    }
    throw Error(ErrorKind::invalid_argument, "unknown report format");
}

EvalReport parse_report_csv(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> class_names;
    std::vector<std::vector<std::size_t>> counts;
    bool saw_header = false;
    for (const auto& raw : split(text, '\n')) {
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line.starts_with("# metadata.")) {
            const auto body = line.substr(11);
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) throw Error(ErrorKind::format, "bad metadata line");
            metadata.emplace_back(std::string(body.substr(0, eq)), std::string(body.substr(eq + 1)));
            continue;
        }
        if (line.starts_with('#')) continue;
        auto fields = split_csv_line(line);
        if (!saw_header) {
            if (fields.size() < 4 || fields[0] != "class") throw Error(ErrorKind::format, "bad report header");
            class_names.assign(fields.begin() + 4, fields.end());
            saw_header = true;
            continue;
        }
        if (fields.size() != 4 + class_names.size()) throw Error(ErrorKind::format, "bad report row");
        std::vector<std::size_t> row;
        for (std::size_t j = 0; j < class_names.size(); ++j) {
            const auto v = parse_uint(fields[4 + j]);
            if (!v) throw Error(ErrorKind::format, "bad count '" + fields[4 + j] + "'");
            row.push_back(static_cast<std::size_t>(*v));
        }
        if (fields[0] != class_names.at(counts.size())) {
            throw Error(ErrorKind::format, "report rows out of class order");
        }
        counts.push_back(std::move(row));
    }
    if (counts.size() != class_names.size()) throw Error(ErrorKind::format, "report matrix is not square");
    return make_report(ConfusionMatrix{class_names, counts}, std::move(metadata));
}

}  // namespace flowpix
