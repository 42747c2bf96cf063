#include <cmath>

#include "doctest.h"
#include "flowpix/dataset.hpp"
#include "flowpix/error.hpp"
#include "flowpix/evalreport.hpp"
#include "flowpix/rng.hpp"
#include "json.hpp"

using namespace flowpix;

namespace {

ConfusionMatrix random_matrix(Rng& rng, std::size_t k) {
    ConfusionMatrix m;
    for (std::size_t i = 0; i < k; ++i) m.class_names.push_back("c" + std::to_string(i));
    m.counts.assign(k, std::vector<std::size_t>(k, 0));
    for (auto& row : m.counts) {
        const bool empty = rng.uniform01() < 0.1;
        for (auto& c : row) c = empty ? 0 : rng.uniform_index(rng.uniform01() < 0.5 ? 4 : 1000);
    }
    return m;
}

}  // namespace

TEST_CASE("confusion, recall and accuracy on a hand-checked example") {
    const std::vector<std::size_t> truth{0, 0, 0, 1, 1, 2};
    const std::vector<std::size_t> pred{0, 0, 1, 1, 0, 2};
    const auto m = confusion(truth, pred, {"Normal", "DoS", "Worms"});
    CHECK(m.counts == std::vector<std::vector<std::size_t>>{{2, 1, 0}, {1, 1, 0}, {0, 0, 1}});
    CHECK(m.total() == 6);
    CHECK(m.trace() == 4);
    const auto r = per_class_recall(m);
    CHECK(*r[0].recall == doctest::Approx(2.0 / 3.0));
    CHECK(*r[1].recall == doctest::Approx(0.5));
    CHECK(*r[2].recall == 1.0);
    CHECK(r[0].support == 3);
    CHECK(*overall_accuracy(m) == doctest::Approx(4.0 / 6.0));
    CHECK_THROWS_AS(confusion({0}, {0, 1}, {"a", "b"}), Error);
    CHECK_THROWS_AS(confusion({0}, {3}, {"a", "b"}), Error);
}

TEST_CASE("zero-support classes have no recall; empty matrix has no accuracy") {
    const auto m = confusion({0, 0}, {0, 1}, {"a", "b"});
    const auto r = per_class_recall(m);
    CHECK_FALSE(r[1].recall);
    CHECK_FALSE(overall_accuracy(confusion({}, {}, {"a", "b"})));
    const auto rows = row_normalize(m);
    CHECK(rows[0] == std::vector<int>{50, 50});
    CHECK_FALSE(rows[1]);
}

TEST_CASE("support-weighted recall equals overall accuracy") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto m = random_matrix(rng, 2 + rng.uniform_index(9));
        const auto acc = overall_accuracy(m);
        if (!acc) continue;
        double weighted = 0;
        for (const auto& r : per_class_recall(m)) {
            if (r.recall) weighted += *r.recall * static_cast<double>(r.support);
        }
        CHECK(weighted / static_cast<double>(m.total()) == doctest::Approx(*acc));
    }
}

TEST_CASE("row-normalised rows sum to 100 and stay within a point of exact shares") {
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        const auto m = random_matrix(rng, 2 + rng.uniform_index(9));
        const auto rows = row_normalize(m);
        for (std::size_t r = 0; r < m.size(); ++r) {
            if (!rows[r]) {
                CHECK(m.row_sum(r) == 0);
                continue;
            }
            int sum = 0;
            for (std::size_t c = 0; c < m.size(); ++c) {
                const double exact = 100.0 * static_cast<double>(m.counts[r][c]) / static_cast<double>(m.row_sum(r));
                CHECK(std::abs((*rows[r])[c] - exact) < 1.0);
                sum += (*rows[r])[c];
            }
            CHECK(sum == 100);
        }
    }
    // Three equal thirds: the lowest column takes the spare point.
    const auto thirds = confusion({0, 0, 0}, {0, 1, 2}, {"a", "b", "c"});
    CHECK(*row_normalize(thirds)[0] == std::vector<int>{34, 33, 33});
}

TEST_CASE("text render lists the ten classes in order") {
    const auto& names = unsw_class_names();
    std::vector<std::size_t> truth, pred;
    for (std::size_t c = 0; c < names.size(); ++c) {
        for (std::size_t j = 0; j < 5; ++j) {
            truth.push_back(c);
            pred.push_back(j < 3 ? c : (c + 1) % names.size());
        }
    }
    const auto text = render_report(make_report(confusion(truth, pred, names)), ReportFormat::text);
    std::size_t last = 0;
    for (const auto& n : names) {
        const auto at = text.find("\n" + n + " ", last);
        REQUIRE(at != std::string::npos);
        last = at + 1;
    }
    CHECK(text.find("60%") != std::string::npos);
    CHECK(text.find("Overall") != std::string::npos);
}

TEST_CASE("zero-support rows render as a dash") {
    const auto m = confusion({0, 0}, {0, 1}, {"Normal", "Attack"});
    const auto text = render_report(make_report(m), ReportFormat::text);
    const auto at = text.find("\nAttack ");
    REQUIRE(at != std::string::npos);
    const auto line = text.substr(at + 1, text.find('\n', at + 1) - at - 1);
    CHECK(line.find('-') != std::string::npos);
    CHECK(line.find('%') == std::string::npos);
}

TEST_CASE("json render has stable key order and 4-decimal ratios") {
    const auto m = confusion({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 1}, {"Normal", "Attack"});
    const auto report = make_report(m, {{"model_digest", "abc"}, {"seed", "7"}});
    const auto text = render_report(report, ReportFormat::json);
    const auto doc = nlohmann::ordered_json::parse(text);
    std::vector<std::string> keys;
    for (const auto& [k, v] : doc.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"overall_accuracy", "per_class", "matrix", "metadata"});
    CHECK(doc["overall_accuracy"].get<double>() == 0.8333);
    CHECK(doc["per_class"][0]["recall"].get<double>() == 0.6667);
    CHECK(doc["per_class"][1]["class"] == "Attack");
    CHECK(doc["matrix"]["counts"][0][1] == 1);
    CHECK(doc["metadata"]["seed"] == "7");
    CHECK(render_report(report, ReportFormat::json) == text);
}

TEST_CASE("csv render parses back to the same report") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto m = random_matrix(rng, 2 + rng.uniform_index(9));
        const auto report = make_report(m, {{"model_digest", "d" + std::to_string(i)}, {"split", "test"}});
        CHECK(parse_report_csv(render_report(report, ReportFormat::csv)) == report);
    }
    CHECK_THROWS_AS(parse_report_csv("nonsense\n"), Error);
    CHECK(parse_report_format("json") == ReportFormat::json);
    CHECK_THROWS_AS(parse_report_format("xml"), Error);
}

TEST_CASE("worked rows: small minority rows round the way a reader expects") {
    // Worms: 6 of 7 predicted Exploits, 1 Fuzzers.
    ConfusionMatrix m{{"Normal", "Exploits", "Fuzzers", "Worms"}, {{98, 1, 1, 0}, {0, 9, 1, 0}, {0, 0, 5, 0}, {0, 6, 1, 0}}};
    const auto rows = row_normalize(m);
    CHECK(*rows[3] == std::vector<int>{0, 86, 14, 0});
    CHECK((*rows[0])[0] == 98);
    const auto text = render_report(make_report(m), ReportFormat::text);
    CHECK(text.find("Worms") != std::string::npos);
    CHECK(per_class_recall(m)[3].recall == 0.0);
}
