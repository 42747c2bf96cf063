#pragma once

// Independent reference implementations used to check the library. They are
// written straight from the definitions, favouring clarity over speed, and
// share no code with the implementations they check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "flowpix/forest.hpp"
#include "flowpix/rng.hpp"

namespace flowpix::oracle {

struct SplitCase {
    FeatureMatrix data;
    std::vector<std::size_t> rows;
    std::vector<std::size_t> features;
    std::size_t min_leaf = 1;
};

// Random table with up to 200 rows and 5 features; half the seeds use a
// coarse value grid so ties are common, half use a bootstrap row sample.
inline SplitCase random_split_case(std::uint64_t seed) {
    Rng rng(seed);
    SplitCase c;
    c.data.rows = 2 + rng.uniform_index(199);
    c.data.cols = 1 + rng.uniform_index(5);
    c.data.n_classes = 2 + rng.uniform_index(3);
    const bool coarse = rng.uniform01() < 0.5;
    for (std::size_t i = 0; i < c.data.rows * c.data.cols; ++i) {
        c.data.values.push_back(coarse ? static_cast<double>(rng.uniform_index(6))
                                       : std::round(rng.normal() * 1000.0) / 100.0);
    }
    for (std::size_t r = 0; r < c.data.rows; ++r) c.data.labels.push_back(rng.uniform_index(c.data.n_classes));
    if (rng.uniform01() < 0.5) {
        for (std::size_t r = 0; r < c.data.rows; ++r) c.rows.push_back(rng.uniform_index(c.data.rows));
    } else {
        c.rows.resize(c.data.rows);
        std::iota(c.rows.begin(), c.rows.end(), std::size_t{0});
    }
    for (std::size_t f = 0; f < c.data.cols; ++f) {
        if (rng.uniform01() < 0.7) c.features.push_back(f);
    }
    if (c.features.empty()) c.features.push_back(0);
    c.min_leaf = 1 + rng.uniform_index(3);
    return c;
}

inline double gini_of(const std::vector<double>& counts, double n) {
    double s = 1.0;
    for (const double c : counts) s -= (c / n) * (c / n);
    return s;
}

// Every candidate feature, every midpoint between consecutive distinct
// values, weighted Gini decrease recomputed from scratch per partition.
// Decreases within 1e-12 of the best count as tied; the first in
// (feature, threshold) order wins.
inline std::optional<SplitCandidate> brute_force_split(const SplitCase& c) {
    const auto& d = c.data;
    const double n = static_cast<double>(c.rows.size());
    std::vector<double> parent(d.n_classes, 0.0);
    for (const auto r : c.rows) parent[d.labels[r]] += 1.0;
    const double g_parent = gini_of(parent, n);

    std::vector<SplitCandidate> all;
    auto features = c.features;
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    for (const auto f : features) {
        std::vector<double> values;
        for (const auto r : c.rows) values.push_back(d.at(r, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            double t = (values[i] + values[i + 1]) / 2.0;
            if (!(t < values[i + 1])) t = values[i];
            std::vector<double> left(d.n_classes, 0.0), right(d.n_classes, 0.0);
            double nl = 0, nr = 0;
            for (const auto r : c.rows) {
                if (d.at(r, f) <= t) {
                    left[d.labels[r]] += 1;
                    nl += 1;
                } else {
                    right[d.labels[r]] += 1;
                    nr += 1;
                }
            }
            if (nl < static_cast<double>(c.min_leaf) || nr < static_cast<double>(c.min_leaf)) continue;
            const double dec = g_parent - nl / n * gini_of(left, nl) - nr / n * gini_of(right, nr);
            if (dec <= 1e-12) continue;
            all.push_back({f, t, dec, static_cast<std::size_t>(nl), static_cast<std::size_t>(nr)});
        }
    }
    if (all.empty()) return std::nullopt;
    double top = 0;
    for (const auto& s : all) top = std::max(top, s.impurity_decrease);
    for (const auto& s : all) {
        if (s.impurity_decrease >= top - 1e-12) return s;
    }
    return std::nullopt;
}

inline bool same_split(const std::optional<SplitCandidate>& a, const std::optional<SplitCandidate>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->feature == b->feature && a->threshold == b->threshold && a->n_left == b->n_left &&
           a->n_right == b->n_right && std::abs(a->impurity_decrease - b->impurity_decrease) < 1e-12;
}

// Leave-nothing-out nearest-centroid classification; zero errors means the
// classes are separable (by the perpendicular bisectors of the centroids).
inline std::size_t nearest_centroid_errors(const std::vector<std::vector<double>>& x,
                                           const std::vector<std::size_t>& y, std::size_t k) {
    if (x.empty()) return 0;
    const std::size_t d = x[0].size();
    std::vector<std::vector<double>> centroid(k, std::vector<double>(d, 0.0));
    std::vector<double> n(k, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) centroid[y[i]][j] += x[i][j];
        n[y[i]] += 1;
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (auto& v : centroid[c]) v /= std::max(n[c], 1.0);
    }
    std::size_t errors = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t best = 0;
        double best_d = INFINITY;
        for (std::size_t c = 0; c < k; ++c) {
            if (n[c] == 0) continue;
            double dist = 0;
            for (std::size_t j = 0; j < d; ++j) dist += (x[i][j] - centroid[c][j]) * (x[i][j] - centroid[c][j]);
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        errors += best != y[i];
    }
    return errors;
}

// First index of the largest value.
inline std::size_t first_max(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace flowpix::oracle
