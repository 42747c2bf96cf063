#include "flowpix/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "flowpix/error.hpp"
#include "flowpix/parallel.hpp"
#include "flowpix/util.hpp"

namespace flowpix {

FeatureMatrix feature_matrix(const std::vector<Thumbnail>& thumbnails, const FeatureSchema& schema,
                             const LayoutManifest& layout, std::size_t n_classes) {
    const auto columns = expand_columns(schema);
    const auto cells = column_cells(columns, layout);
    FeatureMatrix m;
    m.rows = thumbnails.size();
    m.cols = columns.size();
    m.n_classes = n_classes;
    m.values.reserve(m.rows * m.cols);
    m.labels.reserve(m.rows);
    for (const auto& c : columns) m.feature_names.push_back(c.name);
    for (const auto& t : thumbnails) {
        for (const std::size_t cell : cells) m.values.push_back(t.pixels[cell]);
        m.labels.push_back(t.label);
    }
    return m;
}

double gini(std::span<const std::size_t> class_counts) {
    const double total =
        static_cast<double>(std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0}));
    if (total <= 0.0) throw Error(ErrorKind::invalid_argument, "gini of an empty node");
    double sum_sq = 0.0;
    for (const std::size_t c : class_counts) {
        const double p = static_cast<double>(c) / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

BinnedMatrix::BinnedMatrix(const FeatureMatrix& data)
    : data_(&data), cols_(data.cols), ranks_(data.rows * data.cols), distinct_(data.cols) {
    std::vector<double> column(data.rows);
    for (std::size_t c = 0; c < data.cols; ++c) {
        for (std::size_t r = 0; r < data.rows; ++r) column[r] = data.at(r, c);
        auto& values = distinct_[c];
        values = column;
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t r = 0; r < data.rows; ++r) {
            ranks_[r * cols_ + c] = static_cast<std::uint32_t>(
                std::lower_bound(values.begin(), values.end(), column[r]) - values.begin());
        }
    }
}

namespace {

__extension__ typedef unsigned __int128 u128;

// Weighted-Gini state of one candidate split. For a fixed parent, the decrease
// is (sum_sq_left/n_left + sum_sq_right/n_right - sum_sq_parent/n) / n, so
// candidates compare exactly by the first two terms in integer arithmetic.
struct SplitState {
    std::uint64_t sum_sq_left = 0;
    std::uint64_t n_left = 0;
    std::uint64_t sum_sq_right = 0;
    std::uint64_t n_right = 0;

    u128 numerator() const {
        return u128(sum_sq_left) * n_right + u128(sum_sq_right) * n_left;
    }
    u128 denominator() const { return u128(n_left) * n_right; }
};

bool better(const SplitState& a, const SplitState& b) {
    return a.numerator() * b.denominator() > b.numerator() * a.denominator();
}

bool positive_decrease(const SplitState& s, std::uint64_t sum_sq_parent, std::uint64_t n) {
    return s.numerator() * n > u128(sum_sq_parent) * s.denominator();
}

double decrease_value(const SplitState& s, std::uint64_t sum_sq_parent, std::uint64_t n) {
    const double nd = static_cast<double>(n);
    const double children = static_cast<double>(s.sum_sq_left) / static_cast<double>(s.n_left) +
                            static_cast<double>(s.sum_sq_right) / static_cast<double>(s.n_right);
    return std::max(0.0, (children - static_cast<double>(sum_sq_parent) / nd) / nd);
}

double midpoint(double lo, double hi) {
    const double mid = (lo + hi) / 2.0;
    return mid < hi ? mid : lo;
}

// Sweeps one feature's value groups in ascending order, updating `best`.
class FeatureSweep {
public:
    FeatureSweep(std::size_t n_classes, std::span<const std::uint64_t> parent_counts,
                 std::size_t min_samples_leaf)
        : k_(n_classes),
          parent_(parent_counts.begin(), parent_counts.end()),
          left_(n_classes, 0),
          min_leaf_(min_samples_leaf) {
        for (const auto c : parent_) {
            n_ += c;
            sum_sq_parent_ += c * c;
        }
    }

    void begin_feature() {
        std::fill(left_.begin(), left_.end(), 0);
        state_ = SplitState{0, 0, sum_sq_parent_, n_};
        has_prev_ = false;
    }

    // `counts` holds the per-class multiplicities of rows with value `value`.
    void add_group(double value, const std::uint64_t* counts, std::size_t feature,
                   std::optional<SplitCandidate>& best, SplitState& best_state) {
        if (has_prev_ && state_.n_left >= min_leaf_ && state_.n_right >= min_leaf_ &&
            positive_decrease(state_, sum_sq_parent_, n_) &&
            (!best || better(state_, best_state))) {
            best_state = state_;
            best = SplitCandidate{feature, midpoint(prev_value_, value),
                                  decrease_value(state_, sum_sq_parent_, n_),
                                  static_cast<std::size_t>(state_.n_left),
                                  static_cast<std::size_t>(state_.n_right)};
        }
        for (std::size_t k = 0; k < k_; ++k) {
            const std::uint64_t m = counts[k];
            if (m == 0) continue;
            const std::uint64_t cl = left_[k];
            const std::uint64_t cr = parent_[k] - cl;
            state_.sum_sq_left += (cl + m) * (cl + m) - cl * cl;
            state_.sum_sq_right -= cr * cr - (cr - m) * (cr - m);
            state_.n_left += m;
            state_.n_right -= m;
            left_[k] = cl + m;
        }
        prev_value_ = value;
        has_prev_ = true;
    }

private:
    std::size_t k_;
    std::vector<std::uint64_t> parent_;
    std::vector<std::uint64_t> left_;
    std::size_t min_leaf_;
    std::uint64_t n_ = 0;
    std::uint64_t sum_sq_parent_ = 0;
    SplitState state_;
    double prev_value_ = 0.0;
    bool has_prev_ = false;
};

}  // namespace

std::optional<SplitCandidate> best_split(const BinnedMatrix& binned, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         std::size_t min_samples_leaf) {
    const FeatureMatrix& data = binned.data();
    const std::size_t k = data.n_classes;
    if (rows.size() < 2 || candidate_features.empty() || k == 0) return std::nullopt;

    std::vector<std::uint64_t> parent(k, 0);
    for (const std::size_t r : rows) ++parent.at(data.labels[r]);
    FeatureSweep sweep(k, parent, std::max<std::size_t>(min_samples_leaf, 1));

    std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());

    std::optional<SplitCandidate> best;
    SplitState best_state;
    std::vector<std::uint64_t> histogram;
    std::vector<std::uint64_t> keys;
    std::vector<std::uint64_t> group(k, 0);
    for (const std::size_t f : features) {
        const auto& distinct = binned.distinct(f);
        sweep.begin_feature();
        if (distinct.size() * k <= 4 * rows.size()) {
            histogram.assign(distinct.size() * k, 0);
            for (const std::size_t r : rows) ++histogram[binned.rank(r, f) * k + data.labels[r]];
            for (std::size_t b = 0; b < distinct.size(); ++b) {
                const std::uint64_t* counts = histogram.data() + b * k;
                if (std::all_of(counts, counts + k, [](std::uint64_t c) { return c == 0; })) continue;
                sweep.add_group(distinct[b], counts, f, best, best_state);
            }
        } else {
            keys.clear();
            for (const std::size_t r : rows) {
                keys.push_back(std::uint64_t(binned.rank(r, f)) * k + data.labels[r]);
            }
            std::sort(keys.begin(), keys.end());
            std::size_t i = 0;
            while (i < keys.size()) {
                const std::uint64_t bin = keys[i] / k;
                std::fill(group.begin(), group.end(), 0);
                for (; i < keys.size() && keys[i] / k == bin; ++i) ++group[keys[i] % k];
                sweep.add_group(distinct[bin], group.data(), f, best, best_state);
            }
        }
    }
    return best;
}

std::optional<SplitCandidate> best_split(const FeatureMatrix& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         std::size_t min_samples_leaf) {
    const BinnedMatrix binned(data);
    return best_split(binned, rows, candidate_features, min_samples_leaf);
}

std::size_t ForestParams::resolved_mtry(std::size_t n_features) const {
    if (mtry) return *mtry;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

void ForestParams::validate(std::size_t n_features) const {
    if (n_trees < 1) throw Error(ErrorKind::invalid_argument, "n_trees must be >= 1");
    if (n_features < 1) throw Error(ErrorKind::invalid_argument, "no features to train on");
    const std::size_t m = resolved_mtry(n_features);
    if (m < 1 || m > n_features) {
        throw Error(ErrorKind::invalid_argument,
                    "mtry must lie in [1, " + std::to_string(n_features) + "]");
    }
    if (min_samples_leaf < 1) throw Error(ErrorKind::invalid_argument, "min_samples_leaf must be >= 1");
}

std::size_t Tree::leaf_for(std::span<const double> x) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const TreeNode& n = nodes[node];
        node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                             : n.right);
    }
    return node;
}

Tree train_tree(const BinnedMatrix& binned, std::vector<std::size_t> rows, const ForestParams& params,
                Rng& rng) {
    const FeatureMatrix& data = binned.data();
    params.validate(data.cols);
    if (rows.empty()) throw Error(ErrorKind::invalid_argument, "cannot grow a tree on zero rows");
    const std::size_t k = data.n_classes;
    const std::size_t mtry = params.resolved_mtry(data.cols);

    struct Work {
        std::size_t node, begin, end, depth;
    };
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Work> stack{{0, 0, rows.size(), 0}};
    std::vector<std::size_t> features(data.cols);
    std::vector<std::size_t> counts(k);

    while (!stack.empty()) {
        const Work w = stack.back();
        stack.pop_back();
        const std::span<std::size_t> node_rows(rows.data() + w.begin, w.end - w.begin);

        std::fill(counts.begin(), counts.end(), 0);
        for (const std::size_t r : node_rows) ++counts[data.labels[r]];
        if (tree.class_counts.size() < tree.nodes.size() * k) {
            tree.class_counts.resize(tree.nodes.size() * k, 0);
        }
        std::copy(counts.begin(), counts.end(), tree.class_counts.begin() + static_cast<std::ptrdiff_t>(w.node * k));
        const auto top = std::max_element(counts.begin(), counts.end());
        {
            TreeNode& node = tree.nodes[w.node];
            node.n_node_samples = node_rows.size();
            node.majority = static_cast<std::size_t>(top - counts.begin());
        }

        const bool pure = *top == node_rows.size();
        const bool depth_reached = params.max_depth && w.depth >= *params.max_depth;
        if (pure || depth_reached || node_rows.size() < 2 * params.min_samples_leaf) continue;

        std::iota(features.begin(), features.end(), std::size_t{0});
        for (std::size_t i = 0; i < mtry; ++i) {
            std::swap(features[i], features[i + rng.uniform_index(features.size() - i)]);
        }
        const std::span<const std::size_t> chosen(features.data(), mtry);
        const auto split = best_split(binned, node_rows, chosen, params.min_samples_leaf);
        if (!split) continue;

        const auto mid = std::stable_partition(node_rows.begin(), node_rows.end(), [&](std::size_t r) {
            return data.at(r, split->feature) <= split->threshold;
        });
        const std::size_t split_at = w.begin + static_cast<std::size_t>(mid - node_rows.begin());

        const auto left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[w.node];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.impurity_decrease = split->impurity_decrease;
        node.left = left;
        node.right = left + 1;
        stack.push_back({static_cast<std::size_t>(left) + 1, split_at, w.end, w.depth + 1});
        stack.push_back({static_cast<std::size_t>(left), w.begin, split_at, w.depth + 1});
    }
    tree.class_counts.resize(tree.nodes.size() * k, 0);
    return tree;
}

ForestModel train_forest(const FeatureMatrix& data, const ForestParams& params, std::size_t workers) {
    params.validate(data.cols);
    std::vector<bool> present(data.n_classes, false);
    for (const std::size_t y : data.labels) {
        if (y >= data.n_classes) throw Error(ErrorKind::invalid_argument, "label out of range");
        present[y] = true;
    }
    if (std::count(present.begin(), present.end(), true) < 2) {
        throw Error(ErrorKind::degenerate_task, "training data holds fewer than two classes");
    }

    ForestModel model;
    model.params = params;
    model.n_features = data.cols;
    model.n_classes = data.n_classes;
    model.feature_names = data.feature_names;
    model.trees.resize(params.n_trees);

    const BinnedMatrix binned(data);
    parallel_for(params.n_trees, workers, [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, streams::forest, t));
        std::vector<std::size_t> sample(data.rows);
        if (params.bootstrap) {
            for (auto& r : sample) r = rng.uniform_index(data.rows);
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        model.trees[t] = train_tree(binned, std::move(sample), params, rng);
    });
    return model;
}

std::size_t predict(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.n_features) {
        throw Error(ErrorKind::invalid_argument, "feature vector has " + std::to_string(x.size()) +
                                                     " entries, model expects " +
                                                     std::to_string(model.n_features));
    }
    std::vector<std::size_t> votes(model.n_classes, 0);
    for (const auto& tree : model.trees) ++votes[tree.nodes[tree.leaf_for(x)].majority];
    return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<std::size_t> predict_batch(const ForestModel& model, const FeatureMatrix& data,
                                       std::size_t workers) {
    std::vector<std::size_t> out(data.rows);
    parallel_for(data.rows, workers, [&](std::size_t r) { out[r] = predict(model, data.row(r)); });
    return out;
}

std::vector<ImportanceEntry> importance(const ForestModel& model) {
    std::vector<double> totals(model.n_features, 0.0);
    for (const auto& tree : model.trees) {
        const double root = static_cast<double>(tree.nodes.front().n_node_samples);
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            totals[static_cast<std::size_t>(node.feature)] +=
                static_cast<double>(node.n_node_samples) / root * node.impurity_decrease;
        }
    }
    double sum = 0.0;
    for (auto& t : totals) {
        t /= static_cast<double>(model.trees.size());
        sum += t;
    }
    std::vector<ImportanceEntry> out(model.n_features);
    for (std::size_t f = 0; f < model.n_features; ++f) {
        out[f].index = f;
        out[f].feature = f < model.feature_names.size() ? model.feature_names[f] : std::to_string(f);
        out[f].importance = sum > 0.0 ? totals[f] / sum : 0.0;
    }
    std::stable_sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
        return a.importance > b.importance;
    });
    return out;
}

namespace {

constexpr std::string_view kForestMagic = "flowpix-forest v1";

std::string optional_text(const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string("none");
}

std::optional<std::size_t> parse_optional(const std::string& text) {
    if (text == "none") return std::nullopt;
    const auto v = parse_uint(text);
    if (!v) throw Error(ErrorKind::format, "bad forest parameter '" + text + "'");
    return static_cast<std::size_t>(*v);
}

std::size_t need_uint(const std::string& text) {
    const auto v = parse_uint(text);
    if (!v) throw Error(ErrorKind::format, "expected an unsigned integer, found '" + text + "'");
    return static_cast<std::size_t>(*v);
}

long need_int(const std::string& text) {
    if (text == "-1") return -1;
    return static_cast<long>(need_uint(text));
}

double need_double(const std::string& text) {
    const auto v = parse_double(text);
    if (!v) throw Error(ErrorKind::format, "expected a number, found '" + text + "'");
    return *v;
}

// "key=value" tokens after the leading word.
std::string field(const std::vector<std::string>& tokens, std::string_view key) {
    for (const auto& t : tokens) {
        if (t.size() > key.size() && t.compare(0, key.size(), key) == 0 && t[key.size()] == '=') {
            return t.substr(key.size() + 1);
        }
    }
    throw Error(ErrorKind::format, "forest file lacks '" + std::string(key) + "'");
}

}  // namespace

std::string serialize_forest(const ForestModel& model) {
    std::ostringstream out;
    const auto& p = model.params;
    out << kForestMagic << '\n';
    out << "params n_trees=" << p.n_trees << " mtry=" << optional_text(p.mtry)
        << " max_depth=" << optional_text(p.max_depth) << " min_samples_leaf=" << p.min_samples_leaf
        << " seed=" << p.seed << " bootstrap=" << (p.bootstrap ? 1 : 0) << '\n';
    out << "schema " << (model.schema_digest.empty() ? "-" : model.schema_digest) << '\n';
    out << "classes " << model.n_classes << ' ' << join(model.class_names, "|") << '\n';
    out << "features " << model.n_features << ' ' << join(model.feature_names, "|") << '\n';
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const Tree& tree = model.trees[t];
        out << "tree " << t << ' ' << tree.nodes.size() << '\n';
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const TreeNode& n = tree.nodes[i];
            out << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right
                << ' ' << n.n_node_samples << ' ' << format_double(n.impurity_decrease);
            for (const std::size_t c : tree.counts(i, model.n_classes)) out << ' ' << c;
            out << '\n';
        }
    }
    out << "end\n";
    return out.str();
}

ForestModel parse_forest(std::string_view text) {
    const auto lines = split(text, '\n');
    std::size_t at = 0;
    auto next = [&]() -> std::vector<std::string> {
        while (at < lines.size()) {
            const std::string_view line = trim(lines[at++]);
            if (!line.empty()) return split(line, ' ');
        }
        throw Error(ErrorKind::format, "truncated forest file");
    };
    const auto header_line = at < lines.size() ? std::string(trim(lines[at++])) : std::string();
    if (header_line != kForestMagic) throw Error(ErrorKind::format, "not a flowpix-forest v1 file");

    ForestModel model;
    auto tokens = next();
    if (tokens.at(0) != "params") throw Error(ErrorKind::format, "expected params line");
    model.params.n_trees = need_uint(field(tokens, "n_trees"));
    model.params.mtry = parse_optional(field(tokens, "mtry"));
    model.params.max_depth = parse_optional(field(tokens, "max_depth"));
    model.params.min_samples_leaf = need_uint(field(tokens, "min_samples_leaf"));
    model.params.seed = need_uint(field(tokens, "seed"));
    model.params.bootstrap = field(tokens, "bootstrap") == "1";

    tokens = next();
    if (tokens.size() != 2 || tokens[0] != "schema") throw Error(ErrorKind::format, "expected schema line");
    model.schema_digest = tokens[1] == "-" ? std::string() : tokens[1];

    // Names may contain spaces only if the source CSV did; rejoin the tail.
    auto rest_of = [](const std::vector<std::string>& t) {
        return std::vector<std::string>(t.begin() + 2, t.end());
    };
    tokens = next();
    if (tokens.size() < 2 || tokens[0] != "classes") throw Error(ErrorKind::format, "expected classes line");
    model.n_classes = need_uint(tokens[1]);
    const std::string class_text = join(rest_of(tokens), " ");
    if (!class_text.empty()) model.class_names = split(class_text, '|');

    tokens = next();
    if (tokens.size() < 2 || tokens[0] != "features") throw Error(ErrorKind::format, "expected features line");
    model.n_features = need_uint(tokens[1]);
    const std::string feature_text = join(rest_of(tokens), " ");
    if (!feature_text.empty()) model.feature_names = split(feature_text, '|');

    for (std::size_t t = 0; t < model.params.n_trees; ++t) {
        tokens = next();
        if (tokens.size() != 3 || tokens[0] != "tree" || need_uint(tokens[1]) != t) {
            throw Error(ErrorKind::format, "expected tree " + std::to_string(t));
        }
        const std::size_t n_nodes = need_uint(tokens[2]);
        Tree tree;
        tree.nodes.resize(n_nodes);
        tree.class_counts.resize(n_nodes * model.n_classes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            tokens = next();
            if (tokens.size() != 6 + model.n_classes) {
                throw Error(ErrorKind::format, "malformed node line in tree " + std::to_string(t));
            }
            TreeNode& n = tree.nodes[i];
            n.feature = static_cast<std::int32_t>(need_int(tokens[0]));
            n.threshold = need_double(tokens[1]);
            n.left = static_cast<std::int32_t>(need_int(tokens[2]));
            n.right = static_cast<std::int32_t>(need_int(tokens[3]));
            n.n_node_samples = need_uint(tokens[4]);
            n.impurity_decrease = need_double(tokens[5]);
            for (std::size_t c = 0; c < model.n_classes; ++c) {
                tree.class_counts[i * model.n_classes + c] = need_uint(tokens[6 + c]);
            }
            const auto counts = tree.counts(i, model.n_classes);
            n.majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                                  counts.begin());
            const bool leaf = n.feature < 0;
            const auto in_range = [&](std::int32_t child) {
                return child > 0 && static_cast<std::size_t>(child) < n_nodes;
            };
            if (!leaf && (static_cast<std::size_t>(n.feature) >= model.n_features || !in_range(n.left) ||
                          !in_range(n.right))) {
                throw Error(ErrorKind::format, "node references out of range in tree " + std::to_string(t));
            }
        }
        model.trees.push_back(std::move(tree));
    }
    if (next().at(0) != "end") throw Error(ErrorKind::format, "missing end marker");
    return model;
}

void save_forest(const ForestModel& model, const std::string& path) {
    write_file(path, serialize_forest(model));
}

ForestModel load_forest(const std::string& path) { return parse_forest(read_file(path)); }

std::string forest_digest(const ForestModel& model) { return fnv1a_hex(serialize_forest(model)); }

}  // namespace flowpix
