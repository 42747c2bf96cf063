#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "flowpix/dataset.hpp"
#include "flowpix/error.hpp"
#include "flowpix/forest.hpp"
#include "flowpix/rng.hpp"
#include "oracles.hpp"

using namespace flowpix;

namespace {

FeatureMatrix encoded(const LabeledTable& t, std::size_t n_classes, FeatureSchema* schema_out = nullptr) {
    const auto schema = infer_schema(t, unsw_schema_options());
    const auto layout = build_layout(schema);
    const auto thumbs = encode_table(t, Encoder(schema, layout));
    if (schema_out) *schema_out = schema;
    return feature_matrix(thumbs, schema, layout, n_classes);
}

}  // namespace

TEST_CASE("gini impurity") {
    CHECK(gini(std::vector<std::size_t>{5, 5}) == doctest::Approx(0.5));
    CHECK(gini(std::vector<std::size_t>{10, 0}) == 0.0);
    CHECK(gini(std::vector<std::size_t>{1, 1, 1, 1}) == doctest::Approx(0.75));
}

TEST_CASE("best_split equals brute-force enumeration on 100 seeded tables") {
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto c = oracle::random_split_case(seed);
        const auto expect = oracle::brute_force_split(c);
        const auto got = best_split(c.data, c.rows, c.features, c.min_leaf);
        const BinnedMatrix binned(c.data);
        const auto got_binned = best_split(binned, c.rows, c.features, c.min_leaf);
        if (!oracle::same_split(got, expect) || !oracle::same_split(got_binned, expect)) {
            ++mismatches;
            MESSAGE("mismatch at seed " << seed);
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("best_split returns nothing for pure or unsplittable nodes") {
    FeatureMatrix d;
    d.rows = 4;
    d.cols = 1;
    d.n_classes = 2;
    d.values = {1, 2, 3, 4};
    d.labels = {0, 0, 0, 0};
    const std::vector<std::size_t> rows{0, 1, 2, 3}, feats{0};
    CHECK_FALSE(best_split(d, rows, feats));
    d.labels = {0, 1, 0, 1};
    d.values = {5, 5, 5, 5};
    CHECK_FALSE(best_split(d, rows, feats));
    d.values = {1, 1, 2, 2};
    d.labels = {0, 0, 1, 1};
    const auto s = best_split(d, rows, feats);
    REQUIRE(s);
    CHECK(s->threshold == 1.5);
    CHECK(s->impurity_decrease == doctest::Approx(0.5));
    CHECK_FALSE(best_split(d, rows, feats, 3));
}

TEST_CASE("forest fits the separable fixture exactly on holdout") {
    const auto table = synth_fixture(0, 200, 2);
    SubsetPlan plan;
    plan.per_class_cap = 200;
    const auto split = make_balanced_subset(table, plan);
    const auto schema = infer_schema(split.train, unsw_schema_options());
    const auto layout = build_layout(schema);
    const Encoder enc(schema, layout);
    const auto train = feature_matrix(encode_table(split.train, enc), schema, layout, 2);
    const auto test = feature_matrix(encode_table(split.holdout, enc), schema, layout, 2);
    ForestParams p;
    p.n_trees = 25;
    const auto model = train_forest(train, p);
    const auto pred = predict_batch(model, test);
    CHECK(pred == test.labels);
}

TEST_CASE("forest output does not depend on worker count") {
    const auto data = encoded(synth_fixture(3, 60, 4), 4);
    ForestParams p;
    p.n_trees = 16;
    p.seed = 11;
    const auto a = train_forest(data, p, 1);
    const auto b = train_forest(data, p, 8);
    CHECK(forest_digest(a) == forest_digest(b));
    CHECK(predict_batch(a, data, 1) == predict_batch(b, data, 8));
    p.seed = 12;
    CHECK(forest_digest(train_forest(data, p, 1)) != forest_digest(a));
}

TEST_CASE("forest serialization round-trips") {
    const auto data = encoded(synth_fixture(4, 40, 3), 3);
    ForestParams p;
    p.n_trees = 8;
    p.max_depth = 4;
    p.mtry = 3;
    p.min_samples_leaf = 2;
    auto model = train_forest(data, p);
    model.class_names = {"Normal", "Analysis", "Backdoor"};
    model.schema_digest = "abc";
    const auto text = serialize_forest(model);
    const auto back = parse_forest(text);
    CHECK(serialize_forest(back) == text);
    CHECK(back.class_names == model.class_names);
    CHECK(back.params.max_depth == 4u);
    CHECK(predict_batch(back, data) == predict_batch(model, data));
    for (const auto& t : model.trees) {
        for (const auto& node : t.nodes) {
            if (node.is_leaf()) continue;
            CHECK(node.impurity_decrease > 0.0);
        }
    }
    CHECK_THROWS_AS(parse_forest("flowpix-forest v1\nbogus\n"), Error);
}

TEST_CASE("max_depth and min_samples_leaf bound the trees") {
    const auto data = encoded(synth_fixture(5, 50, 3), 3);
    ForestParams p;
    p.n_trees = 4;
    p.max_depth = 2;
    p.min_samples_leaf = 5;
    const auto model = train_forest(data, p);
    for (const auto& t : model.trees) {
        // Depth <= 2 means at most 7 nodes.
        CHECK(t.nodes.size() <= 7);
        for (const auto& node : t.nodes) {
            if (node.is_leaf()) CHECK(node.n_node_samples >= 5);
        }
    }
}

TEST_CASE("importance is normalised and ranks the separated features first") {
    const auto table = synth_fixture(2, 40, 10, FixtureShape::unsw());
    const auto data = encoded(table, 10);
    ForestParams p;
    p.n_trees = 30;
    const auto model = train_forest(data, p);
    const auto ranked = importance(model);
    REQUIRE(ranked.size() == data.cols);
    double sum = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].importance >= 0.0);
        if (i) CHECK(ranked[i - 1].importance >= ranked[i].importance);
        sum += ranked[i].importance;
    }
    CHECK(sum == doctest::Approx(1.0));
    int hits = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& f = ranked[i].feature;
        hits += f == "sttl" || f == "ct_state_ttl" || f == "ct_dst_src_ltm";
    }
    CHECK(hits >= 2);
}

TEST_CASE("degenerate and invalid training requests") {
    FeatureMatrix d;
    d.rows = 3;
    d.cols = 1;
    d.n_classes = 2;
    d.values = {1, 2, 3};
    d.labels = {1, 1, 1};
    try {
        train_forest(d, ForestParams{});
        FAIL("expected degenerate_task");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_task);
    }
    d.labels = {0, 1, 1};
    ForestParams p;
    p.mtry = 2;
    CHECK_THROWS_AS(train_forest(d, p), Error);
    p.mtry.reset();
    p.n_trees = 0;
    CHECK_THROWS_AS(train_forest(d, p), Error);
}

TEST_CASE("vote ties go to the lowest class index") {
    ForestModel m;
    m.n_features = 1;
    m.n_classes = 3;
    for (const std::size_t majority : {2u, 1u}) {
        Tree t;
        TreeNode leaf;
        leaf.majority = majority;
        leaf.n_node_samples = 1;
        t.nodes.push_back(leaf);
        t.class_counts = {0, 0, 0};
        t.class_counts[majority] = 1;
        m.trees.push_back(t);
    }
    const std::vector<double> x{0.0};
    CHECK(predict(m, x) == 1);
    CHECK_THROWS_AS(predict(m, std::vector<double>{0.0, 1.0}), Error);
}
