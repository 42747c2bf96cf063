#include <benchmark/benchmark.h>

#include <numeric>

#include "flowpix/dataset.hpp"
#include "flowpix/encode.hpp"
#include "flowpix/forest.hpp"
#include "flowpix/rng.hpp"
#include "flowpix/schema.hpp"

namespace {

using namespace flowpix;

struct Encoded {
    FeatureSchema schema;
    FeatureMatrix x;
};

Encoded unsw_like(std::size_t per_class) {
    const auto table = synth_fixture(7, per_class, 10, FixtureShape::unsw());
    Encoded e;
    e.schema = infer_schema(table, unsw_schema_options());
    const auto layout = build_layout(e.schema);
    e.x = feature_matrix(encode_table(table, Encoder(e.schema, layout)), e.schema, layout,
                         e.schema.class_names.size());
    return e;
}

void BM_BestSplitRoot(benchmark::State& state) {
    const auto e = unsw_like(static_cast<std::size_t>(state.range(0)));
    const BinnedMatrix binned(e.x);
    std::vector<std::size_t> rows(e.x.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<std::size_t> features(e.x.cols);
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (auto _ : state) benchmark::DoNotOptimize(best_split(binned, rows, features));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * e.x.rows * e.x.cols));
}
BENCHMARK(BM_BestSplitRoot)->Arg(50)->Arg(500);

void BM_BestSplitSorted(benchmark::State& state) {
    const auto e = unsw_like(static_cast<std::size_t>(state.range(0)));
    std::vector<std::size_t> rows(e.x.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<std::size_t> features(e.x.cols);
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (auto _ : state) benchmark::DoNotOptimize(best_split(e.x, rows, features));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * e.x.rows * e.x.cols));
}
BENCHMARK(BM_BestSplitSorted)->Arg(50)->Arg(500);

void BM_TrainTree(benchmark::State& state) {
    const auto e = unsw_like(static_cast<std::size_t>(state.range(0)));
    const BinnedMatrix binned(e.x);
    std::vector<std::size_t> rows(e.x.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    ForestParams params;
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(train_tree(binned, rows, params, rng));
}
BENCHMARK(BM_TrainTree)->Arg(100)->Arg(1000);

void BM_TrainForest(benchmark::State& state) {
    const auto e = unsw_like(100);
    ForestParams params;
    params.n_trees = 20;
    for (auto _ : state) benchmark::DoNotOptimize(train_forest(e.x, params, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_TrainForest)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
