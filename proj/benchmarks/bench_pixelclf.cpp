#include <benchmark/benchmark.h>

#include "flowpix/dataset.hpp"
#include "flowpix/encode.hpp"
#include "flowpix/pixelclf.hpp"
#include "flowpix/schema.hpp"

namespace {

using namespace flowpix;

void BM_PixelEpoch(benchmark::State& state) {
    const auto table = synth_fixture(5, 100, 10, FixtureShape::unsw());
    const auto schema = infer_schema(table, unsw_schema_options());
    const auto thumbs = encode_table(table, Encoder(schema, build_layout(schema)));
    TrainConfig cfg;
    cfg.epochs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train_pixel_model(thumbs, schema.class_names, cfg));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * thumbs.size()));
}
BENCHMARK(BM_PixelEpoch);

}  // namespace
