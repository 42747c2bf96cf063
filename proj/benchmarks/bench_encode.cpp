#include <benchmark/benchmark.h>

#include <filesystem>

#include "flowpix/dataset.hpp"
#include "flowpix/encode.hpp"
#include "flowpix/png_io.hpp"
#include "flowpix/schema.hpp"

namespace {

using namespace flowpix;

void BM_EncodeRecord(benchmark::State& state) {
    const auto table = synth_fixture(3, 100, 10, FixtureShape::unsw());
    const auto schema = infer_schema(table, unsw_schema_options());
    const Encoder encoder(schema, build_layout(schema));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(encoder.encode(table.records[i]));
        i = (i + 1) % table.size();
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_EncodeRecord);

void BM_ParseCsv(benchmark::State& state) {
    const auto text = serialize_csv(synth_fixture(4, 100, 10, FixtureShape::unsw()));
    for (auto _ : state) benchmark::DoNotOptimize(parse_csv(text, "bench", LoadOptions{}));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseCsv);

void BM_PngWriteRead(benchmark::State& state) {
    const auto path = (std::filesystem::temp_directory_path() / "flowpix-bench.png").string();
    PixelGrid grid{};
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<std::uint8_t>(i * 37);
    for (auto _ : state) {
        write_png(grid, path);
        benchmark::DoNotOptimize(read_png(path));
    }
    std::filesystem::remove(path);
}
BENCHMARK(BM_PngWriteRead);

}  // namespace
