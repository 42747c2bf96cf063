#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace flowpix {

// splitmix64 finalizer; used to derive independent sub-stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for sub-stream `stream` of a run seeded with `seed`. Stages use
// distinct stream tags so adding a stage never perturbs another.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

namespace streams {
inline constexpr std::uint64_t layout_shuffle = 0x4c41594fULL;
inline constexpr std::uint64_t stratified = 0x53545241ULL;
inline constexpr std::uint64_t subset = 0x53554253ULL;
inline constexpr std::uint64_t fixture = 0x46495854ULL;
inline constexpr std::uint64_t forest = 0x46524553ULL;
inline constexpr std::uint64_t pixel_init = 0x50494e49ULL;
inline constexpr std::uint64_t pixel_shuffle = 0x50495348ULL;
}  // namespace streams

// mt19937_64 with distribution code written out here: the std:: distributions
// are implementation-defined, which would break cross-platform determinism.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, n); n > 0. Rejection sampling, no modulo bias.
    std::size_t uniform_index(std::size_t n);
    // Uniform on [0, 1) with 53 random bits.
    double uniform01();
    double uniform(double lo, double hi);
    // Box-Muller standard normal.
    double normal();

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace flowpix
