#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hwd {

struct BootstrapOptions {
    std::size_t replications = 1000; // B
    std::uint64_t seed = 0;
    unsigned threads = 0; // 0: hardware concurrency; results do not depend on it
};

/// Critical values at the 1%, 5% and 10% levels.
struct CriticalValues {
    double at_1 = 0.0;
    double at_5 = 0.0;
    double at_10 = 0.0;
};

/// Throws ConfigError when B < 100.
void require_replications(const BootstrapOptions& options);

/// The [m]-th smallest element (1-based, m = integer part of `rank`), clamped to [1, n].
double order_statistic(std::span<const double> sorted, double rank);

/// Multiplicities of a with-replacement resample of size n from n items.
void draw_counts(std::mt19937_64& rng, std::size_t n, std::vector<std::uint32_t>& counts);

/// Uniform index in [0, n).
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace hwd
