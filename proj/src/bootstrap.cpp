#include "hwd/bootstrap.hpp"

#include "hwd/error.hpp"

#include <algorithm>
#include <cmath>

namespace hwd {

void require_replications(const BootstrapOptions& options) {
    if (options.replications < 100) {
        throw ConfigError("bootstrap needs B >= 100, got " + std::to_string(options.replications));
    }
}

double order_statistic(std::span<const double> sorted, double rank) {
    if (sorted.empty()) throw NumericError("order statistic of an empty set");
    // Integer part, guarding against 0.95*1000 = 949.999...
    auto m = static_cast<long long>(std::floor(rank + 1e-9));
    m = std::clamp<long long>(m, 1, static_cast<long long>(sorted.size()));
    return sorted[static_cast<std::size_t>(m - 1)];
}

void draw_counts(std::mt19937_64& rng, std::size_t n, std::vector<std::uint32_t>& counts) {
    counts.assign(n, 0);
    if (n == 0) return;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < n; ++k) ++counts[pick(rng)];
}

} // namespace hwd
