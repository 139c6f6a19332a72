#pragma once

// Distribution summaries of weighted samples.

#include "hwd/core_model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hwd {

/// Quantile of the weight CDF F_k = Σ_{m<=k} w_m / Σw over sorted values,
/// linearly interpolated between (F_{k−1}, p_{k−1}) and (F_k, p_k). When
/// `prob` hits some F_k exactly the midpoint of p_k and p_{k+1} is returned.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double prob);

struct DistributionSummary {
    std::size_t n = 0;
    double total_weight = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

DistributionSummary summarize(const WeightedSample& sample);

struct DensityTrace {
    double bandwidth = 0.0;
    std::vector<double> x;
    std::vector<double> density;
};

/// Weighted Gaussian kernel density with Silverman's rule
/// h = 0.9 · min(sd, IQR/1.34) · N^(−1/5), evaluated on `points` equally
/// spaced points spanning [min − 3h, max + 3h].
DensityTrace density_trace(const WeightedSample& sample, std::size_t points = 128);

} // namespace hwd
