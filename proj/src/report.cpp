#include "hwd/report.hpp"

#include "hwd/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hwd {

namespace {

struct Sorted {
    std::vector<double> values;
    std::vector<double> weights;
};

Sorted sorted_copy(std::span<const double> values, std::span<const double> weights) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Sorted s;
    for (auto k : order) {
        s.values.push_back(values[k]);
        s.weights.push_back(weights[k]);
    }
    return s;
}

double sorted_quantile(const Sorted& s, double prob) {
    const double total = std::accumulate(s.weights.begin(), s.weights.end(), 0.0);
    const double eps = 1e-12;
    double prev_f = 0.0;
    double cum = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        cum += s.weights[k];
        const double f = cum / total;
        if (std::abs(f - prob) <= eps) {
            return k + 1 < s.values.size() ? 0.5 * (s.values[k] + s.values[k + 1]) : s.values[k];
        }
        if (f > prob) {
            if (k == 0) return s.values[0];
            return s.values[k - 1] + (prob - prev_f) / (f - prev_f) * (s.values[k] - s.values[k - 1]);
        }
        prev_f = f;
    }
    return s.values.back();
}

} // namespace

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double prob) {
    if (values.empty()) throw DataError("quantile of an empty sample");
    if (values.size() != weights.size()) throw DataError("values and weights differ in length");
    if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("quantile probability outside [0, 1]");
    return sorted_quantile(sorted_copy(values, weights), prob);
}

DistributionSummary summarize(const WeightedSample& sample) {
    if (sample.empty()) throw DataError("summary of an empty sample (round " + std::to_string(sample.round_id) + ")");
    const auto s = sorted_copy(sample.values, sample.weights);
    DistributionSummary out;
    out.n = sample.size();
    double sum_wx = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        out.total_weight += s.weights[k];
        sum_wx += s.weights[k] * s.values[k];
    }
    out.mean = sum_wx / out.total_weight;
    out.min = s.values.front();
    out.max = s.values.back();
    out.q1 = sorted_quantile(s, 0.25);
    out.median = sorted_quantile(s, 0.5);
    out.q3 = sorted_quantile(s, 0.75);
    // Degenerate samples: keep the summary exactly at the common value.
    if (out.min == out.max) out.mean = out.min;
    return out;
}

DensityTrace density_trace(const WeightedSample& sample, std::size_t points) {
    if (points < 2) throw ConfigError("density trace needs at least two points");
    const auto summary = summarize(sample);
    double var = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double d = sample.values[k] - summary.mean;
        var += sample.weights[k] * d * d;
    }
    const double sd = std::sqrt(var / summary.total_weight);
    const double iqr = (summary.q3 - summary.q1) / 1.34;
    double spread = iqr > 0.0 ? std::min(sd, iqr) : sd;
    if (!(spread > 0.0)) spread = std::max(std::abs(summary.mean) * 1e-3, 1e-12);
    DensityTrace out;
    out.bandwidth = 0.9 * spread * std::pow(static_cast<double>(summary.n), -0.2);
    const double h = out.bandwidth;
    const double lo = summary.min - 3.0 * h;
    const double hi = summary.max + 3.0 * h;
    const double norm = 1.0 / (summary.total_weight * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < points; ++g) {
        const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1);
        double d = 0.0;
        for (std::size_t k = 0; k < sample.size(); ++k) {
            const double z = (x - sample.values[k]) / h;
            d += sample.weights[k] * std::exp(-0.5 * z * z);
        }
        out.x.push_back(x);
        out.density.push_back(d * norm);
    }
    return out;
}

} // namespace hwd
