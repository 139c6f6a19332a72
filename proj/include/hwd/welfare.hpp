#pragma once

// Atkinson utility, social welfare and equivalent wealth, and the
// re-centred bootstrap test of the equivalent-wealth ratio.

#include "hwd/bootstrap.hpp"
#include "hwd/core_model.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace hwd {

/// Standard inequality-aversion grid.
inline constexpr std::array<double, 5> kAversionGrid{0.0, 1.0, 1.5, 2.0, 2.5};

/// p^(1-nu)/(1-nu) for nu != 1, ln p for nu = 1. Throws NumericError for p <= 0 or nu < 0.
double utility(double p, double nu);

/// Inverse of `utility`: ((1-nu)·w)^(1/(1-nu)), or exp(w) for nu = 1.
double inverse_utility(double w, double nu);

struct WelfareEstimate {
    double nu = 0.0;
    double W_hat = 0.0;    // (1/N) Σ u(p_k)·w(k)
    double sigma2_W = 0.0; // (1/N) Σ (u(p_k) − Ŵ)²·w(k)
    double e_hat = 0.0;    // u⁻¹(Ŵ)
    std::size_t n = 0;
};

WelfareEstimate welfare_estimate(const WeightedSample& sample, double nu);

struct WealthRatio {
    double psi_hat = 0.0;
    double sigma_psi = 0.0; // delta-method standard error
};

/// ψ̂ = ê_r/ê_0 through (Ŵ_r/Ŵ_0)^(1/(1−ν)) or exp(Ŵ_r − Ŵ_0).
WealthRatio wealth_ratio(const WelfareEstimate& round, const WelfareEstimate& base);

struct RatioTestOptions {
    BootstrapOptions bootstrap;
    /// Common multiplier on σ̂_ψ̂ and every σ̂^b. The p-value does not depend on it.
    double sigma_scale = 1.0;
    /// Keep the sorted bootstrap statistics in the report.
    bool keep_distribution = false;
};

struct RatioTestReport {
    double nu = 0.0;
    double psi_hat = 0.0;
    double sigma_psi = 0.0;
    double theta = 0.0;
    double p_value = 0.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    CriticalValues critical; // ascending: c(1%) <= c(5%) <= c(10%)
    std::vector<double> distribution;

    bool rejects(double level) const { return p_value <= level; }
};

/// H0: ψ >= 1 against H1: ψ < 1. θ^b = ((ψ̂^b − 1) − (ψ̂ − 1)) / σ̂^b and
/// p = (1/B) #{θ^b <= θ̂}. (value, weight) pairs are resampled jointly and the
/// resampled weights renormalised to sum to N.
RatioTestReport ratio_test(const WeightedSample& round, const WeightedSample& base, double nu,
                           const RatioTestOptions& options);

} // namespace hwd
