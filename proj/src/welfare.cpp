#include "hwd/welfare.hpp"

#include "hwd/error.hpp"
#include "hwd/kernels.hpp"
#include "hwd/parallel.hpp"
#include "hwd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace hwd {

namespace {

bool is_log_case(double nu) { return nu == 1.0; }

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// ψ and σ_ψ from the two welfare levels and their variances.
std::optional<WealthRatio> ratio_from(double w_r, double s2_r, double w_0, double s2_0, double nu) {
    WealthRatio out;
    if (is_log_case(nu)) {
        const double diff = w_r - w_0;
        out.psi_hat = std::exp(diff);
        out.sigma_psi = std::sqrt(std::exp(2.0 * diff) * (s2_r + s2_0));
        return out;
    }
    if (w_0 == 0.0 || (w_r < 0.0) != (w_0 < 0.0) || w_r == 0.0) return std::nullopt;
    const double ratio = w_r / w_0;
    const double one_minus = 1.0 - nu;
    out.psi_hat = std::pow(ratio, 1.0 / one_minus);
    const double lead = std::pow(ratio, nu / one_minus) / (one_minus * w_0);
    out.sigma_psi = std::sqrt(lead * lead * (s2_r + s2_0 * ratio * ratio));
    return out;
}

/// Utilities and weights of one sample, ready for resampling.
struct UtilitySample {
    std::vector<double> u;
    std::vector<double> w;
};

UtilitySample utilities(const WeightedSample& sample, double nu) {
    UtilitySample out;
    out.u.reserve(sample.size());
    for (double p : sample.values) out.u.push_back(utility(p, nu));
    out.w = sample.weights;
    return out;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Weighted mean and variance of u under effective weights e (renormalised to sum to N).
Moments resampled_moments(const UtilitySample& s, std::span<const double> e) {
    const auto sums = kernels::weighted_sums(e, s.u);
    Moments m;
    m.mean = sums.sum_wx / sums.sum_w;
    m.variance = kernels::weighted_centered_sq(e, s.u, m.mean) / sums.sum_w;
    return m;
}

void resample_weights(std::mt19937_64& rng, const UtilitySample& s, std::vector<std::uint32_t>& counts,
                      std::vector<double>& effective) {
    draw_counts(rng, s.u.size(), counts);
    effective.resize(s.u.size());
    for (std::size_t k = 0; k < effective.size(); ++k) effective[k] = static_cast<double>(counts[k]) * s.w[k];
}

} // namespace

double utility(double p, double nu) {
    if (!(p > 0.0)) throw NumericError("utility undefined for non-positive wealth " + num(p));
    if (nu < 0.0) throw NumericError("inequality aversion must be non-negative");
    if (is_log_case(nu)) return std::log(p);
    return std::pow(p, 1.0 - nu) / (1.0 - nu);
}

double inverse_utility(double w, double nu) {
    if (is_log_case(nu)) return std::exp(w);
    const double base = (1.0 - nu) * w;
    if (!(base > 0.0)) throw NumericError("welfare level " + num(w) + " outside the range of u for nu = " + num(nu));
    return std::pow(base, 1.0 / (1.0 - nu));
}

WelfareEstimate welfare_estimate(const WeightedSample& sample, double nu) {
    if (sample.empty()) throw DataError("welfare estimate of an empty sample (round " + std::to_string(sample.round_id) + ")");
    require_valid(sample);
    const auto us = utilities(sample, nu);
    const double n = static_cast<double>(sample.size());
    double w_hat = 0.0;
    for (std::size_t k = 0; k < us.u.size(); ++k) w_hat += us.u[k] * us.w[k];
    w_hat /= n;
    double s2 = 0.0;
    for (std::size_t k = 0; k < us.u.size(); ++k) {
        const double d = us.u[k] - w_hat;
        s2 += d * d * us.w[k];
    }
    s2 /= n;

    WelfareEstimate est;
    est.nu = nu;
    est.W_hat = w_hat;
    est.sigma2_W = s2;
    est.e_hat = inverse_utility(w_hat, nu);
    est.n = sample.size();
    return est;
}

WealthRatio wealth_ratio(const WelfareEstimate& round, const WelfareEstimate& base) {
    if (round.nu != base.nu) throw ConfigError("wealth ratio needs the same aversion parameter in both estimates");
    if (!is_log_case(round.nu)) {
        if (base.W_hat == 0.0) throw NumericError("base welfare is zero; ratio undefined");
        if ((round.W_hat < 0.0) != (base.W_hat < 0.0)) throw NumericError("welfare levels differ in sign; ratio undefined");
    }
    auto r = ratio_from(round.W_hat, round.sigma2_W, base.W_hat, base.sigma2_W, round.nu);
    if (!r) throw NumericError("wealth ratio undefined for nu = " + num(round.nu));
    return *r;
}

RatioTestReport ratio_test(const WeightedSample& round, const WeightedSample& base, double nu,
                           const RatioTestOptions& options) {
    require_replications(options.bootstrap);
    if (!(options.sigma_scale > 0.0)) throw ConfigError("sigma_scale must be positive");
    const auto est_r = welfare_estimate(round, nu);
    const auto est_0 = welfare_estimate(base, nu);
    const auto ratio = wealth_ratio(est_r, est_0);
    const double sigma = ratio.sigma_psi * options.sigma_scale;
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw NumericError("degenerate variance of the wealth ratio (nu = " + num(nu) + ")");
    }
    const double theta = (ratio.psi_hat - 1.0) / sigma;

    const auto us_r = utilities(round, nu);
    const auto us_0 = utilities(base, nu);
    const std::size_t B = options.bootstrap.replications;
    std::vector<double> stats(B);

    parallel_for(B, options.bootstrap.threads, [&](std::size_t b) {
        std::vector<std::uint32_t> counts;
        std::vector<double> e_r;
        std::vector<double> e_0;
        auto attempt = [&](std::mt19937_64& rng) -> std::optional<double> {
            resample_weights(rng, us_r, counts, e_r);
            resample_weights(rng, us_0, counts, e_0);
            const auto m_r = resampled_moments(us_r, e_r);
            const auto m_0 = resampled_moments(us_0, e_0);
            const auto rb = ratio_from(m_r.mean, m_r.variance, m_0.mean, m_0.variance, nu);
            if (!rb) return std::nullopt;
            const double sb = rb->sigma_psi * options.sigma_scale;
            if (!(sb > 0.0) || !std::isfinite(sb) || !std::isfinite(rb->psi_hat)) return std::nullopt;
            return ((rb->psi_hat - 1.0) - (ratio.psi_hat - 1.0)) / sb;
        };
        auto rng = stream_for(options.bootstrap.seed, streams::ratio_test, b);
        auto value = attempt(rng);
        if (!value) {
            auto redraw = stream_for(options.bootstrap.seed, streams::ratio_redraw, b);
            value = attempt(redraw);
        }
        if (!value) {
            throw NumericError("bootstrap replication " + std::to_string(b) +
                               " has degenerate resample variance after a redraw");
        }
        stats[b] = *value;
    });

    RatioTestReport report;
    report.nu = nu;
    report.psi_hat = ratio.psi_hat;
    report.sigma_psi = ratio.sigma_psi;
    report.theta = theta;
    report.replications = B;
    report.seed = options.bootstrap.seed;
    const auto below = std::count_if(stats.begin(), stats.end(), [&](double t) { return t <= theta; });
    report.p_value = static_cast<double>(below) / static_cast<double>(B);

    std::sort(stats.begin(), stats.end());
    const double bd = static_cast<double>(B);
    report.critical.at_1 = order_statistic(stats, 0.01 * bd);
    report.critical.at_5 = order_statistic(stats, 0.05 * bd);
    report.critical.at_10 = order_statistic(stats, 0.10 * bd);
    if (options.keep_distribution) report.distribution = std::move(stats);
    return report;
}

} // namespace hwd
