#pragma once

// Partial-linear hedonic model of log real prices
//
//   y_k = z_k δ + s_k β + g(l_k) + ε_k
//
// with quarter dummies z (first quarter of the round as baseline),
// characteristics s and a smooth location surface g. g is a low-rank
// thin-plate-style radial basis over k-means knots whose unpenalised part
// (intercept and affine terms in the coordinates) carries the global
// intercept; the radial coefficients get a ridge penalty chosen by GCV.

#include "hwd/bootstrap.hpp"
#include "hwd/core_model.hpp"
#include "hwd/dominance.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hwd {

struct HedonicConfig {
    std::size_t max_knots = 150;
    std::size_t observations_per_knot = 20; // K = min(max_knots, ceil(N/20))
    std::size_t gcv_points = 41;
    double log10_lambda_min = -6.0;
    double log10_lambda_max = 6.0;
    /// Skips GCV and uses this (scale-normalised) smoothing parameter.
    std::optional<double> fixed_lambda;
    std::size_t kmeans_iterations = 100;
};

/// Regression input for one round.
struct HedonicData {
    int round = 0;
    std::vector<double> y; // log real price
    std::vector<Quarter> quarter;
    std::vector<Location> location;
    std::vector<std::string> characteristic_names;
    std::vector<std::vector<double>> characteristics; // one column per name

    std::size_t size() const noexcept { return y.size(); }
};

/// Builds regression input from the records of one round: log floor area,
/// storey, lease flag and age. A characteristic that is missing for any
/// record, or constant within the round, is dropped and a notice appended.
HedonicData hedonic_data(std::span<const TransactionRecord> records, std::span<const double> real_prices,
                         int round, std::vector<std::string>* notices = nullptr);

/// Smooth surface g over 2-D locations.
class SplineSurface {
public:
    double operator()(Location l) const;

    std::size_t knot_count() const noexcept { return knots_.size(); }
    const std::vector<Location>& knots() const noexcept { return knots_; } // standardised coordinates
    double intercept() const noexcept { return intercept_; }
    double slope_x() const noexcept { return slope_x_; }
    double slope_y() const noexcept { return slope_y_; }

private:
    friend class HedonicFitter;
    double center_x_ = 0.0;
    double center_y_ = 0.0;
    double scale_ = 1.0;
    std::vector<Location> knots_;
    std::vector<double> knot_coefficients_; // radial coefficients mapped back to the knot basis
    double intercept_ = 0.0;
    double slope_x_ = 0.0;
    double slope_y_ = 0.0;
};

namespace detail {
struct HedonicSolver;
}

struct HedonicFit {
    int round = 0;
    std::vector<Quarter> quarters; // distinct quarters observed, first is the baseline
    std::vector<double> delta;     // one per non-baseline quarter
    std::vector<std::string> characteristic_names;
    std::vector<double> beta;
    SplineSurface surface;
    double lambda = 0.0; // scale-normalised smoothing parameter
    double gcv = 0.0;
    double r2 = 0.0;
    double edf = 0.0; // trace of the hat matrix
    bool lambda_at_boundary = false;

    std::vector<Quarter> obs_quarter;
    std::vector<double> y;
    std::vector<double> fitted;
    std::vector<double> residuals;

    /// Residuals of a refit on new responses with λ held fixed.
    std::vector<double> refit_residuals(std::span<const double> y_new) const;

    std::shared_ptr<const detail::HedonicSolver> solver;
};

/// Throws DataError when there are too few observations and NumericError
/// naming the offending column when the design is rank deficient.
HedonicFit fit_partial_linear(const HedonicData& data, const HedonicConfig& config = {});

enum class ResidualScale { Exponentiated, Log };

/// p̂_k = i[q(k)] + ε̂_k.
struct LevelEnhancedSample {
    int round = 0;
    std::vector<double> log_values;
    std::vector<double> residuals;

    /// Unit-weight sample; exponentiated values unless `scale` is Log.
    WeightedSample to_sample(ResidualScale scale = ResidualScale::Exponentiated) const;
};

/// Throws DataError if a quarter of the fit is outside the index.
LevelEnhancedSample level_enhanced(const HedonicFit& fit, const LogIndex& index);
LevelEnhancedSample level_enhanced(const HedonicFit& fit, const LogIndex& index, std::span<const double> residuals);

/// Residual bootstrap of the dominance test on level-enhanced residuals:
/// per replication and round, residuals are redrawn with replacement, added
/// to the fitted values, the model is refitted with λ fixed and the
/// level-enhanced values recomputed. No re-weighting.
SDTestReport residual_bootstrap_sd(const HedonicFit& target, std::span<const HedonicFit* const> comparisons,
                                   const LogIndex& index, int order, const BootstrapOptions& options,
                                   const DominanceConfig& config = {},
                                   ResidualScale scale = ResidualScale::Exponentiated);

} // namespace hwd
