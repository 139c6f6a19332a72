#include "hwd/hedonic.hpp"

#include "hwd/error.hpp"
#include "hwd/parallel.hpp"
#include "hwd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace hwd {

namespace detail {

/// Everything needed to refit the model on new responses with λ fixed.
struct HedonicSolver {
    Eigen::MatrixXd design;    // N × P, columns [unpenalised | radial]
    Eigen::MatrixXd smoother;  // P × P, θ = smoother · designᵀ y
};

} // namespace detail

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double radial(double r2) {
    // r² log r, written in terms of r² to avoid a square root.
    return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0;
}

double sq_dist(Location a, Location b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Lloyd's algorithm from a k-means++ start with a fixed stream.
std::vector<Location> kmeans_centers(const std::vector<Location>& points, std::size_t k, std::size_t iterations) {
    const std::size_t n = points.size();
    auto rng = stream_for(0, streams::kmeans, n);
    std::vector<Location> centers;
    centers.reserve(k);
    centers.push_back(points[draw_index(rng, n)]);
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = std::min(dist[i], sq_dist(points[i], centers.back()));
            total += dist[i];
        }
        if (!(total > 0.0)) break;
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= dist[i];
            if (target <= 0.0 && dist[i] > 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(points[pick]);
    }

    std::vector<std::size_t> assign(n, 0);
    for (std::size_t it = 0; it < iterations; ++it) {
        bool changed = it == 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < centers.size(); ++c) {
                const double d = sq_dist(points[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) changed = true;
            assign[i] = best;
        }
        if (!changed) break;
        std::vector<double> sx(centers.size(), 0.0), sy(centers.size(), 0.0);
        std::vector<std::size_t> count(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sx[assign[i]] += points[i].x;
            sy[assign[i]] += points[i].y;
            ++count[assign[i]];
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (count[c] > 0) centers[c] = {sx[c] / static_cast<double>(count[c]), sy[c] / static_cast<double>(count[c])};
        }
    }
    return centers;
}

std::size_t distinct_locations(const std::vector<Location>& points) {
    std::set<std::pair<double, double>> seen;
    for (const auto& p : points) seen.emplace(p.x, p.y);
    return seen.size();
}

/// Index of the first column that adds no rank, or nullopt if X has full column rank.
std::optional<std::size_t> first_dependent_column(const MatrixXd& x) {
    constexpr double threshold = 1e-9;
    Eigen::ColPivHouseholderQR<MatrixXd> full(x);
    full.setThreshold(threshold);
    if (full.rank() == x.cols()) return std::nullopt;
    for (Eigen::Index c = 1; c <= x.cols(); ++c) {
        Eigen::ColPivHouseholderQR<MatrixXd> qr(x.leftCols(c));
        qr.setThreshold(threshold);
        if (qr.rank() < c) return static_cast<std::size_t>(c - 1);
    }
    return static_cast<std::size_t>(x.cols() - 1);
}

} // namespace

// ---------------------------------------------------------------------------

HedonicData hedonic_data(std::span<const TransactionRecord> records, std::span<const double> real_prices, int round,
                         std::vector<std::string>* notices) {
    if (records.size() != real_prices.size()) throw DataError("records and real prices differ in length");
    HedonicData data;
    data.round = round;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (!(real_prices[k] > 0.0)) throw DataError("non-positive real price for record '" + records[k].id + "'");
        data.y.push_back(std::log(real_prices[k]));
        data.quarter.push_back(Quarter::of(records[k].date));
        data.location.push_back(records[k].location);
    }

    struct Candidate {
        const char* name;
        std::optional<double> Characteristics::*member;
        bool log;
    };
    const Candidate candidates[] = {
        {"log_area", &Characteristics::floor_area, true},
        {"storey", &Characteristics::storey, false},
        {"lease", &Characteristics::lease, false},
        {"age", &Characteristics::age, false},
    };
    for (const auto& cand : candidates) {
        std::vector<double> column;
        column.reserve(records.size());
        bool complete = true;
        for (const auto& rec : records) {
            const auto& v = rec.characteristics.*cand.member;
            if (!v || (cand.log && !(*v > 0.0))) {
                complete = false;
                break;
            }
            column.push_back(cand.log ? std::log(*v) : *v);
        }
        const auto drop = [&](const std::string& why) {
            if (notices) notices->push_back("round " + std::to_string(round) + ": dropped characteristic '" + cand.name + "' (" + why + ")");
        };
        if (records.empty()) continue;
        if (!complete) {
            drop("missing for some records");
            continue;
        }
        const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
        if (*lo == *hi) {
            drop("constant within the round");
            continue;
        }
        data.characteristic_names.emplace_back(cand.name);
        data.characteristics.push_back(std::move(column));
    }
    return data;
}

// ---------------------------------------------------------------------------

double SplineSurface::operator()(Location l) const {
    const Location s{(l.x - center_x_) / scale_, (l.y - center_y_) / scale_};
    double g = intercept_ + slope_x_ * s.x + slope_y_ * s.y;
    for (std::size_t k = 0; k < knots_.size(); ++k) g += knot_coefficients_[k] * radial(sq_dist(s, knots_[k]));
    return g;
}

class HedonicFitter {
public:
    HedonicFitter(const HedonicData& data, const HedonicConfig& config) : data_(data), config_(config) {}

    HedonicFit run();

private:
    const HedonicData& data_;
    const HedonicConfig& config_;
};

HedonicFit HedonicFitter::run() {
    const std::size_t n = data_.size();
    if (n == 0) throw DataError("no observations in round " + std::to_string(data_.round));
    if (data_.quarter.size() != n || data_.location.size() != n) throw DataError("hedonic input columns differ in length");
    for (const auto& col : data_.characteristics) {
        if (col.size() != n) throw DataError("hedonic characteristic column differs in length");
    }

    HedonicFit fit;
    fit.round = data_.round;
    fit.y = data_.y;
    fit.obs_quarter = data_.quarter;
    fit.characteristic_names = data_.characteristic_names;
    {
        std::set<Quarter> qs(data_.quarter.begin(), data_.quarter.end());
        fit.quarters.assign(qs.begin(), qs.end());
    }
    std::map<int, std::size_t> dummy_of;
    for (std::size_t q = 1; q < fit.quarters.size(); ++q) dummy_of[fit.quarters[q].ordinal] = q - 1;

    // Standardised coordinates.
    auto& surf = fit.surface;
    {
        double mx = 0.0, my = 0.0;
        for (const auto& l : data_.location) {
            mx += l.x;
            my += l.y;
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& l : data_.location) var += (l.x - mx) * (l.x - mx) + (l.y - my) * (l.y - my);
        var /= 2.0 * static_cast<double>(n);
        surf.center_x_ = mx;
        surf.center_y_ = my;
        surf.scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    std::vector<Location> loc(n);
    for (std::size_t i = 0; i < n; ++i) {
        loc[i] = {(data_.location[i].x - surf.center_x_) / surf.scale_, (data_.location[i].y - surf.center_y_) / surf.scale_};
    }

    // Unpenalised columns.
    std::vector<std::string> names{"intercept", "x", "y"};
    for (std::size_t q = 1; q < fit.quarters.size(); ++q) names.push_back("quarter " + fit.quarters[q].label());
    for (const auto& c : data_.characteristic_names) names.push_back(c);
    const auto p = static_cast<Eigen::Index>(names.size());

    const std::size_t knots_wanted = std::min(
        config_.max_knots, (n + config_.observations_per_knot - 1) / std::max<std::size_t>(config_.observations_per_knot, 1));
    const std::size_t k = std::min(knots_wanted, distinct_locations(loc));
    if (n <= static_cast<std::size_t>(p) + k) {
        throw DataError("round " + std::to_string(data_.round) + ": " + std::to_string(n) +
                        " observations are too few for " + std::to_string(p + static_cast<Eigen::Index>(k)) +
                        " regression terms");
    }

    MatrixXd x(static_cast<Eigen::Index>(n), p);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        x(r, 0) = 1.0;
        x(r, 1) = loc[i].x;
        x(r, 2) = loc[i].y;
        for (Eigen::Index c = 3; c < p; ++c) x(r, c) = 0.0;
        if (auto it = dummy_of.find(data_.quarter[i].ordinal); it != dummy_of.end()) {
            x(r, 3 + static_cast<Eigen::Index>(it->second)) = 1.0;
        }
        const auto base = 3 + static_cast<Eigen::Index>(dummy_of.size());
        for (std::size_t c = 0; c < data_.characteristics.size(); ++c) {
            x(r, base + static_cast<Eigen::Index>(c)) = data_.characteristics[c][i];
        }
    }
    VectorXd col_scale = VectorXd::Ones(p);
    for (Eigen::Index c = 1; c < p; ++c) {
        const double rms = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(n));
        if (rms > 0.0) {
            col_scale(c) = rms;
            x.col(c) /= rms;
        }
    }
    if (auto bad = first_dependent_column(x)) {
        throw NumericError("round " + std::to_string(data_.round) + ": rank-deficient design at column '" +
                           names[*bad] + "'");
    }

    // Radial basis over knots, reparameterised so the penalty is a ridge.
    surf.knots_ = kmeans_centers(loc, k, config_.kmeans_iterations);
    const auto kk = static_cast<Eigen::Index>(surf.knots_.size());
    MatrixXd omega(kk, kk);
    for (Eigen::Index a = 0; a < kk; ++a) {
        for (Eigen::Index b = 0; b < kk; ++b) omega(a, b) = radial(sq_dist(surf.knots_[a], surf.knots_[b]));
    }
    Eigen::JacobiSVD<MatrixXd> svd(omega, Eigen::ComputeFullV);
    const VectorXd sv = svd.singularValues();
    Eigen::Index kept = 0;
    while (kept < sv.size() && sv(kept) > 1e-10 * sv(0)) ++kept;
    const MatrixXd basis = svd.matrixV().leftCols(kept) * sv.head(kept).cwiseSqrt().cwiseInverse().asDiagonal();

    MatrixXd zk(static_cast<Eigen::Index>(n), kk);
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < kk; ++a) zk(static_cast<Eigen::Index>(i), a) = radial(sq_dist(loc[i], surf.knots_[a]));
    }
    const MatrixXd z = zk * basis;
    const Eigen::Index total = p + kept;

    MatrixXd design(static_cast<Eigen::Index>(n), total);
    design.leftCols(p) = x;
    design.rightCols(kept) = z;

    Eigen::HouseholderQR<MatrixXd> qr(design);
    const MatrixXd r = qr.matrixQR().topRows(total).triangularView<Eigen::Upper>();
    const double rmax = r.diagonal().cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < total; ++c) {
        if (std::abs(r(c, c)) <= 1e-10 * rmax) {
            const std::string what = c < p ? names[static_cast<std::size_t>(c)] : "spline basis " + std::to_string(c - p);
            throw NumericError("round " + std::to_string(data_.round) + ": rank-deficient design at column '" + what + "'");
        }
    }

    // Demmler-Reinsch: R⁻ᵀ D R⁻¹ = U diag(e) Uᵀ with D selecting the radial block.
    MatrixXd selector = MatrixXd::Zero(total, kept);
    selector.bottomRows(kept).setIdentity();
    const MatrixXd g = r.transpose().triangularView<Eigen::Lower>().solve(selector);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g * g.transpose());
    const MatrixXd& u = eig.eigenvectors();
    const VectorXd e = eig.eigenvalues().cwiseMax(0.0);

    const VectorXd y = Eigen::Map<const VectorXd>(data_.y.data(), static_cast<Eigen::Index>(n));
    const VectorXd qty = qr.householderQ().adjoint() * y;
    const VectorXd b = u.transpose() * qty.head(total);
    const double rss_perp = qty.tail(static_cast<Eigen::Index>(n) - total).squaredNorm();
    const double penalty_scale = z.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(kept, 1));
    const double nd = static_cast<double>(n);

    auto evaluate = [&](double lambda, double& rss, double& edf) {
        rss = rss_perp;
        edf = 0.0;
        for (Eigen::Index i = 0; i < total; ++i) {
            const double f = 1.0 / (1.0 + lambda * penalty_scale * e(i));
            edf += f;
            rss += (1.0 - f) * (1.0 - f) * b(i) * b(i);
        }
        return nd * rss / ((nd - edf) * (nd - edf));
    };

    double lambda = 0.0;
    if (config_.fixed_lambda) {
        if (!(*config_.fixed_lambda > 0.0)) throw ConfigError("fixed smoothing parameter must be positive");
        lambda = *config_.fixed_lambda;
        double rss = 0.0, edf = 0.0;
        fit.gcv = evaluate(lambda, rss, edf);
    } else {
        const std::size_t points = std::max<std::size_t>(config_.gcv_points, 2);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < points; ++i) {
            const double log10 = config_.log10_lambda_min +
                                 (config_.log10_lambda_max - config_.log10_lambda_min) * static_cast<double>(i) /
                                     static_cast<double>(points - 1);
            const double candidate = std::pow(10.0, log10);
            double rss = 0.0, edf = 0.0;
            const double score = evaluate(candidate, rss, edf);
            if (score < best) {
                best = score;
                best_idx = i;
                lambda = candidate;
            }
        }
        fit.gcv = best;
        fit.lambda_at_boundary = best_idx == 0 || best_idx + 1 == points;
    }
    fit.lambda = lambda;

    VectorXd shrink(total);
    for (Eigen::Index i = 0; i < total; ++i) shrink(i) = 1.0 / (1.0 + lambda * penalty_scale * e(i));
    fit.edf = shrink.sum();

    // θ = R⁻¹ U diag(f) Uᵀ R⁻ᵀ Cᵀ y.
    const MatrixXd right = r.triangularView<Eigen::Upper>().solve(u * shrink.asDiagonal());
    MatrixXd smoother = right * u.transpose();
    smoother = smoother * r.transpose().triangularView<Eigen::Lower>().solve(MatrixXd::Identity(total, total));
    const VectorXd theta = r.triangularView<Eigen::Upper>().solve(u * shrink.asDiagonal() * b);

    const VectorXd fitted = design * theta;
    fit.fitted.assign(fitted.data(), fitted.data() + n);
    fit.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) fit.residuals[i] = data_.y[i] - fit.fitted[i];

    double mean = 0.0;
    for (double v : data_.y) mean += v;
    mean /= nd;
    double tss = 0.0, rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tss += (data_.y[i] - mean) * (data_.y[i] - mean);
        rss += fit.residuals[i] * fit.residuals[i];
    }
    fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;

    VectorXd coef = theta.head(p).cwiseQuotient(col_scale);
    surf.intercept_ = coef(0);
    surf.slope_x_ = coef(1);
    surf.slope_y_ = coef(2);
    for (std::size_t q = 0; q < dummy_of.size(); ++q) fit.delta.push_back(coef(3 + static_cast<Eigen::Index>(q)));
    for (std::size_t c = 0; c < data_.characteristics.size(); ++c) {
        fit.beta.push_back(coef(3 + static_cast<Eigen::Index>(dummy_of.size() + c)));
    }
    const VectorXd knot_coef = basis * theta.tail(kept);
    surf.knot_coefficients_.assign(knot_coef.data(), knot_coef.data() + kk);

    auto solver = std::make_shared<detail::HedonicSolver>();
    solver->design = std::move(design);
    solver->smoother = std::move(smoother);
    fit.solver = std::move(solver);
    return fit;
}

HedonicFit fit_partial_linear(const HedonicData& data, const HedonicConfig& config) {
    return HedonicFitter(data, config).run();
}

std::vector<double> HedonicFit::refit_residuals(std::span<const double> y_new) const {
    if (!solver) throw NumericError("hedonic fit has no solver state");
    if (y_new.size() != static_cast<std::size_t>(solver->design.rows())) throw DataError("refit response has wrong length");
    const Eigen::Map<const VectorXd> yv(y_new.data(), static_cast<Eigen::Index>(y_new.size()));
    const VectorXd theta = solver->smoother * (solver->design.transpose() * yv);
    const VectorXd res = yv - solver->design * theta;
    return {res.data(), res.data() + res.size()};
}

// ---------------------------------------------------------------------------

WeightedSample LevelEnhancedSample::to_sample(ResidualScale scale) const {
    std::vector<double> values = log_values;
    if (scale == ResidualScale::Exponentiated) {
        for (auto& v : values) v = std::exp(v);
    }
    auto s = WeightedSample::unweighted(std::move(values), round,
                                        scale == ResidualScale::Exponentiated ? SampleKind::Price : SampleKind::Residual);
    return s;
}

LevelEnhancedSample level_enhanced(const HedonicFit& fit, const LogIndex& index, std::span<const double> residuals) {
    if (residuals.size() != fit.obs_quarter.size()) throw DataError("residual count does not match the fit");
    LevelEnhancedSample out;
    out.round = fit.round;
    out.residuals.assign(residuals.begin(), residuals.end());
    out.log_values.resize(residuals.size());
    for (std::size_t k = 0; k < residuals.size(); ++k) {
        const auto level = index.at(fit.obs_quarter[k]);
        if (!level) throw DataError("price index does not cover " + fit.obs_quarter[k].label());
        out.log_values[k] = *level + residuals[k];
    }
    return out;
}

LevelEnhancedSample level_enhanced(const HedonicFit& fit, const LogIndex& index) {
    return level_enhanced(fit, index, fit.residuals);
}

SDTestReport residual_bootstrap_sd(const HedonicFit& target, std::span<const HedonicFit* const> comparisons,
                                   const LogIndex& index, int order, const BootstrapOptions& options,
                                   const DominanceConfig& config, ResidualScale scale) {
    require_replications(options);
    std::vector<const HedonicFit*> fits{&target};
    for (const auto* f : comparisons) {
        if (f == nullptr) throw ConfigError("null hedonic fit");
        fits.push_back(f);
    }
    std::vector<SortedSample> comps;
    for (std::size_t k = 1; k < fits.size(); ++k) comps.emplace_back(level_enhanced(*fits[k], index).to_sample(scale));
    const DominanceStatistic statistic(SortedSample(level_enhanced(target, index).to_sample(scale)), std::move(comps),
                                       order, config);

    const std::size_t B = options.replications;
    std::vector<double> stats(B);
    parallel_for(B, options.threads, [&](std::size_t b) {
        auto rng = stream_for(options.seed, streams::residual_sd, b);
        std::vector<SortedSample> boot;
        boot.reserve(fits.size());
        for (const auto* fit : fits) {
            const std::size_t n = fit->residuals.size();
            std::vector<double> y_b(n);
            for (std::size_t i = 0; i < n; ++i) y_b[i] = fit->fitted[i] + fit->residuals[draw_index(rng, n)];
            std::vector<double> res;
            try {
                res = fit->refit_residuals(y_b);
            } catch (const Error& e) {
                throw NumericError("refit failed in replication " + std::to_string(b) + ": " + e.what());
            }
            auto sample = level_enhanced(*fit, index, res).to_sample(scale);
            boot.emplace_back(std::move(sample.values), std::move(sample.weights), fit->round);
        }
        std::vector<SampleView> views;
        for (std::size_t k = 1; k < boot.size(); ++k) views.push_back({boot[k].values(), boot[k].weights()});
        CurveWorkspace ws;
        const double d = statistic.recentred({boot[0].values(), boot[0].weights()}, views, ws);
        if (!std::isfinite(d)) throw NumericError("non-finite statistic in replication " + std::to_string(b));
        stats[b] = d;
    });
    return make_sd_report(statistic, std::move(stats), options);
}

} // namespace hwd
