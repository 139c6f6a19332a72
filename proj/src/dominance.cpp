#include "hwd/dominance.hpp"

#include "hwd/error.hpp"
#include "hwd/kernels.hpp"
#include "hwd/parallel.hpp"
#include "hwd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace hwd {

namespace {

void require_order(int order) {
    if (order < 1 || order > 3) throw ConfigError("dominance order must be 1, 2 or 3, got " + std::to_string(order));
}


std::vector<double> equally_spaced(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t g = 0; g < count; ++g) out[g] = lo + step * static_cast<double>(g);
    out.back() = hi;
    return out;
}

std::vector<double> offsets_of(std::span<const double> grid) {
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] = grid[g] - grid.front();
    return out;
}

SampleView view(const SortedSample& s) { return {s.values(), s.weights()}; }

} // namespace

// ---------------------------------------------------------------------------

SortedSample::SortedSample(const WeightedSample& sample)
    : SortedSample(sample.values, sample.weights, sample.round_id) {}

SortedSample::SortedSample(std::vector<double> values, std::vector<double> weights, int round_id)
    : round_id_(round_id) {
    if (values.size() != weights.size()) throw DataError("values and weights differ in length");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && weights[a] < weights[b]);
    });
    values_.reserve(values.size());
    weights_.reserve(values.size());
    for (auto k : order) {
        values_.push_back(values[k]);
        weights_.push_back(weights[k]);
        total_weight_ += weights[k];
    }
}

double effective_size(std::size_t n_j, std::size_t n_i) {
    const double a = static_cast<double>(n_j);
    const double b = static_cast<double>(n_i);
    return a * b / (a + b);
}

std::size_t grid_points(std::size_t n_j, std::size_t n_i, const DominanceConfig& config) {
    if (config.grid_min == 0 || config.grid_min > config.grid_max) {
        throw ConfigError("grid clamps must satisfy 0 < grid_min <= grid_max");
    }
    const auto target = static_cast<std::size_t>(std::llround(effective_size(n_j, n_i)));
    return std::clamp(target, config.grid_min, config.grid_max);
}

std::vector<double> grid_for(const SortedSample& j, const SortedSample& i, int order, const DominanceConfig& config) {
    require_order(order);
    if (j.size() == 0 || i.size() == 0) throw DataError("dominance grid needs non-empty samples");
    const double lo = std::min(j.values().front(), i.values().front());
    const double hi = std::max(j.values().back(), i.values().back());
    auto grid = equally_spaced(lo, hi, grid_points(j.size(), i.size(), config));
    if (order == 1) {
        grid.insert(grid.end(), j.values().begin(), j.values().end());
        grid.insert(grid.end(), i.values().begin(), i.values().end());
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }
    return grid;
}

std::vector<double> grid_for(const WeightedSample& j, const WeightedSample& i, int order,
                             const DominanceConfig& config) {
    return grid_for(SortedSample(j), SortedSample(i), order, config);
}

void evaluate_functional(const SampleView& sample, std::span<const double> grid, std::span<const double> offsets,
                         int order, std::span<double> out, CurveWorkspace& ws) {
    const std::size_t n_grid = grid.size();
    ws.cum_w.resize(n_grid);
    ws.cum_s1.resize(n_grid);
    ws.cum_s2.resize(n_grid);

    const double origin = grid.empty() ? 0.0 : grid.front();
    const auto values = sample.values;
    const auto weights = sample.weights;
    double total = 0.0;
    double w = 0.0, s1 = 0.0, s2 = 0.0;
    std::size_t k = 0;
    for (std::size_t g = 0; g < n_grid; ++g) {
        const double p = grid[g];
        for (; k < values.size() && values[k] <= p; ++k) {
            const double wk = weights[k];
            if (wk == 0.0) continue;
            const double d = values[k] - origin;
            w += wk;
            s1 += wk * d;
            s2 += wk * d * d;
        }
        ws.cum_w[g] = w;
        ws.cum_s1[g] = s1;
        ws.cum_s2[g] = s2;
    }
    total = w;
    for (; k < values.size(); ++k) total += weights[k];
    if (!(total > 0.0)) throw NumericError("dominance functional of a sample with zero total weight");

    // The kernel applies the 1/(s−1)! factor itself.
    kernels::evaluate_dominance(order, offsets, ws.cum_w, ws.cum_s1, ws.cum_s2, 1.0 / total, out);
}

DominanceCurve dominance_functional(const WeightedSample& j, const WeightedSample& i, int order,
                                    std::span<const double> grid) {
    require_order(order);
    if (j.empty() || i.empty()) throw DataError("dominance functional of an empty sample");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("dominance grid must be ascending");
    const SortedSample sj(j);
    const SortedSample si(i);
    const auto offsets = offsets_of(grid);

    DominanceCurve curve;
    curve.order = order;
    curve.grid.assign(grid.begin(), grid.end());
    curve.j = j.round_id;
    curve.i = i.round_id;
    curve.n_j = j.size();
    curve.n_i = i.size();
    curve.values.resize(grid.size());

    CurveWorkspace ws;
    ws.curve_i.resize(grid.size());
    evaluate_functional(view(sj), grid, offsets, order, curve.values, ws);
    evaluate_functional(view(si), grid, offsets, order, ws.curve_i, ws);
    for (std::size_t g = 0; g < grid.size(); ++g) curve.values[g] -= ws.curve_i[g];
    return curve;
}

SupStatistic sup_statistic(std::span<const DominanceCurve> curves) {
    SupStatistic out;
    out.d_hat = -std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
        if (!curves.empty() && c.order != curves.front().order) throw ConfigError("curves of mixed order");
        const double scale = std::sqrt(effective_size(c.n_j, c.n_i));
        const double sup = kernels::centered_sup(c.values, std::vector<double>(c.values.size(), 0.0), {}, scale);
        out.per_pair.push_back(sup);
        out.d_hat = std::max(out.d_hat, sup);
    }
    return out;
}

// ---------------------------------------------------------------------------

DominanceStatistic::DominanceStatistic(SortedSample target, std::vector<SortedSample> comparisons, int order,
                                       const DominanceConfig& config)
    : order_(order), target_(std::move(target)), comparisons_(std::move(comparisons)) {
    require_order(order);
    if (comparisons_.empty()) throw ConfigError("dominance test needs at least one comparison sample");
    if (target_.size() == 0) throw DataError("no observations in round " + std::to_string(target_.round_id()));
    CurveWorkspace ws;
    d_hat_ = -std::numeric_limits<double>::infinity();
    for (const auto& comp : comparisons_) {
        if (comp.size() == 0) throw DataError("no observations in round " + std::to_string(comp.round_id()));
        Pair pair;
        pair.grid = grid_for(target_, comp, order, config);
        pair.offsets = offsets_of(pair.grid);
        pair.scale = std::sqrt(effective_size(target_.size(), comp.size()));
        pair.curve.resize(pair.grid.size());
        ws.curve_i.resize(pair.grid.size());
        evaluate_functional(view(target_), pair.grid, pair.offsets, order, pair.curve, ws);
        evaluate_functional(view(comp), pair.grid, pair.offsets, order, ws.curve_i, ws);
        for (std::size_t g = 0; g < pair.grid.size(); ++g) pair.curve[g] -= ws.curve_i[g];
        const double sup = kernels::centered_sup(pair.curve, std::vector<double>(pair.curve.size(), 0.0), {},
                                                 pair.scale);
        per_pair_.push_back(sup);
        d_hat_ = std::max(d_hat_, sup);
        pairs_.push_back(std::move(pair));
    }
}

std::vector<std::size_t> DominanceStatistic::grid_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& p : pairs_) out.push_back(p.grid.size());
    return out;
}

DominanceCurve DominanceStatistic::curve(std::size_t k) const {
    const auto& p = pairs_.at(k);
    DominanceCurve c;
    c.order = order_;
    c.grid = p.grid;
    c.values = p.curve;
    c.j = target_.round_id();
    c.i = comparisons_[k].round_id();
    c.n_j = target_.size();
    c.n_i = comparisons_[k].size();
    return c;
}

double DominanceStatistic::recentred(const SampleView& target, std::span<const SampleView> comparisons,
                                     CurveWorkspace& ws) const {
    if (comparisons.size() != pairs_.size()) throw ConfigError("bootstrap comparison count mismatch");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
        const auto& pair = pairs_[k];
        ws.curve_j.resize(pair.grid.size());
        ws.curve_i.resize(pair.grid.size());
        evaluate_functional(target, pair.grid, pair.offsets, order_, ws.curve_j, ws);
        evaluate_functional(comparisons[k], pair.grid, pair.offsets, order_, ws.curve_i, ws);
        best = std::max(best, kernels::centered_sup(ws.curve_j, ws.curve_i, pair.curve, pair.scale));
    }
    return best;
}

SDTestReport make_sd_report(const DominanceStatistic& statistic, std::vector<double> bootstrap,
                            const BootstrapOptions& options) {
    SDTestReport report;
    report.order = statistic.order();
    report.target = statistic.target().round_id();
    for (const auto& c : statistic.comparisons()) report.comparisons.push_back(c.round_id());
    report.d_hat = statistic.d_hat();
    report.per_pair = statistic.per_pair();
    report.replications = bootstrap.size();
    report.seed = options.seed;
    report.grid_sizes = statistic.grid_sizes();

    const auto above = std::count_if(bootstrap.begin(), bootstrap.end(), [&](double d) { return d > report.d_hat; });
    report.p_value = static_cast<double>(above) / static_cast<double>(bootstrap.size());
    std::sort(bootstrap.begin(), bootstrap.end());
    const double b = static_cast<double>(bootstrap.size());
    report.critical.at_1 = order_statistic(bootstrap, 0.99 * b);
    report.critical.at_5 = order_statistic(bootstrap, 0.95 * b);
    report.critical.at_10 = order_statistic(bootstrap, 0.90 * b);
    report.distribution = std::move(bootstrap);
    return report;
}

SDTestReport sd_test(const WeightedSample& target, std::span<const WeightedSample> comparisons, int order,
                     const BootstrapOptions& options, const DominanceConfig& config) {
    require_replications(options);
    require_valid(target);
    std::vector<SortedSample> comps;
    for (const auto& c : comparisons) {
        require_valid(c);
        comps.emplace_back(c);
    }
    const DominanceStatistic statistic(SortedSample(target), std::move(comps), order, config);

    const std::size_t B = options.replications;
    std::vector<double> stats(B);
    parallel_for(B, options.threads, [&](std::size_t b) {
        auto rng = stream_for(options.seed, streams::sd_test, b);
        std::vector<std::uint32_t> counts;
        auto resample = [&](const SortedSample& s) {
            draw_counts(rng, s.size(), counts);
            std::vector<double> e(s.size());
            const auto w = s.weights();
            for (std::size_t k = 0; k < e.size(); ++k) e[k] = static_cast<double>(counts[k]) * w[k];
            return e;
        };
        const auto e_target = resample(statistic.target());
        std::vector<std::vector<double>> e_comps;
        e_comps.reserve(statistic.comparisons().size());
        for (const auto& c : statistic.comparisons()) e_comps.push_back(resample(c));

        std::vector<SampleView> views;
        for (std::size_t k = 0; k < e_comps.size(); ++k) {
            views.push_back({statistic.comparisons()[k].values(), e_comps[k]});
        }
        CurveWorkspace ws;
        stats[b] = statistic.recentred({statistic.target().values(), e_target}, views, ws);
    });
    return make_sd_report(statistic, std::move(stats), options);
}

void write_curve_csv(const DominanceCurve& curve, std::ostream& out) {
    out << "p,value\n";
    char buf[80];
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.grid[g], curve.values[g]);
        out << buf;
    }
}

} // namespace hwd
