#pragma once

// Weighted stochastic-dominance functionals D̂^(s), the max-sup statistic and
// its re-centred bootstrap.
//
// For a sample l with values p_k and weights w_k (Σw = N_l):
//
//   D̂_l^(s)(p) = 1/(N_l (s−1)!) Σ_k (p − p_k)^(s−1) 1(p_k <= p) w_k
//
// and the pair curve is D̂_ji = D̂_j − D̂_i. Round j dominates i at order s
// when the curve is nowhere positive. The statistic for target j against a
// comparison set I is d̂ = max_{i∈I} sup_p √N_ji D̂_ji(p) with
// N_ji = N_j N_i / (N_j + N_i).

#include "hwd/bootstrap.hpp"
#include "hwd/core_model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace hwd {

struct DominanceConfig {
    std::size_t grid_min = 100;
    std::size_t grid_max = 10000;
};

/// Values sorted ascending with their weights.
class SortedSample {
public:
    SortedSample() = default;
    explicit SortedSample(const WeightedSample& sample);
    SortedSample(std::vector<double> values, std::vector<double> weights, int round_id = 0);

    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return values_.size(); }
    double total_weight() const noexcept { return total_weight_; }
    int round_id() const noexcept { return round_id_; }

private:
    std::vector<double> values_;
    std::vector<double> weights_;
    double total_weight_ = 0.0;
    int round_id_ = 0;
};

/// Non-owning (sorted values, weights) pair; weights may contain zeros.
struct SampleView {
    std::span<const double> values;
    std::span<const double> weights;
};

struct DominanceCurve {
    int order = 1;
    std::vector<double> grid;
    std::vector<double> values; // D̂_ji at each grid point
    int j = 0;
    int i = 0;
    std::size_t n_j = 0;
    std::size_t n_i = 0;
};

/// N_ji = N_j N_i / (N_j + N_i).
double effective_size(std::size_t n_j, std::size_t n_i);

/// clamp(round(N_ji), grid_min, grid_max).
std::size_t grid_points(std::size_t n_j, std::size_t n_i, const DominanceConfig& config);

/// Equally spaced points over the joint range of both samples. For order 1
/// the sample values are merged in, where the sup of the step function is attained.
std::vector<double> grid_for(const WeightedSample& j, const WeightedSample& i, int order,
                             const DominanceConfig& config = {});
std::vector<double> grid_for(const SortedSample& j, const SortedSample& i, int order,
                             const DominanceConfig& config = {});

/// Scratch buffers reused across evaluations.
struct CurveWorkspace {
    std::vector<double> cum_w;
    std::vector<double> cum_s1;
    std::vector<double> cum_s2;
    std::vector<double> curve_j;
    std::vector<double> curve_i;
};

/// D̂^(s) of one sample on an ascending grid. `offsets` holds grid − grid[0].
/// The normalisation uses the total weight of the sample.
void evaluate_functional(const SampleView& sample, std::span<const double> grid, std::span<const double> offsets,
                         int order, std::span<double> out, CurveWorkspace& ws);

/// Pair curve D̂_j − D̂_i. Throws DataError for empty samples or order outside 1..3.
DominanceCurve dominance_functional(const WeightedSample& j, const WeightedSample& i, int order,
                                    std::span<const double> grid);

struct SupStatistic {
    double d_hat = 0.0;
    std::vector<double> per_pair; // sup_p √N_ji D̂_ji(p)
};

SupStatistic sup_statistic(std::span<const DominanceCurve> curves);

/// Grids and full-sample curves for a target against its comparison set;
/// computes re-centred bootstrap statistics from resampled data.
class DominanceStatistic {
public:
    DominanceStatistic(SortedSample target, std::vector<SortedSample> comparisons, int order,
                       const DominanceConfig& config = {});

    int order() const noexcept { return order_; }
    const SortedSample& target() const noexcept { return target_; }
    const std::vector<SortedSample>& comparisons() const noexcept { return comparisons_; }
    double d_hat() const noexcept { return d_hat_; }
    const std::vector<double>& per_pair() const noexcept { return per_pair_; }
    std::vector<std::size_t> grid_sizes() const;
    /// Full-sample curve of pair k.
    DominanceCurve curve(std::size_t k) const;

    /// max_i sup_p √N_ji ((D̂^b_j − D̂^b_i)(p) − D̂_ji(p)). Views must be sorted by value.
    double recentred(const SampleView& target, std::span<const SampleView> comparisons, CurveWorkspace& ws) const;

private:
    struct Pair {
        std::vector<double> grid;
        std::vector<double> offsets;
        std::vector<double> curve; // D̂_ji
        double scale = 0.0;        // √N_ji
    };

    int order_;
    SortedSample target_;
    std::vector<SortedSample> comparisons_;
    std::vector<Pair> pairs_;
    std::vector<double> per_pair_;
    double d_hat_ = 0.0;
};

struct SDTestReport {
    int order = 1;
    int target = 0;
    std::vector<int> comparisons;
    double d_hat = 0.0;
    std::vector<double> per_pair;
    double p_value = 0.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    CriticalValues critical; // c(1%) >= c(5%) >= c(10%)
    std::vector<std::size_t> grid_sizes;
    std::vector<double> distribution; // sorted bootstrap statistics

    bool rejects(double level) const { return p_value <= level; }
};

/// p = (1/B) #{d̂^b > d̂}, c(γ) = [(1−γ)B]-th ascending bootstrap statistic.
SDTestReport make_sd_report(const DominanceStatistic& statistic, std::vector<double> bootstrap,
                            const BootstrapOptions& options);

/// H0: the target dominates every comparison sample at order s. Each round is
/// resampled independently per replication (the target once, shared by all
/// pairs); (value, weight) pairs are drawn jointly and the weights renormalised.
SDTestReport sd_test(const WeightedSample& target, std::span<const WeightedSample> comparisons, int order,
                     const BootstrapOptions& options, const DominanceConfig& config = {});

/// "p,value" rows.
void write_curve_csv(const DominanceCurve& curve, std::ostream& out);

} // namespace hwd
