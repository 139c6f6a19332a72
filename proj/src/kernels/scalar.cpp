#include "hwd/kernels.hpp"

#include "kernels_impl.hpp"

#include <limits>

namespace hwd::kernels {

namespace detail {

void evaluate_dominance_scalar(int order, const double* offsets, const double* cum_w, const double* cum_s1,
                               const double* cum_s2, double inv_norm, double* out, std::size_t n) {
    switch (order) {
    case 1:
        for (std::size_t g = 0; g < n; ++g) out[g] = cum_w[g] * inv_norm;
        break;
    case 2:
        for (std::size_t g = 0; g < n; ++g) out[g] = (offsets[g] * cum_w[g] - cum_s1[g]) * inv_norm;
        break;
    default: {
        const double half = 0.5 * inv_norm;
        for (std::size_t g = 0; g < n; ++g) {
            const double p = offsets[g];
            out[g] = ((p * cum_w[g] - 2.0 * cum_s1[g]) * p + cum_s2[g]) * half;
        }
        break;
    }
    }
}

double centered_sup_scalar(const double* a, const double* b, const double* center, double scale,
                           std::size_t n) {
    double best = -std::numeric_limits<double>::infinity();
    if (center == nullptr) {
        for (std::size_t g = 0; g < n; ++g) {
            const double v = (a[g] - b[g]) * scale;
            best = v > best ? v : best;
        }
    } else {
        for (std::size_t g = 0; g < n; ++g) {
            const double v = ((a[g] - b[g]) - center[g]) * scale;
            best = v > best ? v : best;
        }
    }
    return best;
}

void weighted_sums_scalar(const double* w, const double* x, std::size_t n, double* sum_w, double* sum_wx) {
    double sw = 0.0;
    double swx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sw += w[k];
        swx += w[k] * x[k];
    }
    *sum_w = sw;
    *sum_wx = swx;
}

double weighted_centered_sq_scalar(const double* w, const double* x, double center, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = x[k] - center;
        acc += w[k] * d * d;
    }
    return acc;
}

} // namespace detail

const KernelTable& scalar_table() {
    static const KernelTable table{
        detail::evaluate_dominance_scalar,
        detail::centered_sup_scalar,
        detail::weighted_sums_scalar,
        detail::weighted_centered_sq_scalar,
    };
    return table;
}

} // namespace hwd::kernels
