#pragma once

#include <cstddef>

namespace hwd::kernels::detail {

// Scalar kernels, also used for the tails of the vector loops.
void evaluate_dominance_scalar(int order, const double* offsets, const double* cum_w, const double* cum_s1,
                               const double* cum_s2, double inv_norm, double* out, std::size_t n);
double centered_sup_scalar(const double* a, const double* b, const double* center, double scale,
                           std::size_t n);
void weighted_sums_scalar(const double* w, const double* x, std::size_t n, double* sum_w, double* sum_wx);
double weighted_centered_sq_scalar(const double* w, const double* x, double center, std::size_t n);

} // namespace hwd::kernels::detail
