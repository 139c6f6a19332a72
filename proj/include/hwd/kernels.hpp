#pragma once

// Data-parallel inner loops of the bootstrap core. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant selected at run
// time. Element-wise kernels produce bit-identical results in both variants;
// reductions over sums differ only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace hwd::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
    void (*evaluate_dominance)(int order, const double* offsets, const double* cum_w, const double* cum_s1,
                               const double* cum_s2, double inv_norm, double* out, std::size_t n);
    double (*centered_sup)(const double* a, const double* b, const double* center, double scale,
                           std::size_t n);
    void (*weighted_sums)(const double* w, const double* x, std::size_t n, double* sum_w, double* sum_wx);
    double (*weighted_centered_sq)(const double* w, const double* x, double center, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool isa_supported(Isa isa);
/// The ISA in use. Defaults to the best supported one; HWD_SIMD=scalar|avx2
/// overrides at first use.
Isa active_isa();
/// Throws std::invalid_argument if the ISA is not supported on this CPU.
void set_isa(Isa isa);
const KernelTable& table_for(Isa isa);
const KernelTable& active();

// Convenience wrappers over the active table -------------------------------

/// Dominance functional of order 1..3 from cumulative moments taken at each
/// grid point: cum_w = Σw, cum_s1 = Σw·δ, cum_s2 = Σw·δ² over observations
/// at or below the point, δ and offsets measured from a common origin.
///   order 1: cum_w · inv_norm
///   order 2: (offset·cum_w − cum_s1) · inv_norm
///   order 3: ((offset·cum_w − 2·cum_s1)·offset + cum_s2) · inv_norm / 2
void evaluate_dominance(int order, std::span<const double> offsets, std::span<const double> cum_w,
                        std::span<const double> cum_s1, std::span<const double> cum_s2, double inv_norm,
                        std::span<double> out);

/// max over g of scale·((a[g] − b[g]) − center[g]); empty center means zero.
double centered_sup(std::span<const double> a, std::span<const double> b, std::span<const double> center,
                    double scale);

struct WeightedSums {
    double sum_w = 0.0;
    double sum_wx = 0.0;
};
WeightedSums weighted_sums(std::span<const double> w, std::span<const double> x);

/// Σ w·(x − center)².
double weighted_centered_sq(std::span<const double> w, std::span<const double> x, double center);

} // namespace hwd::kernels
