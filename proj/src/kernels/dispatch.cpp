#include "hwd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hwd::kernels {

namespace {

Isa detect_best() {
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_supported(Isa::Avx2)) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

Isa initial_isa() {
    if (const char* env = std::getenv("HWD_SIMD")) {
        const std::string value(env);
        if (value == "scalar") return Isa::Scalar;
        if (value == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
    }
    return detect_best();
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (!isa_supported(isa)) {
        throw std::invalid_argument("instruction set '" + std::string(to_string(isa)) + "' not supported");
    }
    current().store(isa, std::memory_order_relaxed);
}

const KernelTable& table_for(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
    if (isa == Isa::Avx2) return avx2_table();
#endif
    (void)isa;
    return scalar_table();
}

const KernelTable& active() { return table_for(active_isa()); }

void evaluate_dominance(int order, std::span<const double> offsets, std::span<const double> cum_w,
                        std::span<const double> cum_s1, std::span<const double> cum_s2, double inv_norm,
                        std::span<double> out) {
    active().evaluate_dominance(order, offsets.data(), cum_w.data(), cum_s1.data(), cum_s2.data(), inv_norm,
                                out.data(), out.size());
}

double centered_sup(std::span<const double> a, std::span<const double> b, std::span<const double> center,
                    double scale) {
    return active().centered_sup(a.data(), b.data(), center.empty() ? nullptr : center.data(), scale, a.size());
}

WeightedSums weighted_sums(std::span<const double> w, std::span<const double> x) {
    WeightedSums out;
    active().weighted_sums(w.data(), x.data(), w.size(), &out.sum_w, &out.sum_wx);
    return out;
}

double weighted_centered_sq(std::span<const double> w, std::span<const double> x, double center) {
    return active().weighted_centered_sq(w.data(), x.data(), center, w.size());
}

} // namespace hwd::kernels
