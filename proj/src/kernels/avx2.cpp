// Compiled with -mavx2. Only reached after a run-time CPU check.
// Element-wise kernels deliberately avoid FMA so that they round exactly like
// the scalar reference.

#include "hwd/kernels.hpp"

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <limits>

namespace hwd::kernels {

namespace {

constexpr std::size_t kLanes = 4;

void evaluate_dominance_avx2(int order, const double* offsets, const double* cum_w, const double* cum_s1,
                             const double* cum_s2, double inv_norm, double* out, std::size_t n) {
    const std::size_t body = n - n % kLanes;
    const __m256d inv = _mm256_set1_pd(inv_norm);
    std::size_t g = 0;
    switch (order) {
    case 1:
        for (; g < body; g += kLanes) {
            _mm256_storeu_pd(out + g, _mm256_mul_pd(_mm256_loadu_pd(cum_w + g), inv));
        }
        break;
    case 2:
        for (; g < body; g += kLanes) {
            const __m256d p = _mm256_loadu_pd(offsets + g);
            const __m256d t = _mm256_sub_pd(_mm256_mul_pd(p, _mm256_loadu_pd(cum_w + g)), _mm256_loadu_pd(cum_s1 + g));
            _mm256_storeu_pd(out + g, _mm256_mul_pd(t, inv));
        }
        break;
    default: {
        const __m256d half = _mm256_set1_pd(0.5 * inv_norm);
        const __m256d two = _mm256_set1_pd(2.0);
        for (; g < body; g += kLanes) {
            const __m256d p = _mm256_loadu_pd(offsets + g);
            __m256d t = _mm256_sub_pd(_mm256_mul_pd(p, _mm256_loadu_pd(cum_w + g)),
                                      _mm256_mul_pd(two, _mm256_loadu_pd(cum_s1 + g)));
            t = _mm256_add_pd(_mm256_mul_pd(t, p), _mm256_loadu_pd(cum_s2 + g));
            _mm256_storeu_pd(out + g, _mm256_mul_pd(t, half));
        }
        break;
    }
    }
    if (g < n) {
        detail::evaluate_dominance_scalar(order, offsets + g, cum_w + g, cum_s1 + g, cum_s2 + g, inv_norm,
                                          out + g, n - g);
    }
}

double horizontal_max(__m256d v) {
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, v);
    return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

double horizontal_sum(__m256d v) {
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double centered_sup_avx2(const double* a, const double* b, const double* center, double scale,
                         std::size_t n) {
    const std::size_t body = n - n % kLanes;
    const __m256d s = _mm256_set1_pd(scale);
    __m256d best = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t g = 0;
    if (center == nullptr) {
        for (; g < body; g += kLanes) {
            const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + g), _mm256_loadu_pd(b + g));
            best = _mm256_max_pd(best, _mm256_mul_pd(d, s));
        }
    } else {
        for (; g < body; g += kLanes) {
            const __m256d d = _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(a + g), _mm256_loadu_pd(b + g)),
                                            _mm256_loadu_pd(center + g));
            best = _mm256_max_pd(best, _mm256_mul_pd(d, s));
        }
    }
    double result = horizontal_max(best);
    if (g < n) {
        const double tail = detail::centered_sup_scalar(a + g, b + g, center == nullptr ? nullptr : center + g,
                                                        scale, n - g);
        result = std::max(result, tail);
    }
    return result;
}

void weighted_sums_avx2(const double* w, const double* x, std::size_t n, double* sum_w, double* sum_wx) {
    const std::size_t body = n - n % kLanes;
    __m256d sw = _mm256_setzero_pd();
    __m256d swx = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k < body; k += kLanes) {
        const __m256d wv = _mm256_loadu_pd(w + k);
        sw = _mm256_add_pd(sw, wv);
        swx = _mm256_fmadd_pd(wv, _mm256_loadu_pd(x + k), swx);
    }
    double tail_w = 0.0;
    double tail_wx = 0.0;
    detail::weighted_sums_scalar(w + k, x + k, n - k, &tail_w, &tail_wx);
    *sum_w = horizontal_sum(sw) + tail_w;
    *sum_wx = horizontal_sum(swx) + tail_wx;
}

double weighted_centered_sq_avx2(const double* w, const double* x, double center, std::size_t n) {
    const std::size_t body = n - n % kLanes;
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k < body; k += kLanes) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), c);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + k), d), d, acc);
    }
    return horizontal_sum(acc) + detail::weighted_centered_sq_scalar(w + k, x + k, center, n - k);
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        evaluate_dominance_avx2,
        centered_sup_avx2,
        weighted_sums_avx2,
        weighted_centered_sq_avx2,
    };
    return table;
}

} // namespace hwd::kernels
