#if defined(__x86_64__) || defined(_M_X64)

#include "qlab/kernels.hpp"

#include <immintrin.h>
#include <limits>

namespace qlab::kernels::avx2 {

bool supported() {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

} // namespace

double checkloss_sum(const double* y, std::size_t n, double location, double tau) {
    const __m256d vloc = _mm256_set1_pd(location);
    const __m256d vtau = _mm256_set1_pd(tau);
    const __m256d vbelow = _mm256_set1_pd(tau - 1.0);
    const __m256d vzero = _mm256_setzero_pd();

    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d u0 = _mm256_sub_pd(_mm256_loadu_pd(y + i), vloc);
        __m256d u1 = _mm256_sub_pd(_mm256_loadu_pd(y + i + 4), vloc);
        __m256d c0 = _mm256_blendv_pd(vbelow, vtau, _mm256_cmp_pd(u0, vzero, _CMP_GT_OQ));
        __m256d c1 = _mm256_blendv_pd(vbelow, vtau, _mm256_cmp_pd(u1, vzero, _CMP_GT_OQ));
        acc0 = _mm256_fmadd_pd(u0, c0, acc0);
        acc1 = _mm256_fmadd_pd(u1, c1, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    const double below = tau - 1.0;
    for (; i < n; ++i) {
        const double u = y[i] - location;
        acc += u * (u > 0.0 ? tau : below);
    }
    return acc;
}

double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau) {
    const __m256d vtau = _mm256_set1_pd(tau);
    const __m256d vbelow = _mm256_set1_pd(tau - 1.0);
    const __m256d vzero = _mm256_setzero_pd();

    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d u0 = _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(location + i));
        __m256d u1 = _mm256_sub_pd(_mm256_loadu_pd(y + i + 4), _mm256_loadu_pd(location + i + 4));
        __m256d c0 = _mm256_blendv_pd(vbelow, vtau, _mm256_cmp_pd(u0, vzero, _CMP_GT_OQ));
        __m256d c1 = _mm256_blendv_pd(vbelow, vtau, _mm256_cmp_pd(u1, vzero, _CMP_GT_OQ));
        acc0 = _mm256_fmadd_pd(u0, c0, acc0);
        acc1 = _mm256_fmadd_pd(u1, c1, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    const double below = tau - 1.0;
    for (; i < n; ++i) {
        const double u = y[i] - location[i];
        acc += u * (u > 0.0 ? tau : below);
    }
    return acc;
}

void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc) {
    const __m256d vtau = _mm256_set1_pd(tau);
    const __m256d vbelow = _mm256_set1_pd(tau - 1.0);
    const __m256d vzero = _mm256_setzero_pd();
    const double below = tau - 1.0;

    std::size_t i = 0;
    for (; i + 4 <= n_loc; i += 4) {
        const __m256d t = _mm256_loadu_pd(location + i);
        __m256d s = _mm256_setzero_pd();
        for (std::size_t j = 0; j < n_y; ++j) {
            const __m256d u = _mm256_sub_pd(_mm256_set1_pd(y[j]), t);
            const __m256d c = _mm256_blendv_pd(vbelow, vtau, _mm256_cmp_pd(u, vzero, _CMP_GT_OQ));
            s = _mm256_fmadd_pd(u, c, s);
        }
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), s));
    }
    for (; i < n_loc; ++i) {
        const double t = location[i];
        double s = 0.0;
        for (std::size_t j = 0; j < n_y; ++j) {
            const double u = y[j] - t;
            s += u * (u > 0.0 ? tau : below);
        }
        acc[i] += s;
    }
}

double reduce_max(const double* v, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(v);
        for (i = 4; i + 4 <= n; i += 4)
            vm = _mm256_max_pd(vm, _mm256_loadu_pd(v + i));
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, vm);
        for (double x : lanes)
            if (x > m) m = x;
    }
    for (; i < n; ++i)
        if (v[i] > m) m = v[i];
    return m;
}

} // namespace qlab::kernels::avx2

#endif
