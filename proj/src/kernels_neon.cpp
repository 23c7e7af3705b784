#if defined(__aarch64__)

#include "qlab/kernels.hpp"

#include <arm_neon.h>
#include <limits>

namespace qlab::kernels::neon {

double checkloss_sum(const double* y, std::size_t n, double location, double tau) {
    const float64x2_t vloc = vdupq_n_f64(location);
    const float64x2_t vtau = vdupq_n_f64(tau);
    const float64x2_t vbelow = vdupq_n_f64(tau - 1.0);
    const float64x2_t vzero = vdupq_n_f64(0.0);

    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float64x2_t u0 = vsubq_f64(vld1q_f64(y + i), vloc);
        float64x2_t u1 = vsubq_f64(vld1q_f64(y + i + 2), vloc);
        float64x2_t c0 = vbslq_f64(vcgtq_f64(u0, vzero), vtau, vbelow);
        float64x2_t c1 = vbslq_f64(vcgtq_f64(u1, vzero), vtau, vbelow);
        acc0 = vfmaq_f64(acc0, u0, c0);
        acc1 = vfmaq_f64(acc1, u1, c1);
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    const double below = tau - 1.0;
    for (; i < n; ++i) {
        const double u = y[i] - location;
        acc += u * (u > 0.0 ? tau : below);
    }
    return acc;
}

double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau) {
    const float64x2_t vtau = vdupq_n_f64(tau);
    const float64x2_t vbelow = vdupq_n_f64(tau - 1.0);
    const float64x2_t vzero = vdupq_n_f64(0.0);

    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float64x2_t u0 = vsubq_f64(vld1q_f64(y + i), vld1q_f64(location + i));
        float64x2_t u1 = vsubq_f64(vld1q_f64(y + i + 2), vld1q_f64(location + i + 2));
        float64x2_t c0 = vbslq_f64(vcgtq_f64(u0, vzero), vtau, vbelow);
        float64x2_t c1 = vbslq_f64(vcgtq_f64(u1, vzero), vtau, vbelow);
        acc0 = vfmaq_f64(acc0, u0, c0);
        acc1 = vfmaq_f64(acc1, u1, c1);
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    const double below = tau - 1.0;
    for (; i < n; ++i) {
        const double u = y[i] - location[i];
        acc += u * (u > 0.0 ? tau : below);
    }
    return acc;
}

void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc) {
    const float64x2_t vtau = vdupq_n_f64(tau);
    const float64x2_t vbelow = vdupq_n_f64(tau - 1.0);
    const float64x2_t vzero = vdupq_n_f64(0.0);
    const double below = tau - 1.0;

    std::size_t i = 0;
    for (; i + 2 <= n_loc; i += 2) {
        const float64x2_t t = vld1q_f64(location + i);
        float64x2_t s = vdupq_n_f64(0.0);
        for (std::size_t j = 0; j < n_y; ++j) {
            const float64x2_t u = vsubq_f64(vdupq_n_f64(y[j]), t);
            const float64x2_t c = vbslq_f64(vcgtq_f64(u, vzero), vtau, vbelow);
            s = vfmaq_f64(s, u, c);
        }
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), s));
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
    if (n >= 2) {
        float64x2_t vm = vld1q_f64(v);
        for (i = 2; i + 2 <= n; i += 2)
            vm = vmaxq_f64(vm, vld1q_f64(v + i));
        const double lane = vmaxvq_f64(vm);
        if (lane > m) m = lane;
    }
    for (; i < n; ++i)
        if (v[i] > m) m = v[i];
    return m;
}

} // namespace qlab::kernels::neon

#endif
