#include "qlab/kernels.hpp"

#include <cmath>
#include <limits>

namespace qlab::kernels {

namespace {

struct Vtable {
    Backend backend;
    double (*checkloss_sum)(const double*, std::size_t, double, double);
    double (*checkloss_sum_at)(const double*, const double*, std::size_t, double);
    void (*checkloss_accum_block)(const double*, std::size_t, const double*, std::size_t, double,
                                  double*);
    double (*reduce_max)(const double*, std::size_t);
};

Vtable pick() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2::supported())
        return {Backend::avx2, &avx2::checkloss_sum, &avx2::checkloss_sum_at,
                &avx2::checkloss_accum_block, &avx2::reduce_max};
#endif
#if defined(__aarch64__)
    return {Backend::neon, &neon::checkloss_sum, &neon::checkloss_sum_at,
            &neon::checkloss_accum_block, &neon::reduce_max};
#endif
    return {Backend::scalar, &scalar::checkloss_sum, &scalar::checkloss_sum_at,
            &scalar::checkloss_accum_block, &scalar::reduce_max};
}

const Vtable& table() {
    static const Vtable t = pick();
    return t;
}

} // namespace

Backend active_backend() { return table().backend; }

const char* backend_name() {
    switch (table().backend) {
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
    default: return "scalar";
    }
}

double checkloss_sum(const double* y, std::size_t n, double location, double tau) {
    return table().checkloss_sum(y, n, location, tau);
}

double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau) {
    return table().checkloss_sum_at(y, location, n, tau);
}

void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc) {
    table().checkloss_accum_block(location, n_loc, y, n_y, tau, acc);
}

double reduce_max(const double* v, std::size_t n) { return table().reduce_max(v, n); }

double log_sum_exp(const double* v, std::size_t n) {
    const double m = reduce_max(v, n);
    if (!std::isfinite(m)) return m > 0 ? m : -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

} // namespace qlab::kernels
