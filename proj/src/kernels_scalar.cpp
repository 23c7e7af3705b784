#include "qlab/kernels.hpp"

#include <limits>

namespace qlab::kernels::scalar {

double checkloss_sum(const double* y, std::size_t n, double location, double tau) {
    const double below = tau - 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = y[i] - location;
        acc += u * (u > 0.0 ? tau : below);
    }
    return acc;
}

double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau) {
    const double below = tau - 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = y[i] - location[i];
        acc += u * (u > 0.0 ? tau : below);
    }
    return acc;
}

void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc) {
    const double below = tau - 1.0;
    for (std::size_t i = 0; i < n_loc; ++i) {
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
    for (std::size_t i = 0; i < n; ++i)
        if (v[i] > m) m = v[i];
    return m;
}

} // namespace qlab::kernels::scalar
