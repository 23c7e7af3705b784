#ifndef QLAB_KERNELS_HPP
#define QLAB_KERNELS_HPP

#include <cstddef>

// Hot reductions behind the posterior grids. Every kernel has a scalar
// reference implementation; SIMD variants are selected once at startup from
// CPU capabilities and must agree with the reference (see the equivalence
// tests). Summation order differs between backends, so agreement is up to
// roundoff, never bitwise.
namespace qlab::kernels {

enum class Backend { scalar, avx2, neon };

Backend active_backend();
const char* backend_name();

// sum_i rho_tau(y[i] - location)
double checkloss_sum(const double* y, std::size_t n, double location, double tau);
// sum_i rho_tau(y[i] - location[i])
double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau);
// acc[i] += sum_j rho_tau(y[j] - location[i]): a block of observations played
// against a whole grid of candidate locations.
void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc);
// max element; n == 0 yields -inf. Exact (order-free) on any backend.
double reduce_max(const double* v, std::size_t n);

// log sum_i exp(v[i]), shifted by the max for stability. -inf entries are
// ignored; an all -inf (or empty) input yields -inf.
double log_sum_exp(const double* v, std::size_t n);

namespace scalar {
double checkloss_sum(const double* y, std::size_t n, double location, double tau);
double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau);
void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc);
double reduce_max(const double* v, std::size_t n);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
bool supported();
double checkloss_sum(const double* y, std::size_t n, double location, double tau);
double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau);
void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc);
double reduce_max(const double* v, std::size_t n);
} // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double checkloss_sum(const double* y, std::size_t n, double location, double tau);
double checkloss_sum_at(const double* y, const double* location, std::size_t n, double tau);
void checkloss_accum_block(const double* location, std::size_t n_loc, const double* y,
                           std::size_t n_y, double tau, double* acc);
double reduce_max(const double* v, std::size_t n);
} // namespace neon
#endif

} // namespace qlab::kernels

#endif
