#ifndef QLAB_QUADRATURE_HPP
#define QLAB_QUADRATURE_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace qlab {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    int max_segments = 4000;
};

struct IntegralEstimate {
    double value = 0.0;
    double error_bound = 0.0;
    int segments = 0;
    bool converged = false;
};

// Raised when an integral cannot be resolved within the subdivision budget or
// when an expectation looks divergent; carries the partial estimate.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double partial, double error_bound)
        : std::runtime_error(what), partial_(partial), error_bound_(error_bound) {}
    double partial() const { return partial_; }
    double error_bound() const { return error_bound_; }

private:
    double partial_;
    double error_bound_;
};

// Adaptive Gauss-Kronrod (G7,K15) on [a,b]. Initial panels are split at the
// given interior points so that integrand kinks sit on panel boundaries and
// the K15-G7 error estimate stays meaningful. Fully deterministic: the
// refinement order is a total order on (error, position).
IntegralEstimate integrate(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> split_points, const QuadratureOptions& opts);

inline IntegralEstimate integrate(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureOptions& opts = {}) {
    return integrate(f, a, b, std::span<const double>{}, opts);
}

// Single non-adaptive K15 panel; used for cheap strip probes.
double kronrod15(const std::function<double(double)>& f, double a, double b);

struct PanelEstimate {
    double value;
    double error; // |K15 - G7|
};

PanelEstimate kronrod15_panel(const std::function<double(double)>& f, double a, double b);

} // namespace qlab

#endif
