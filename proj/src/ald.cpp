#include "qlab/ald.hpp"

#include <cmath>
#include <stdexcept>

#include "qlab/rng.hpp"

namespace qlab {

double ald_cdf(double y, const AldModel& model) {
    const double t = model.tau.value();
    const double u = y - model.location;
    if (u <= 0.0) return t * std::exp((1.0 - t) * u);
    return 1.0 - (1.0 - t) * std::exp(-t * u);
}

double ald_quantile(double u, const AldModel& model) {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("ald_quantile: u must lie in (0,1)");
    const double t = model.tau.value();
    if (u <= t) return model.location + std::log(u / t) / (1.0 - t);
    return model.location - std::log((1.0 - u) / (1.0 - t)) / t;
}

std::vector<double> ald_sample(const AldModel& model, std::uint64_t seed, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(ald_quantile(rng.uniform01(), model));
    return out;
}

} // namespace qlab
