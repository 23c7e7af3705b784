#ifndef QLAB_TAU_HPP
#define QLAB_TAU_HPP

#include <cmath>
#include <stdexcept>

namespace qlab {

// Quantile level, restricted to the open interval (0,1).
class TauLevel {
public:
    explicit TauLevel(double tau) : tau_(tau) {
        if (!(tau > 0.0 && tau < 1.0))
            throw std::invalid_argument("TauLevel: tau must lie in (0,1)");
    }

    double value() const { return tau_; }
    // min{tau, 1-tau}, the slope of the cheap side of the check loss.
    double min_side() const { return tau_ < 0.5 ? tau_ : 1.0 - tau_; }

private:
    double tau_;
};

} // namespace qlab

#endif
