#include "qlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace qlab {

namespace {

// (G7,K15) nodes and weights on [-1,1]; positive abscissae only, the rule is
// symmetric. The first block pairs the Kronrod weights with the Gauss nodes.
constexpr double kGaussNodes[4] = {
    0.0,
    0.405845151377397166906606412076961,
    0.741531185599394439863864773280788,
    0.949107912342758524526189684047851,
};
constexpr double kGaussWeights[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
};
constexpr double kKronrodGaussWeights[4] = {
    0.209482141084727828012999174891714,
    0.190350578064785409913256402421014,
    0.140653259715525918745189590510238,
    0.063092092629978553290700663189204,
};
constexpr double kKronrodNodes[4] = {
    0.207784955007898467600689403773245,
    0.586087235467691130294144838258730,
    0.864864423359769072789712788640926,
    0.991455371120812639206854697526329,
};
constexpr double kKronrodWeights[4] = {
    0.204432940075298892414161999234649,
    0.169004726639267902826583426598550,
    0.104790010322250183839876322541518,
    0.022935322010529224963732008058970,
};

struct PanelResult {
    double k15;
    double err;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);

    const double f0 = f(c);
    double g = f0 * kGaussWeights[0];
    double k = f0 * kKronrodGaussWeights[0];
    for (int i = 1; i < 4; ++i) {
        const double x = h * kGaussNodes[i];
        const double fv = f(c - x) + f(c + x);
        g += fv * kGaussWeights[i];
        k += fv * kKronrodGaussWeights[i];
    }
    for (int i = 0; i < 4; ++i) {
        const double x = h * kKronrodNodes[i];
        k += (f(c - x) + f(c + x)) * kKronrodWeights[i];
    }
    g *= h;
    k *= h;
    return {k, std::abs(k - g)};
}

struct Segment {
    double a, b;
    double value;
    double err;
};

struct SegmentOrder {
    bool operator()(const Segment& lhs, const Segment& rhs) const {
        if (lhs.err != rhs.err) return lhs.err < rhs.err;
        return lhs.a > rhs.a; // total order so refinement is deterministic
    }
};

} // namespace

double kronrod15(const std::function<double(double)>& f, double a, double b) {
    return gk15(f, a, b).k15;
}

PanelEstimate kronrod15_panel(const std::function<double(double)>& f, double a, double b) {
    const auto r = gk15(f, a, b);
    return {r.k15, r.err};
}

IntegralEstimate integrate(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> split_points, const QuadratureOptions& opts) {
    if (!(a < b)) return {0.0, 0.0, 0, true};

    std::vector<double> cuts;
    cuts.push_back(a);
    for (double s : split_points)
        if (s > a && s < b) cuts.push_back(s);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Segment, std::vector<Segment>, SegmentOrder> heap;
    int segments = 0;
    double value = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const auto r = gk15(f, cuts[i], cuts[i + 1]);
        heap.push({cuts[i], cuts[i + 1], r.k15, r.err});
        value += r.k15;
        err += r.err;
        ++segments;
    }

    auto done = [&]() { return err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value)); };

    while (!done() && segments < opts.max_segments) {
        Segment worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(worst.a < mid && mid < worst.b)) break; // roundoff resolution
        heap.pop();
        const auto left = gk15(f, worst.a, mid);
        const auto right = gk15(f, mid, worst.b);
        heap.push({worst.a, mid, left.k15, left.err});
        heap.push({mid, worst.b, right.k15, right.err});
        value += left.k15 + right.k15 - worst.value;
        err += left.err + right.err - worst.err;
        ++segments;
    }

    // Resum in position order: removes the drift of incremental updates and
    // makes the result independent of the heap's internal layout.
    std::vector<Segment> segs;
    segs.reserve(static_cast<std::size_t>(segments));
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(),
              [](const Segment& x, const Segment& y) { return x.a < y.a; });
    value = 0.0;
    err = 0.0;
    for (const auto& s : segs) {
        value += s.value;
        err += s.err;
    }

    IntegralEstimate out;
    out.value = value;
    out.error_bound = err;
    out.segments = segments;
    out.converged = done();
    return out;
}

} // namespace qlab
