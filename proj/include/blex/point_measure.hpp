#pragma once

// Finite point measures on the punctured extended line and the piecewise
// linear test functions they are evaluated against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace blex {

// Nonnegative, continuous, piecewise linear; constant left of the first knot
// and right of the last. A "hole" around the origin (g == 0 on (-delta,delta))
// is expressed through the knots themselves.
struct TestFunction {
    std::vector<double> xs; // strictly increasing knot positions
    std::vector<double> ys; // values at the knots

    void validate() const {
        if (xs.empty() || xs.size() != ys.size())
            throw std::invalid_argument("test function: need matching, nonempty knot arrays");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i])) throw std::invalid_argument("test function: knots must be finite");
            if (i > 0 && !(xs[i] > xs[i - 1]))
                throw std::invalid_argument("test function: knots must be strictly increasing");
            if (!(ys[i] >= 0.0) || !std::isfinite(ys[i]))
                throw std::invalid_argument("test function: values must be finite and >= 0");
        }
    }

    double operator()(double x) const {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t hi = std::size_t(it - xs.begin());
        const double w = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
        return ys[hi - 1] + w * (ys[hi] - ys[hi - 1]);
    }

    double max_value() const { return *std::max_element(ys.begin(), ys.end()); }

    // Largest x with g == 0 on (-inf, x]; -inf if g(x) > 0 already at the left end.
    double support_lower() const {
        if (ys.front() > 0.0) return -std::numeric_limits<double>::infinity();
        std::size_t i = 0;
        while (i + 1 < ys.size() && ys[i + 1] == 0.0) ++i;
        return xs[i];
    }

    // Smallest x with g == 0 on [x, inf); +inf if the right plateau is positive.
    double support_upper() const {
        if (ys.back() > 0.0) return std::numeric_limits<double>::infinity();
        std::size_t i = ys.size() - 1;
        while (i > 0 && ys[i - 1] == 0.0) --i;
        return xs[i];
    }

    // Distance from the origin to the nearest point where g > 0; +inf when
    // g vanishes identically. Positive iff g has a genuine hole around 0.
    double hole_radius() const {
        const double inf = std::numeric_limits<double>::infinity();
        double best = inf;
        auto piece = [&](double a, double b, double ya, double yb) {
            if (ya == 0.0 && yb == 0.0) return; // linear, so identically zero here
            const double d = (a <= 0.0 && 0.0 <= b) ? 0.0 : std::min(std::fabs(a), std::fabs(b));
            best = std::min(best, d);
        };
        piece(-inf, xs.front(), ys.front(), ys.front());
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) piece(xs[i], xs[i + 1], ys[i], ys[i + 1]);
        piece(xs.back(), inf, ys.back(), ys.back());
        return best;
    }

    // 0 outside [a,d], rises a->b, holds `height` on [b,c], falls c->d.
    static TestFunction trapezoid(double a, double b, double c, double d, double height = 1.0) {
        TestFunction g{{a, b, c, d}, {0.0, height, height, 0.0}};
        g.validate();
        return g;
    }

    // 0 on (-inf,a], linear a->b, constant `height` on [b,inf).
    static TestFunction ramp_up(double a, double b, double height = 1.0) {
        TestFunction g{{a, b}, {0.0, height}};
        g.validate();
        return g;
    }
};

struct PointMeasure {
    struct Atom {
        double x = 0.0;    // location, never exactly 0
        double mult = 1.0; // positive integer, stored as double (exact below 2^53)
    };

    std::vector<Atom> atoms;

    static constexpr double kZeroPerturb = 1e-300;

    // Locations of exactly 0 are perturbed to +-1e-300 keeping the sign bit;
    // the measures in this library never legitimately charge the origin.
    void add(double x, double mult = 1.0) {
        if (mult <= 0.0) throw std::invalid_argument("point measure: multiplicity must be positive");
        if (x == 0.0) x = std::signbit(x) ? -kZeroPerturb : kZeroPerturb;
        atoms.push_back({x, mult});
    }

    // Sort descending by location and merge equal locations.
    void normalize() {
        std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x > b.x; });
        std::size_t out = 0;
        for (std::size_t i = 0; i < atoms.size();) {
            std::size_t j = i;
            double mult = 0.0;
            while (j < atoms.size() && atoms[j].x == atoms[i].x) mult += atoms[j++].mult;
            atoms[out++] = {atoms[i].x, mult};
            i = j;
        }
        atoms.resize(out);
    }

    double total_mass() const {
        double m = 0.0;
        for (const auto& atom : atoms) m += atom.mult;
        return m;
    }

    // <g, N> = sum_j mult_j g(x_j)
    double integrate(const TestFunction& g) const {
        double acc = 0.0;
        for (const auto& atom : atoms) acc += atom.mult * g(atom.x);
        return acc;
    }

    // The n largest locations counted with multiplicity, nonincreasing,
    // padded with -inf once the measure is exhausted.
    std::vector<double> order_statistics(std::size_t n) const {
        std::vector<Atom> sorted = atoms;
        std::sort(sorted.begin(), sorted.end(), [](const Atom& a, const Atom& b) { return a.x > b.x; });
        std::vector<double> out(n, -std::numeric_limits<double>::infinity());
        std::size_t filled = 0;
        for (const auto& atom : sorted) {
            if (filled == n) break;
            const std::size_t copies = std::size_t(std::min(atom.mult, double(n - filled)));
            for (std::size_t c = 0; c < copies && filled < n; ++c) out[filled++] = atom.x;
        }
        return out;
    }

    double max_position() const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& atom : atoms) best = std::max(best, atom.x);
        return best;
    }
};

} // namespace blex
