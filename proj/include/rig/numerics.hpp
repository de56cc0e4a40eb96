#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace rig {

// Uniform time grid on [0, horizon] with n_nodes samples (n_nodes - 1 intervals).
struct TimeGrid {
    double horizon = 0.0;
    std::size_t n_nodes = 0;

    TimeGrid() = default;
    TimeGrid(double horizon_, std::size_t n_nodes_) : horizon(horizon_), n_nodes(n_nodes_) {
        if (horizon <= 0.0 || n_nodes < 2)
            throw std::invalid_argument("TimeGrid: need horizon > 0 and at least 2 nodes");
    }

    double dt() const { return horizon / static_cast<double>(n_nodes - 1); }
    double t(std::size_t j) const { return dt() * static_cast<double>(j); }

    std::vector<double> times() const {
        std::vector<double> out(n_nodes);
        for (std::size_t j = 0; j < n_nodes; ++j) out[j] = t(j);
        out.back() = horizon;
        return out;
    }

    // Linear interpolation of a table sampled on this grid.
    double interpolate(const std::vector<double>& table, double time) const {
        if (table.size() != n_nodes) throw std::invalid_argument("interpolate: table/grid mismatch");
        if (time < 0.0 || time > horizon * (1.0 + 1e-12))
            throw std::domain_error("interpolate: time outside [0, horizon]");
        if (time >= horizon) return table.back();
        const double x = time / dt();
        const std::size_t j = static_cast<std::size_t>(x);
        const double w = x - static_cast<double>(j);
        return table[j] * (1.0 - w) + table[j + 1] * w;
    }
};

// Composite Simpson over [lo, hi] with n_intervals subintervals (midpoint refinement
// is applied per subinterval, so n_intervals need not be even).
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      std::size_t n_intervals) {
    if (n_intervals == 0) throw std::invalid_argument("simpson: zero intervals");
    if (hi == lo) return 0.0;
    const double h = (hi - lo) / static_cast<double>(n_intervals);
    double acc = 0.0;
    for (std::size_t j = 0; j < n_intervals; ++j) {
        const double a = lo + h * static_cast<double>(j);
        const double b = (j + 1 == n_intervals) ? hi : a + h;
        acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    return acc;
}

// Central finite difference with relative step scaling.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double step_scale = 1e-5) {
    const double h = step_scale * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Second central difference (for curvature probes).
inline double second_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Streaming mean / variance (Welford).
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const RunningStats& o) {
        if (o.n == 0) return;
        if (n == 0) { *this = o; return; }
        const double d = o.mean - mean;
        const std::size_t tot = n + o.n;
        mean += d * static_cast<double>(o.n) / static_cast<double>(tot);
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(tot);
        n = tot;
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_error() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

}  // namespace rig
