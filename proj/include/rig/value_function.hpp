#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rig/numerics.hpp"
#include "rig/params.hpp"

namespace rig {

// Scalar Riccati ODE satisfied by the variance coefficient h of log v:
//   h'(t) = quad*h^2 + lin*h + cnst,   h(T) = 0,
// quad = -nu^2 (1-rho^2)(1-beta2)/2,  lin = kappa + m*nu*rho,
// cnst = m^2 / (2 (1-beta1)).
// Obtained by matching the z-coefficients of the HJBI identity at the candidate
// controls; the closed form below is checked against it by finite differences.
struct RiccatiODE {
    double quad = 0.0;
    double lin = 0.0;
    double cnst = 0.0;

    double rhs(double h) const { return (quad * h + lin) * h + cnst; }
};

inline RiccatiODE riccati_ode(const InsurerType& ins, const MarketParams& mkt) {
    const double one_m_rho2 = 1.0 - mkt.rho * mkt.rho;
    return RiccatiODE{
        -0.5 * mkt.nu * mkt.nu * one_m_rho2 * (1.0 - ins.beta2()),
        mkt.kappa + mkt.m * mkt.nu * mkt.rho,
        mkt.m * mkt.m / (2.0 * (1.0 - ins.beta1())),
    };
}

// Closed-form solution constants. c1 is the positive root of the Riccati
// polynomial, c2 the discriminant root gap, c3 = -c1/r_lo; h is evaluated
// through the two roots, which stays finite for every admissible parameter set
// (including m = 0, where h vanishes identically).
struct RiccatiConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double r_hi = 0.0;  // positive root (equals c1)
    double r_lo = 0.0;  // nonpositive root
};

inline RiccatiConstants riccati_constants(const InsurerType& ins, const MarketParams& mkt) {
    if (std::abs(mkt.rho) >= 1.0)
        throw std::domain_error("riccati_constants: |rho| must be < 1");
    if (!(mkt.nu > 0.0)) throw std::domain_error("riccati_constants: nu must be positive");
    if (!(ins.delta > 0.0))
        throw std::domain_error("riccati_constants: delta must be positive");
    const RiccatiODE ode = riccati_ode(ins, mkt);
    const double disc = std::sqrt(ode.lin * ode.lin - 4.0 * ode.quad * ode.cnst);

    RiccatiConstants rc;
    rc.c2 = disc;
    if (disc == 0.0) {  // m = 0 and kappa + m nu rho = 0: h is identically zero
        rc.c1 = rc.r_hi = rc.r_lo = 0.0;
        rc.c3 = std::numeric_limits<double>::infinity();
        return rc;
    }
    // Cancellation-free root forms.
    if (ode.lin >= 0.0) {
        rc.r_hi = (ode.lin + disc) / (-2.0 * ode.quad);
        rc.r_lo = -2.0 * ode.cnst / (disc + ode.lin);
    } else {
        rc.r_hi = 2.0 * ode.cnst / (disc - ode.lin);
        rc.r_lo = (ode.lin - disc) / (-2.0 * ode.quad);
    }
    rc.c1 = rc.r_hi;
    rc.c3 = (rc.r_lo == 0.0) ? std::numeric_limits<double>::infinity() : -rc.r_hi / rc.r_lo;
    return rc;
}

// h(t) = c1 (e^{c2 t} - e^{c2 T}) / (e^{c2 t} + c3 e^{c2 T}), computed with the
// factor e^{-c2 (T-t)} <= 1 so large c2*T never overflows.
inline double h_of_t(const RiccatiConstants& rc, double t, double horizon) {
    if (t < 0.0 || t > horizon * (1.0 + 1e-12))
        throw std::domain_error("h_of_t: t outside [0, horizon]");
    if (rc.r_hi == 0.0 || rc.r_lo == 0.0) return 0.0;
    const double w = std::exp(-rc.c2 * (horizon - t));
    return rc.r_hi * rc.r_lo * (w - 1.0) / (w * rc.r_lo - rc.r_hi);
}

// Exact derivative of the closed form.
inline double h_prime(const RiccatiConstants& rc, double t, double horizon) {
    if (t < 0.0 || t > horizon * (1.0 + 1e-12))
        throw std::domain_error("h_prime: t outside [0, horizon]");
    if (rc.r_hi == 0.0 || rc.r_lo == 0.0) return 0.0;
    const double w = std::exp(-rc.c2 * (horizon - t));
    const double den = w * rc.r_lo - rc.r_hi;
    return -rc.r_hi * rc.c2 * w * (rc.r_hi - rc.r_lo) * rc.r_lo / (den * den);
}

// Finite-difference h' minus the ODE right-hand side; the independent oracle
// for the closed form. Interior t only (the FD stencil must stay in [0,T]).
inline double riccati_residual(const RiccatiConstants& rc, const InsurerType& ins,
                               const MarketParams& mkt, double t, double fd_step = 1e-5) {
    const double horizon = mkt.horizon;
    if (!(t > 0.0 && t < horizon))
        throw std::domain_error("riccati_residual: t must be interior");
    const RiccatiODE ode = riccati_ode(ins, mkt);
    const double step = std::min({fd_step * std::max(1.0, std::abs(t)), t, horizon - t});
    const double hp_fd = (h_of_t(rc, t + step, horizon) - h_of_t(rc, t - step, horizon)) /
                         (2.0 * step);
    return hp_fd - ode.rhs(h_of_t(rc, t, horizon));
}

// Scale for relative residual comparisons: max(1, |largest ODE term|).
inline double riccati_scale(const RiccatiConstants& rc, const InsurerType& ins,
                            const MarketParams& mkt, double t) {
    const RiccatiODE ode = riccati_ode(ins, mkt);
    const double h = h_of_t(rc, t, mkt.horizon);
    double s = 1.0;
    s = std::max(s, std::abs(ode.quad * h * h));
    s = std::max(s, std::abs(ode.lin * h));
    s = std::max(s, std::abs(ode.cnst));
    return s;
}

// Per-insurer candidate value-function coefficients:
//   v(t,y,z) = -(1/delta) exp(f(t) - delta * y * g(t) + h(t) * z)
// g(t) = e^{r(T-t)}; h from the Riccati closed form; f tabulated on a uniform
// grid by composite Simpson with linear interpolation in between, plus the exact
// integrand slope for analytic time derivatives.
struct ValueCoeffs {
    RiccatiConstants rc;
    RiccatiODE ode;
    double rate = 0.0;
    double horizon = 0.0;
    TimeGrid grid;
    std::vector<double> f_table;
    std::function<double(double)> f_integrand;  // f(t) = int_t^T f_integrand(s) ds

    double c1() const { return rc.c1; }
    double c2() const { return rc.c2; }
    double c3() const { return rc.c3; }

    double g(double t) const { return std::exp(rate * (horizon - t)); }
    double g_prime(double t) const { return -rate * g(t); }
    double h(double t) const { return h_of_t(rc, t, horizon); }
    double h_slope(double t) const { return h_prime(rc, t, horizon); }
    double f(double t) const { return grid.interpolate(f_table, t); }
    // Exact f'(t) = -integrand(t).
    double f_slope(double t) const { return -f_integrand(t); }
    // Central finite difference over the tabulated f; the oracle route.
    double f_slope_fd(double t) const {
        const double step = std::min({1e-5 * std::max(1.0, std::abs(t)),
                                      t > 0.0 ? t : grid.dt(), horizon - t > 0.0 ? horizon - t : grid.dt()});
        const double lo = std::max(0.0, t - step);
        const double hi = std::min(horizon, t + step);
        return (f(hi) - f(lo)) / (hi - lo);
    }
};

// Tabulate f from its integrand: f(T) = 0, one Simpson panel per grid interval
// (the integrand is evaluated at panel midpoints, so the table is O(dt^4)).
inline ValueCoeffs build_value_coeffs(const InsurerType& ins, const MarketParams& mkt,
                                      std::function<double(double)> f_integrand,
                                      std::size_t grid_nodes = 2001) {
    ValueCoeffs vc;
    vc.rc = riccati_constants(ins, mkt);
    vc.ode = riccati_ode(ins, mkt);
    vc.rate = mkt.r;
    vc.horizon = mkt.horizon;
    vc.grid = TimeGrid(mkt.horizon, grid_nodes);
    vc.f_integrand = std::move(f_integrand);
    vc.f_table.assign(grid_nodes, 0.0);
    for (std::size_t j = grid_nodes - 1; j-- > 0;) {
        const double a = vc.grid.t(j);
        const double b = vc.grid.t(j + 1);
        const double panel = (b - a) / 6.0 *
                             (vc.f_integrand(a) + 4.0 * vc.f_integrand(0.5 * (a + b)) +
                              vc.f_integrand(b));
        vc.f_table[j] = vc.f_table[j + 1] + panel;
    }
    return vc;
}

struct ValuePartials {
    double v = 0.0;
    double vt = 0.0;
    double vy = 0.0;
    double vz = 0.0;
    double vyy = 0.0;
    double vzz = 0.0;
    double vyz = 0.0;
};

struct ValueFunction {
    ValueCoeffs coeffs;
    double delta = 0.0;

    double value(double t, double y, double z) const {
        if (!(z > 0.0)) throw std::domain_error("value: z must be positive");
        return -std::exp(coeffs.f(t) - delta * y * coeffs.g(t) + coeffs.h(t) * z) / delta;
    }

    // All partials are exact multiples of v; vt uses the exact integrand slope
    // by default, or the finite-difference-of-table route when fd_f is set.
    ValuePartials partials(double t, double y, double z, bool fd_f = false) const {
        ValuePartials p;
        p.v = value(t, y, z);
        const double g = coeffs.g(t);
        const double h = coeffs.h(t);
        const double fp = fd_f ? coeffs.f_slope_fd(t) : coeffs.f_slope(t);
        p.vt = (fp + coeffs.h_slope(t) * z - delta * y * coeffs.g_prime(t)) * p.v;
        p.vy = -delta * g * p.v;
        p.vz = h * p.v;
        p.vyy = delta * delta * g * g * p.v;
        p.vzz = h * h * p.v;
        p.vyz = -delta * g * h * p.v;
        return p;
    }
};

}  // namespace rig
