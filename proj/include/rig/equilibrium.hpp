#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/numerics.hpp"
#include "rig/params.hpp"
#include "rig/validation.hpp"
#include "rig/value_function.hpp"

namespace rig {

struct NoEquilibriumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coefficients of the linear retention best response a_i = (Q/R * mean-of-others + P/R) ^ 1.
struct PQR {
    double P = 0.0;
    double Q = 0.0;
    double R = 0.0;
};

inline PQR pqr(const GameSpec& spec, std::size_t i, double t) {
    const MarketParams& mkt = spec.market;
    const InsurerType& ins = spec.insurers[i];
    const double n = static_cast<double>(spec.n());
    const double g = std::exp(mkt.r * (mkt.horizon - t));
    PQR out;
    out.P = 2.0 * mkt.eta_hat * (ins.lambda + mkt.lambda_hat) * ins.mu2 / (ins.delta * g);
    out.Q = mkt.lambda_hat * ins.theta * ins.mu1 * (1.0 - ins.beta3());
    out.R = out.P + (1.0 - ins.theta / n) *
                        ((ins.lambda + mkt.lambda_hat) * ins.mu2 * (1.0 - ins.beta4()) +
                         mkt.lambda_hat * ins.mu1 * ins.mu1 * (ins.beta4() - ins.beta3()));
    return out;
}

// Own (competition-free) investment coefficient: (m/(1-beta1) + nu rho h_i(t)) / (delta_i g_i(t)).
inline double own_investment_coeff(const InsurerType& ins, const MarketParams& mkt,
                                   const RiccatiConstants& rc, double t) {
    const double g = std::exp(mkt.r * (mkt.horizon - t));
    return (mkt.m / (1.0 - ins.beta1()) + mkt.nu * mkt.rho * h_of_t(rc, t, mkt.horizon)) /
           (ins.delta * g);
}

// Four-way split of the equilibrium investment coefficient Pi_i(t); the sum of
// the components equals Pi_i(t) and pi_i(t) = Pi_i(t) * Z/(aZ+b).
struct InvestmentBreakdown {
    double myopic = 0.0;
    double hedging = 0.0;
    double competition_myopic = 0.0;
    double competition_hedging = 0.0;

    double total() const { return myopic + hedging + competition_myopic + competition_hedging; }
};

// Equilibrium investment coefficients Pi(t) for all insurers at time t.
inline std::vector<double> investment_coefficients(const GameSpec& spec,
                                                   const std::vector<RiccatiConstants>& rc,
                                                   double t) {
    const std::size_t n = spec.n();
    const double nn = static_cast<double>(n);
    const double theta_sum = spec.theta_sum();
    if (std::abs(nn - theta_sum) <= 1e-12 * std::max(1.0, nn))
        throw NoEquilibriumError("investment_coefficients: sum of theta equals n");
    double pool = 0.0;
    std::vector<double> own(n);
    for (std::size_t k = 0; k < n; ++k) {
        own[k] = own_investment_coeff(spec.insurers[k], spec.market, rc[k], t);
        pool += own[k];
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = spec.insurers[i].theta * pool / (nn - theta_sum) + own[i];
    return out;
}

inline InvestmentBreakdown investment_breakdown(const GameSpec& spec,
                                                const std::vector<RiccatiConstants>& rc,
                                                std::size_t i, double t) {
    const MarketParams& mkt = spec.market;
    const std::size_t n = spec.n();
    const double nn = static_cast<double>(n);
    const double theta_sum = spec.theta_sum();
    if (std::abs(nn - theta_sum) <= 1e-12 * std::max(1.0, nn))
        throw NoEquilibriumError("investment_breakdown: sum of theta equals n");
    const double disc = std::exp(-mkt.r * (mkt.horizon - t));
    double pool_myopic = 0.0, pool_hedging = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const InsurerType& ins = spec.insurers[k];
        pool_myopic += mkt.m / (ins.delta * (1.0 - ins.beta1()));
        pool_hedging += mkt.nu * mkt.rho * h_of_t(rc[k], t, mkt.horizon) / ins.delta;
    }
    const InsurerType& ins = spec.insurers[i];
    InvestmentBreakdown b;
    b.myopic = disc * mkt.m / (ins.delta * (1.0 - ins.beta1()));
    b.hedging = disc * mkt.nu * mkt.rho * h_of_t(rc[i], t, mkt.horizon) / ins.delta;
    b.competition_myopic = disc * ins.theta * pool_myopic / (nn - theta_sum);
    b.competition_hedging = disc * ins.theta * pool_hedging / (nn - theta_sum);
    return b;
}

// Best-response maps (coefficient space): the substitution oracle for the
// closed-form equilibrium.
inline double investment_best_response(const GameSpec& spec, const std::vector<RiccatiConstants>& rc,
                                       const std::vector<double>& pi_others, std::size_t i,
                                       double t) {
    const std::size_t n = spec.n();
    const double nn = static_cast<double>(n);
    const double theta = spec.insurers[i].theta;
    double sum_others = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (k != i) sum_others += pi_others[k];
    return theta / (nn - theta) * sum_others +
           nn / (nn - theta) * own_investment_coeff(spec.insurers[i], spec.market, rc[i], t);
}

inline double retention_best_response(const GameSpec& spec, const std::vector<double>& a_others,
                                      std::size_t i, double t) {
    const PQR c = pqr(spec, i, t);
    const std::size_t n = spec.n();
    double cross = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (k != i) cross += spec.insurers[k].mu1 * a_others[k];
    return std::min(c.Q / c.R * cross / static_cast<double>(n) + c.P / c.R, 1.0);
}

// Closed-form solution of the uncapped linear retention system.
inline std::vector<double> reinsurance_seed(const GameSpec& spec, double t) {
    const std::size_t n = spec.n();
    const double nn = static_cast<double>(n);
    std::vector<PQR> c(n);
    double num = 0.0, den = nn;
    for (std::size_t k = 0; k < n; ++k) {
        c[k] = pqr(spec, k, t);
        const double dk = spec.insurers[k].mu1 * c[k].Q + nn * c[k].R;
        if (!(dk > 0.0))
            throw ConvergenceError("reinsurance_seed: nonpositive denominator (degenerate spec)");
        num += nn * spec.insurers[k].mu1 * c[k].P / dk;
        den -= nn * spec.insurers[k].mu1 * c[k].Q / dk;
    }
    if (!(den > 0.0))
        throw ConvergenceError("reinsurance_seed: aggregate denominator not positive");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double di = spec.insurers[i].mu1 * c[i].Q + nn * c[i].R;
        out[i] = nn * c[i].Q / di * (num / den) + nn * c[i].P / di;
    }
    return out;
}

struct FixedPointResult {
    std::vector<double> a;
    double residual = 0.0;
    int iterations = 0;
    bool capped = false;  // some seed entry exceeded 1 and the cap was engaged
};

inline double retention_residual(const GameSpec& spec, const std::vector<double>& a, double t) {
    double res = 0.0;
    for (std::size_t i = 0; i < spec.n(); ++i)
        res = std::max(res, std::abs(a[i] - retention_best_response(spec, a, i, t)));
    return res;
}

// Pointwise-in-t retention fixed point: seed with the uncapped solution, then
// iterate the capped map. The iterates are entrywise nonincreasing; when every
// seed entry is already <= 1 the seed itself is the fixed point.
inline FixedPointResult reinsurance_fixed_point(const GameSpec& spec, double t,
                                                double tol = 1e-12, int max_iter = 200) {
    FixedPointResult out;
    out.a = reinsurance_seed(spec, t);
    const std::size_t n = spec.n();
    bool all_below = true;
    for (double v : out.a) all_below = all_below && v <= 1.0;
    if (all_below) {
        out.residual = retention_residual(spec, out.a, t);
        return out;
    }
    out.capped = true;
    // Capping the seed is exactly the first iterate (the seed solves the
    // uncapped system); from there the capped map is entrywise nonincreasing.
    for (double& v : out.a) v = std::min(v, 1.0);
    std::vector<double> next(n);
    for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
        for (std::size_t i = 0; i < n; ++i) next[i] = retention_best_response(spec, out.a, i, t);
        for (std::size_t i = 0; i < n; ++i) {
            if (next[i] > out.a[i] + 1e-14 || next[i] < 0.0)
                throw std::logic_error("reinsurance_fixed_point: iterate left [0, previous]");
        }
        out.a = next;
        out.residual = retention_residual(spec, out.a, t);
        if (out.residual < tol) return out;
    }
    throw ConvergenceError("reinsurance_fixed_point: no convergence after " +
                           std::to_string(max_iter) + " iterations, residual " +
                           std::to_string(out.residual));
}

// Worst-case measure drifts of insurer i against the retention profile a(t).
struct MeasureControls {
    double phi_over_sqrtz = 0.0;  // equity drift, divided by sqrt(z)
    double chi_over_sqrtz = 0.0;  // volatility drift, divided by sqrt(z)
    double phi_tilde = 0.0;       // common-insurance drift (deterministic)
    std::vector<double> vartheta; // idiosyncratic drifts, one per insurer
};

inline MeasureControls worst_case_controls(const GameSpec& spec,
                                           const std::vector<RiccatiConstants>& rc,
                                           const std::vector<double>& a_star, std::size_t i,
                                           double t) {
    const MarketParams& mkt = spec.market;
    const InsurerType& ins = spec.insurers[i];
    const double n = static_cast<double>(spec.n());
    const double g = std::exp(mkt.r * (mkt.horizon - t));
    const double h = h_of_t(rc[i], t, mkt.horizon);

    MeasureControls mc;
    mc.phi_over_sqrtz = ins.beta1() / (1.0 - ins.beta1()) * mkt.m;
    mc.chi_over_sqrtz = -mkt.nu * std::sqrt(1.0 - mkt.rho * mkt.rho) * ins.beta2() * h;

    double cross = 0.0;
    for (std::size_t k = 0; k < spec.n(); ++k)
        if (k != i) cross += spec.insurers[k].mu1 * a_star[k];
    mc.phi_tilde = std::sqrt(mkt.lambda_hat) *
                   ((1.0 - ins.theta / n) * ins.mu1 * a_star[i] - ins.theta / n * cross) *
                   ins.delta * g * ins.beta3();

    mc.vartheta.assign(spec.n(), 0.0);
    for (std::size_t k = 0; k < spec.n(); ++k) {
        const InsurerType& other = spec.insurers[k];
        if (k == i)
            mc.vartheta[k] = (1.0 - ins.theta / n) * a_star[i] * other.idio_sd(mkt) * ins.delta *
                             g * ins.beta4();
        else
            mc.vartheta[k] = -ins.theta / n * a_star[k] * other.idio_sd(mkt) * ins.delta * g *
                             ins.beta4();
    }
    return mc;
}

// Equilibrium of the n-insurer game, tabulated on a time grid, with exact
// on-demand evaluators (all strategy functions are pointwise in t).
struct EquilibriumProfile {
    GameSpec spec;
    TimeGrid grid;
    std::vector<RiccatiConstants> rc;       // per insurer
    std::vector<std::vector<double>> Pi;    // [insurer][node]
    std::vector<std::vector<double>> a;     // [insurer][node]
    std::vector<ValueCoeffs> coeffs;        // per insurer (includes f)

    std::size_t n() const { return spec.n(); }

    double Pi_at(std::size_t i, double t) const {
        return investment_coefficients(spec, rc, t)[i];
    }
    std::vector<double> a_at(double t) const { return reinsurance_fixed_point(spec, t).a; }
    MeasureControls controls_at(std::size_t i, double t) const {
        return worst_case_controls(spec, rc, a_at(t), i, t);
    }
    ValueFunction value_function(std::size_t i) const {
        return ValueFunction{coeffs[i], spec.insurers[i].delta};
    }
};

// Integrand of f_i for the n-insurer game at retention profile a(s).
inline double f_integrand_at(const GameSpec& spec, const std::vector<RiccatiConstants>& rc,
                             std::size_t i, double s, const std::vector<double>& a) {
    const MarketParams& mkt = spec.market;
    const InsurerType& ins = spec.insurers[i];
    const double n = static_cast<double>(spec.n());
    const double g = std::exp(mkt.r * (mkt.horizon - s));
    const double g2 = g * g;
    const double d = ins.delta;
    const double w = 1.0 - ins.theta / n;
    const double h = h_of_t(rc[i], s, mkt.horizon);

    double val = mkt.kappa * mkt.zbar * h;
    val -= w * (ins.eta * (ins.lambda + mkt.lambda_hat) * ins.mu1 -
                mkt.eta_hat * (1.0 - a[i]) * (1.0 - a[i]) * (ins.lambda + mkt.lambda_hat) * ins.mu2) *
           d * g;
    double cross_premium = 0.0, cross_quad = 0.0, cross_mean = 0.0;
    for (std::size_t k = 0; k < spec.n(); ++k) {
        if (k == i) continue;
        const InsurerType& o = spec.insurers[k];
        cross_premium += o.eta * (o.lambda + mkt.lambda_hat) * o.mu1 -
                         mkt.eta_hat * (1.0 - a[k]) * (1.0 - a[k]) * (o.lambda + mkt.lambda_hat) * o.mu2;
        cross_quad += a[k] * a[k] * o.idio_var(mkt);
        cross_mean += a[k] * o.mu1;
    }
    val += ins.theta / n * cross_premium * d * g;
    val += 0.5 * w * w * a[i] * a[i] *
           ((ins.lambda + mkt.lambda_hat) * ins.mu2 * (1.0 - ins.beta4()) +
            mkt.lambda_hat * ins.mu1 * ins.mu1 * (ins.beta4() - ins.beta3())) *
           d * d * g2;
    const double th_n = ins.theta / n;
    val += 0.5 * th_n * th_n * cross_quad * (1.0 - ins.beta4()) * d * d * g2;
    val += mkt.lambda_hat * 0.5 * th_n * th_n * cross_mean * cross_mean * (1.0 - ins.beta3()) * d *
           d * g2;
    val -= mkt.lambda_hat * th_n * w * a[i] * ins.mu1 * cross_mean * (1.0 - ins.beta3()) * d * d *
           g2;
    return val;
}

namespace detail {

// Profile construction without the validation gate; the public entry point
// below is the one callers should use.
inline EquilibriumProfile compute_equilibrium_unchecked(const GameSpec& spec,
                                                        std::size_t grid_nodes, double fp_tol,
                                                        int fp_max_iter) {
    EquilibriumProfile prof;
    prof.spec = spec;
    prof.grid = TimeGrid(spec.market.horizon, grid_nodes);
    const std::size_t n = spec.n();
    prof.rc.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        prof.rc.push_back(riccati_constants(spec.insurers[i], spec.market));

    prof.Pi.assign(n, std::vector<double>(grid_nodes, 0.0));
    prof.a.assign(n, std::vector<double>(grid_nodes, 0.0));
    for (std::size_t j = 0; j < grid_nodes; ++j) {
        const double t = prof.grid.t(j);
        const auto pis = investment_coefficients(spec, prof.rc, t);
        const auto fp = reinsurance_fixed_point(spec, t, fp_tol, fp_max_iter);
        for (std::size_t i = 0; i < n; ++i) {
            prof.Pi[i][j] = pis[i];
            prof.a[i][j] = fp.a[i];
        }
    }
    // f needs the full retention profile; evaluate it pointwise (exact at the
    // Simpson midpoints, no interpolation involved).
    const GameSpec spec_copy = spec;
    const std::vector<RiccatiConstants> rc_copy = prof.rc;
    for (std::size_t i = 0; i < n; ++i) {
        auto integrand = [spec_copy, rc_copy, i, fp_tol, fp_max_iter](double s) {
            const auto fp = reinsurance_fixed_point(spec_copy, s, fp_tol, fp_max_iter);
            return f_integrand_at(spec_copy, rc_copy, i, s, fp.a);
        };
        prof.coeffs.push_back(
            build_value_coeffs(spec.insurers[i], spec.market, integrand, grid_nodes));
    }
    return prof;
}

}  // namespace detail

inline EquilibriumProfile compute_equilibrium(const GameSpec& spec, std::size_t grid_nodes = 2001,
                                              double fp_tol = 1e-12, int fp_max_iter = 200) {
    require_valid(spec, "compute_equilibrium");
    return detail::compute_equilibrium_unchecked(spec, grid_nodes, fp_tol, fp_max_iter);
}

// CSV export: t, then per insurer Pi_i, a_i, phi_i_over_sqrtz, chi_i_over_sqrtz,
// phitilde_i, vartheta_i_i.
inline void export_equilibrium_csv(const EquilibriumProfile& prof, std::ostream& os) {
    const std::size_t n = prof.n();
    os << "t";
    for (std::size_t i = 0; i < n; ++i) {
        const std::string s = std::to_string(i + 1);
        os << ",Pi_" << s << ",a_" << s << ",phi_" << s << "_over_sqrtz,chi_" << s
           << "_over_sqrtz,phitilde_" << s << ",vartheta_" << s << "_" << s;
    }
    os << "\n";
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.12g", x);
        os << buf;
    };
    for (std::size_t j = 0; j < prof.grid.n_nodes; ++j) {
        const double t = prof.grid.t(j);
        std::vector<double> a_now(n);
        for (std::size_t i = 0; i < n; ++i) a_now[i] = prof.a[i][j];
        put(t);
        for (std::size_t i = 0; i < n; ++i) {
            const MeasureControls mc = worst_case_controls(prof.spec, prof.rc, a_now, i, t);
            os << ",";
            put(prof.Pi[i][j]);
            os << ",";
            put(prof.a[i][j]);
            os << ",";
            put(mc.phi_over_sqrtz);
            os << ",";
            put(mc.chi_over_sqrtz);
            os << ",";
            put(mc.phi_tilde);
            os << ",";
            put(mc.vartheta[i]);
        }
        os << "\n";
    }
}

}  // namespace rig
