#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/equilibrium.hpp"
#include "rig/numerics.hpp"
#include "rig/params.hpp"
#include "rig/value_function.hpp"

namespace rig {

struct TypeAtom {
    InsurerType type;
    double weight = 0.0;
};

// Discrete type distribution; weights positive and summing to one.
struct TypeDistribution {
    std::vector<TypeAtom> atoms;

    void check() const {
        if (atoms.empty()) throw std::invalid_argument("TypeDistribution: no atoms");
        double s = 0.0;
        for (const auto& a : atoms) {
            if (!(a.weight > 0.0)) throw std::invalid_argument("TypeDistribution: weight <= 0");
            s += a.weight;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("TypeDistribution: weights must sum to 1");
    }
    double theta_bar() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.weight * a.type.theta;
        return s;
    }
    double max_mu1() const {
        double s = 0.0;
        for (const auto& a : atoms) s = std::max(s, a.type.mu1);
        return s;
    }
    template <typename F>
    double mean(F&& f) const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.weight * f(a.type);
        return s;
    }
};

// The population retention response uses the n -> infinity limit of the R
// coefficient (factor 1); RFactor::literal keeps the pre-limit (1 - theta/n)
// factor for comparison and needs an explicit n.
enum class RFactor { limit, literal };

struct MfOptions {
    RFactor r_factor = RFactor::limit;
    double literal_n = 0.0;
    std::size_t grid_nodes = 2001;
    double tol = 1e-12;
};

inline PQR mf_pqr(const InsurerType& u, const MarketParams& mkt, double t,
                  const MfOptions& opts = {}) {
    const double g = std::exp(mkt.r * (mkt.horizon - t));
    double factor = 1.0;
    if (opts.r_factor == RFactor::literal) {
        if (!(opts.literal_n > 0.0))
            throw std::invalid_argument("mf_pqr: literal R factor requires n > 0");
        factor = 1.0 - u.theta / opts.literal_n;
    }
    PQR out;
    out.P = 2.0 * mkt.eta_hat * (u.lambda + mkt.lambda_hat) * u.mu2 / (u.delta * g);
    out.Q = mkt.lambda_hat * u.theta * u.mu1 * (1.0 - u.beta3());
    out.R = out.P + factor * ((u.lambda + mkt.lambda_hat) * u.mu2 * (1.0 - u.beta4()) +
                              mkt.lambda_hat * u.mu1 * u.mu1 * (u.beta4() - u.beta3()));
    return out;
}

// Population investment aggregate M1(t) = E[(m/(1-beta1) + nu rho h_U(t))/delta] e^{-r(T-t)}.
inline double mf_m1(const TypeDistribution& dist, const MarketParams& mkt,
                    const std::vector<RiccatiConstants>& rc, double t) {
    const double disc = std::exp(-mkt.r * (mkt.horizon - t));
    double s = 0.0;
    for (std::size_t u = 0; u < dist.atoms.size(); ++u) {
        const InsurerType& ty = dist.atoms[u].type;
        s += dist.atoms[u].weight *
             (mkt.m / (1.0 - ty.beta1()) + mkt.nu * mkt.rho * h_of_t(rc[u], t, mkt.horizon)) /
             ty.delta;
    }
    return s * disc;
}

// Retention aggregate: the unique fixed point of
//   G(x) = E[mu1 * min(Q_U x / R_U + P_U / R_U, 1)]
// located by bisection on [0, max mu1]. G is nondecreasing with slope < 1 on
// the uncapped region, so the root of G(x) - x is unique.
inline double mf_omega_bar(const TypeDistribution& dist, const MarketParams& mkt, double t,
                           const MfOptions& opts = {}) {
    auto G = [&](double x) {
        return dist.mean([&](const InsurerType& u) {
            const PQR c = mf_pqr(u, mkt, t, opts);
            return u.mu1 * std::min(c.Q / c.R * x + c.P / c.R, 1.0);
        });
    };
    double lo = 0.0, hi = dist.max_mu1();
    double flo = G(lo) - lo, fhi = G(hi) - hi;
    if (flo < 0.0 || fhi > 1e-15)
        throw ConvergenceError("mf_omega_bar: no sign change on the bracket");
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = G(mid) - mid;
        if (fm >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double x = 0.5 * (lo + hi);
    if (std::abs(G(x) - x) > std::max(opts.tol, 1e-12))
        throw ConvergenceError("mf_omega_bar: bisection residual too large");
    return x;
}

// One time-slice of the mean-field equilibrium.
struct MeanFieldSlice {
    double m1 = 0.0;
    double omega_bar = 0.0;
    std::vector<double> Pi;  // per atom
    std::vector<double> a;   // per atom
};

inline MeanFieldSlice mean_field_strategies(const TypeDistribution& dist, const MarketParams& mkt,
                                            const std::vector<RiccatiConstants>& rc, double t,
                                            const MfOptions& opts = {}) {
    const double theta_bar = dist.theta_bar();
    if (std::abs(1.0 - theta_bar) <= 1e-12)
        throw NoEquilibriumError("mean_field_strategies: E[theta] equals 1");
    MeanFieldSlice s;
    s.m1 = mf_m1(dist, mkt, rc, t);
    s.omega_bar = mf_omega_bar(dist, mkt, t, opts);
    const double disc = std::exp(-mkt.r * (mkt.horizon - t));
    s.Pi.resize(dist.atoms.size());
    s.a.resize(dist.atoms.size());
    for (std::size_t u = 0; u < dist.atoms.size(); ++u) {
        const InsurerType& ty = dist.atoms[u].type;
        s.Pi[u] = ty.theta * s.m1 / (1.0 - theta_bar) +
                  (mkt.m / (1.0 - ty.beta1()) + mkt.nu * mkt.rho * h_of_t(rc[u], t, mkt.horizon)) *
                      disc / ty.delta;
        const PQR c = mf_pqr(ty, mkt, t, opts);
        s.a[u] = std::min(c.Q / c.R * s.omega_bar + c.P / c.R, 1.0);
    }
    return s;
}

// Worst-case measure drifts of an atom; cross-type idiosyncratic drifts vanish.
struct MfControls {
    double phi_over_sqrtz = 0.0;
    double chi_over_sqrtz = 0.0;
    double phi_tilde = 0.0;
    double vartheta_own = 0.0;  // drift on the atom's own idiosyncratic driver
};

inline MfControls mf_worst_case_controls(const TypeDistribution& dist, const MarketParams& mkt,
                                         const std::vector<RiccatiConstants>& rc, std::size_t u0,
                                         double t, const MfOptions& opts = {}) {
    const MeanFieldSlice s = mean_field_strategies(dist, mkt, rc, t, opts);
    const InsurerType& ty = dist.atoms[u0].type;
    const double g = std::exp(mkt.r * (mkt.horizon - t));
    double mean_amu = 0.0;
    for (std::size_t u = 0; u < dist.atoms.size(); ++u)
        mean_amu += dist.atoms[u].weight * dist.atoms[u].type.mu1 * s.a[u];
    MfControls mc;
    mc.phi_over_sqrtz = mkt.m * ty.beta1() / (1.0 - ty.beta1());
    mc.chi_over_sqrtz =
        -mkt.nu * std::sqrt(1.0 - mkt.rho * mkt.rho) * ty.beta2() * h_of_t(rc[u0], t, mkt.horizon);
    mc.phi_tilde = std::sqrt(mkt.lambda_hat) * (ty.mu1 * s.a[u0] - ty.theta * mean_amu) *
                   ty.beta3() * ty.delta * g;
    mc.vartheta_own = s.a[u0] * ty.idio_sd(mkt) * ty.beta4() * ty.delta * g;
    return mc;
}

// Integrand of the representative value exponent f_{u0}; f_{u0}(t) is its
// integral from t to T.
inline double mf_f_integrand(const TypeDistribution& dist, const MarketParams& mkt,
                             const std::vector<RiccatiConstants>& rc, std::size_t u0, double s,
                             const MfOptions& opts = {}) {
    const MeanFieldSlice sl = mean_field_strategies(dist, mkt, rc, s, opts);
    const InsurerType& ty = dist.atoms[u0].type;
    const double g = std::exp(mkt.r * (mkt.horizon - s));
    const double g2 = g * g;
    const double d = ty.delta;
    const double a0 = sl.a[u0];

    const double mean_premium = dist.mean(
        [&](const InsurerType& u) { return u.eta * (u.lambda + mkt.lambda_hat) * u.mu1; });
    double mean_ceded = 0.0, mean_amu = 0.0;
    for (std::size_t u = 0; u < dist.atoms.size(); ++u) {
        const InsurerType& uy = dist.atoms[u].type;
        mean_ceded += dist.atoms[u].weight * (1.0 - sl.a[u]) * (1.0 - sl.a[u]) *
                      (uy.lambda + mkt.lambda_hat) * uy.mu2;
        mean_amu += dist.atoms[u].weight * uy.mu1 * sl.a[u];
    }

    double val = mkt.kappa * mkt.zbar * h_of_t(rc[u0], s, mkt.horizon);
    val -= (ty.eta * (ty.lambda + mkt.lambda_hat) * ty.mu1 - ty.theta * mean_premium) * d * g;
    val += mkt.eta_hat * (1.0 - a0) * (1.0 - a0) * (ty.lambda + mkt.lambda_hat) * ty.mu2 * d * g;
    val -= ty.theta * mkt.eta_hat * mean_ceded * d * g;
    val += 0.5 * a0 * a0 *
           ((mkt.lambda_hat + ty.lambda) * ty.mu2 * (1.0 - ty.beta4()) +
            mkt.lambda_hat * ty.mu1 * ty.mu1 * (ty.beta4() - ty.beta3())) *
           d * d * g2;
    val += mkt.lambda_hat * 0.5 * ty.theta * ty.theta * mean_amu * mean_amu * d * d * g2 *
           (1.0 - ty.beta3());
    val -= mkt.lambda_hat * ty.theta * a0 * ty.mu1 * mean_amu * d * d * g2 * (1.0 - ty.beta3());
    return val;
}

// Mean-field equilibrium tabulated on a time grid.
struct MeanFieldEquilibrium {
    TypeDistribution dist;
    MarketParams market;
    MfOptions opts;
    TimeGrid grid;
    std::vector<RiccatiConstants> rc;      // per atom
    std::vector<double> m1_table;
    std::vector<double> omega_table;
    std::vector<std::vector<double>> Pi;   // [atom][node]
    std::vector<std::vector<double>> a;    // [atom][node]
    std::vector<ValueCoeffs> coeffs;       // per atom

    std::size_t n_atoms() const { return dist.atoms.size(); }
};

inline MeanFieldEquilibrium solve_mean_field(const TypeDistribution& dist,
                                             const MarketParams& mkt, MfOptions opts = {}) {
    dist.check();
    if (std::abs(1.0 - dist.theta_bar()) <= 1e-12)
        throw NoEquilibriumError("solve_mean_field: E[theta] equals 1");
    MeanFieldEquilibrium eq;
    eq.dist = dist;
    eq.market = mkt;
    eq.opts = opts;
    eq.grid = TimeGrid(mkt.horizon, opts.grid_nodes);
    for (const auto& atom : dist.atoms) eq.rc.push_back(riccati_constants(atom.type, mkt));

    const std::size_t nu = dist.atoms.size();
    eq.m1_table.assign(opts.grid_nodes, 0.0);
    eq.omega_table.assign(opts.grid_nodes, 0.0);
    eq.Pi.assign(nu, std::vector<double>(opts.grid_nodes, 0.0));
    eq.a.assign(nu, std::vector<double>(opts.grid_nodes, 0.0));
    for (std::size_t j = 0; j < opts.grid_nodes; ++j) {
        const double t = eq.grid.t(j);
        const MeanFieldSlice s = mean_field_strategies(dist, mkt, eq.rc, t, opts);
        eq.m1_table[j] = s.m1;
        eq.omega_table[j] = s.omega_bar;
        for (std::size_t u = 0; u < nu; ++u) {
            eq.Pi[u][j] = s.Pi[u];
            eq.a[u][j] = s.a[u];
        }
    }
    for (std::size_t u = 0; u < nu; ++u) {
        const TypeDistribution d2 = dist;
        const std::vector<RiccatiConstants> rc2 = eq.rc;
        const MfOptions o2 = opts;
        auto integrand = [d2, mkt, rc2, u, o2](double s) {
            return mf_f_integrand(d2, mkt, rc2, u, s, o2);
        };
        eq.coeffs.push_back(
            build_value_coeffs(dist.atoms[u].type, mkt, integrand, opts.grid_nodes));
    }
    return eq;
}

// Builds the n-insurer game that replicates the distribution exactly: each atom
// appears weight * n times; w * n must be integral.
inline GameSpec replicate(const TypeDistribution& dist, const MarketParams& mkt, std::size_t n) {
    GameSpec spec;
    spec.market = mkt;
    std::size_t total = 0;
    for (const auto& atom : dist.atoms) {
        const double copies = atom.weight * static_cast<double>(n);
        const auto c = static_cast<std::size_t>(std::llround(copies));
        if (std::abs(copies - static_cast<double>(c)) > 1e-9)
            throw std::invalid_argument("replicate: weight * n is not integral");
        for (std::size_t j = 0; j < c; ++j) spec.insurers.push_back(atom.type);
        total += c;
    }
    if (total != n) throw std::invalid_argument("replicate: weights do not tile n");
    return spec;
}

struct ConvergenceReport {
    std::vector<std::size_t> n_values;
    std::vector<double> pi_err;  // sup over atoms and grid times
    std::vector<double> a_err;
    std::vector<double> pi_ratio;  // per-doubling error ratios (NaN when exact)
    std::vector<double> a_ratio;
    bool pi_exact = false;  // all pi errors below 1e-12 (identically replicated pool)
};

// n-insurer equilibria on replicated types versus the mean-field equilibrium.
inline ConvergenceReport consistency_check(const TypeDistribution& dist, const MarketParams& mkt,
                                           const std::vector<std::size_t>& n_values,
                                           std::size_t grid_nodes = 101,
                                           const MfOptions& opts_in = {}) {
    MfOptions opts = opts_in;
    opts.grid_nodes = grid_nodes;
    const MeanFieldEquilibrium mf = solve_mean_field(dist, mkt, opts);
    ConvergenceReport rep;
    rep.n_values = n_values;
    for (std::size_t n : n_values) {
        const GameSpec spec = replicate(dist, mkt, n);
        const EquilibriumProfile prof = compute_equilibrium(spec, grid_nodes);
        double perr = 0.0, aerr = 0.0;
        std::size_t offset = 0;
        for (std::size_t u = 0; u < dist.atoms.size(); ++u) {
            // first replica of atom u (identical types share identical strategies)
            for (std::size_t j = 0; j < grid_nodes; ++j) {
                perr = std::max(perr, std::abs(prof.Pi[offset][j] - mf.Pi[u][j]));
                aerr = std::max(aerr, std::abs(prof.a[offset][j] - mf.a[u][j]));
            }
            offset += static_cast<std::size_t>(
                std::llround(dist.atoms[u].weight * static_cast<double>(n)));
        }
        rep.pi_err.push_back(perr);
        rep.a_err.push_back(aerr);
    }
    rep.pi_exact = true;
    for (double e : rep.pi_err) rep.pi_exact = rep.pi_exact && e < 1e-12;
    for (std::size_t j = 0; j + 1 < n_values.size(); ++j) {
        rep.pi_ratio.push_back(rep.pi_err[j] > 0.0 ? rep.pi_err[j + 1] / rep.pi_err[j]
                                                   : std::numeric_limits<double>::quiet_NaN());
        rep.a_ratio.push_back(rep.a_err[j] > 0.0 ? rep.a_err[j + 1] / rep.a_err[j]
                                                 : std::numeric_limits<double>::quiet_NaN());
    }
    return rep;
}

// CSV export keyed by atom index, mirroring the n-insurer export.
inline void export_mean_field_csv(const MeanFieldEquilibrium& eq, std::ostream& os) {
    const std::size_t nu = eq.n_atoms();
    os << "t,M1,Omega_bar";
    for (std::size_t u = 0; u < nu; ++u) {
        const std::string s = std::to_string(u + 1);
        os << ",Pi_" << s << ",a_" << s << ",phi_" << s << "_over_sqrtz,chi_" << s
           << "_over_sqrtz,phitilde_" << s << ",vartheta_" << s;
    }
    os << "\n";
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.12g", x);
        os << buf;
    };
    for (std::size_t j = 0; j < eq.grid.n_nodes; ++j) {
        const double t = eq.grid.t(j);
        put(t);
        os << ",";
        put(eq.m1_table[j]);
        os << ",";
        put(eq.omega_table[j]);
        for (std::size_t u = 0; u < nu; ++u) {
            const MfControls mc = mf_worst_case_controls(eq.dist, eq.market, eq.rc, u, t, eq.opts);
            os << ",";
            put(eq.Pi[u][j]);
            os << ",";
            put(eq.a[u][j]);
            os << ",";
            put(mc.phi_over_sqrtz);
            os << ",";
            put(mc.chi_over_sqrtz);
            os << ",";
            put(mc.phi_tilde);
            os << ",";
            put(mc.vartheta_own);
        }
        os << "\n";
    }
}

}  // namespace rig
