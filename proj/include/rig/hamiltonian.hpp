#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rig/equilibrium.hpp"
#include "rig/params.hpp"
#include "rig/value_function.hpp"

namespace rig {

// Partial derivatives of the test function the generator acts on.
struct FieldPartials {
    double ft = 0.0;
    double fy = 0.0;
    double fz = 0.0;
    double fyy = 0.0;
    double fzz = 0.0;
    double fyz = 0.0;
};

inline FieldPartials field_from_value(const ValuePartials& p) {
    return FieldPartials{p.vt, p.vy, p.vz, p.vyy, p.vzz, p.vyz};
}

// Measure drifts entering the generator: phi and chi are the actual drifts at
// the point (not divided by sqrt(z)); vartheta has one entry per insurer.
struct MeasureVector {
    double phi = 0.0;
    double chi = 0.0;
    double phi_tilde = 0.0;
    std::vector<double> vartheta;
};

// Argument tuple of the objective for insurer i: state, own controls, the other
// insurers' frozen strategies and the measure drifts.
struct ControlPoint {
    double t = 0.0;
    double y = 0.0;
    double z = 0.0;
    double pi_i = 0.0;
    double a_i = 0.0;
    std::vector<double> pi_others;  // length n, slot i ignored
    std::vector<double> a_others;   // length n, slot i ignored
    MeasureVector measure;
};

// The generator applied to a test function, term by term, mirroring the
// displayed decomposition: each addend is kept separate so transcription can be
// unit-tested in isolation and so the residual scale is observable.
struct GeneratorTerms {
    double time = 0.0;            // f_t
    double z_drift = 0.0;         // [kappa (zbar - z) + nu sqrt(z)(rho phi + sqrt(1-rho^2) chi)] f_z
    double z_diff = 0.0;          // (1/2) nu^2 z f_zz
    double cross_yz = 0.0;        // nu sqrt(z) rho sigma * (net pi) f_yz
    double y_rate = 0.0;          // r y f_y
    double own_drift = 0.0;       // own premium / reinsurance / investment drift * f_y
    double others_drift = 0.0;    // -(theta/n) sum over others of the same * f_y
    double own_claims_drift = 0.0;    // own claims measure drift * f_y
    double others_claims_drift = 0.0; // others' claims measure drift * f_y
    double own_claims_quad = 0.0;     // (1/2)(1-theta/n)^2 a_i^2 (lh+l_i) mu_i2 f_yy
    double others_claims_quad = 0.0;  // (theta^2/2n^2) sum a_k^2 idio_var_k f_yy
    double common_claims_quad = 0.0;  // lh (theta^2/2n^2) [sum a_k mu_k1]^2 f_yy
    double common_claims_cross = 0.0; // -lh (theta/n)(1-theta/n) a_i mu_i1 sum a_k mu_k1 f_yy
    double invest_quad = 0.0;         // (1/2) sigma^2 (net pi)^2 f_yy

    double total() const {
        return time + z_drift + z_diff + cross_yz + y_rate + own_drift + others_drift +
               own_claims_drift + others_claims_drift + own_claims_quad + others_claims_quad +
               common_claims_quad + common_claims_cross + invest_quad;
    }
    double max_abs_term() const {
        double s = 0.0;
        for (double v : {time, z_drift, z_diff, cross_yz, y_rate, own_drift, others_drift,
                         own_claims_drift, others_claims_drift, own_claims_quad,
                         others_claims_quad, common_claims_quad, common_claims_cross, invest_quad})
            s = std::max(s, std::abs(v));
        return s;
    }
};

inline GeneratorTerms generator_terms(const ControlPoint& pt, const FieldPartials& f,
                                      const GameSpec& spec, std::size_t i) {
    if (!(pt.z > 0.0)) throw std::domain_error("generator: z must be positive");
    const MarketParams& mkt = spec.market;
    const InsurerType& ins = spec.insurers[i];
    const double n = static_cast<double>(spec.n());
    const double w = 1.0 - ins.theta / n;
    const double th_n = ins.theta / n;
    const double sqz = std::sqrt(pt.z);
    const double sigma = vol(pt.z, mkt);
    const double rho_bar = std::sqrt(1.0 - mkt.rho * mkt.rho);

    double sum_pi_others = 0.0, sum_amu_others = 0.0;
    for (std::size_t k = 0; k < spec.n(); ++k) {
        if (k == i) continue;
        sum_pi_others += pt.pi_others[k];
        sum_amu_others += pt.a_others[k] * spec.insurers[k].mu1;
    }
    const double net_pi = w * pt.pi_i - th_n * sum_pi_others;

    GeneratorTerms g;
    g.time = f.ft;
    g.z_drift = (mkt.kappa * (mkt.zbar - pt.z) +
                 mkt.nu * sqz * (mkt.rho * pt.measure.phi + rho_bar * pt.measure.chi)) *
                f.fz;
    g.z_diff = 0.5 * mkt.nu * mkt.nu * pt.z * f.fzz;
    g.cross_yz = mkt.nu * sqz * mkt.rho * sigma * net_pi * f.fyz;
    g.y_rate = mkt.r * pt.y * f.fy;
    g.own_drift = w *
                  (ins.eta * (ins.lambda + mkt.lambda_hat) * ins.mu1 -
                   mkt.eta_hat * (1.0 - pt.a_i) * (1.0 - pt.a_i) * (ins.lambda + mkt.lambda_hat) *
                       ins.mu2 +
                   pt.pi_i * (mkt.m * sqz + pt.measure.phi) * sigma) *
                  f.fy;
    double others_drift_sum = 0.0, others_claims_sum = 0.0, others_quad_sum = 0.0;
    for (std::size_t k = 0; k < spec.n(); ++k) {
        if (k == i) continue;
        const InsurerType& o = spec.insurers[k];
        others_drift_sum += o.eta * (o.lambda + mkt.lambda_hat) * o.mu1 -
                            mkt.eta_hat * (1.0 - pt.a_others[k]) * (1.0 - pt.a_others[k]) *
                                (o.lambda + mkt.lambda_hat) * o.mu2 +
                            pt.pi_others[k] * (mkt.m * sqz + pt.measure.phi) * sigma;
        others_claims_sum += pt.a_others[k] * (std::sqrt(mkt.lambda_hat) * o.mu1 *
                                                   pt.measure.phi_tilde +
                                               o.idio_sd(mkt) * pt.measure.vartheta[k]);
        others_quad_sum += pt.a_others[k] * pt.a_others[k] * o.idio_var(mkt);
    }
    g.others_drift = -th_n * others_drift_sum * f.fy;
    g.own_claims_drift = w * pt.a_i *
                         (std::sqrt(mkt.lambda_hat) * ins.mu1 * pt.measure.phi_tilde +
                          ins.idio_sd(mkt) * pt.measure.vartheta[i]) *
                         f.fy;
    g.others_claims_drift = -th_n * others_claims_sum * f.fy;
    g.own_claims_quad =
        0.5 * w * w * pt.a_i * pt.a_i * (mkt.lambda_hat + ins.lambda) * ins.mu2 * f.fyy;
    g.others_claims_quad = 0.5 * th_n * th_n * others_quad_sum * f.fyy;
    g.common_claims_quad =
        mkt.lambda_hat * 0.5 * th_n * th_n * sum_amu_others * sum_amu_others * f.fyy;
    g.common_claims_cross =
        -mkt.lambda_hat * th_n * w * pt.a_i * ins.mu1 * sum_amu_others * f.fyy;
    g.invest_quad = 0.5 * sigma * sigma * net_pi * net_pi * f.fyy;
    return g;
}

inline double generator(const ControlPoint& pt, const FieldPartials& f, const GameSpec& spec,
                        std::size_t i) {
    return generator_terms(pt, f, spec, i).total();
}

// Objective value: generator of v plus entropy penalties with the solved
// scalings psi_j / (-delta v) = beta_j / v. Controls whose ambiguity weight is
// zero must themselves be zero (their penalty is infinite otherwise).
inline double hamiltonian(const ControlPoint& pt, const ValueFunction& vf, const GameSpec& spec,
                          std::size_t i, bool fd_partials = false) {
    const InsurerType& ins = spec.insurers[i];
    const ValuePartials vp = vf.partials(pt.t, pt.y, pt.z, fd_partials);
    double val = generator(pt, field_from_value(vp), spec, i);

    auto penalty = [&](double ctl, double beta) {
        if (beta == 0.0)
            return (ctl == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
        return ctl * ctl * vp.v / (2.0 * beta);
    };
    val += penalty(pt.measure.phi, ins.beta1());
    val += penalty(pt.measure.chi, ins.beta2());
    val += penalty(pt.measure.phi_tilde, ins.beta3());
    double th2 = 0.0;
    for (double v : pt.measure.vartheta) th2 += v * v;
    if (ins.beta4() == 0.0) {
        if (th2 != 0.0) return std::numeric_limits<double>::infinity();
    } else {
        val += th2 * vp.v / (2.0 * ins.beta4());
    }
    return val;
}

// Candidate tuple of insurer i at (t, y, z): equilibrium strategies for
// everyone and insurer i's worst-case measure.
inline ControlPoint candidate_point(const EquilibriumProfile& prof, std::size_t i, double t,
                                    double y, double z) {
    const GameSpec& spec = prof.spec;
    ControlPoint pt;
    pt.t = t;
    pt.y = y;
    pt.z = z;
    const auto pis = investment_coefficients(spec, prof.rc, t);
    const auto a = prof.a_at(t);
    const double zfac = z / (spec.market.a * z + spec.market.b);
    pt.pi_others.resize(spec.n());
    pt.a_others.resize(spec.n());
    for (std::size_t k = 0; k < spec.n(); ++k) {
        pt.pi_others[k] = pis[k] * zfac;
        pt.a_others[k] = a[k];
    }
    pt.pi_i = pt.pi_others[i];
    pt.a_i = a[i];
    const MeasureControls mc = worst_case_controls(spec, prof.rc, a, i, t);
    const double sqz = std::sqrt(z);
    pt.measure.phi = mc.phi_over_sqrtz * sqz;
    pt.measure.chi = mc.chi_over_sqrtz * sqz;
    pt.measure.phi_tilde = mc.phi_tilde;
    pt.measure.vartheta = mc.vartheta;
    return pt;
}

struct SaddleEntry {
    std::string control;
    double gradient = 0.0;     // scaled first derivative (should vanish; one-sided at a cap)
    double curvature = 0.0;    // second difference (sign checked)
    bool at_boundary = false;  // retention capped at 1
    bool stationary = false;
    bool curvature_ok = false;
};

struct SaddleReport {
    std::vector<SaddleEntry> entries;
    double order_swap_pi = 0.0;  // |argmax pi (measures frozen) - candidate|
    double order_swap_a = 0.0;
    bool order_swap_ok = false;
    double scale = 1.0;

    bool all_pass() const {
        if (!order_swap_ok) return false;
        for (const auto& e : entries)
            if (!e.stationary || !e.curvature_ok) return false;
        return true;
    }
    std::string to_string() const {
        std::ostringstream os;
        for (const auto& e : entries)
            os << e.control << ": grad " << e.gradient << (e.stationary ? " ok" : " FAIL")
               << ", curv " << e.curvature << (e.curvature_ok ? " ok" : " FAIL")
               << (e.at_boundary ? " (cap)" : "") << "\n";
        os << "order swap: dpi " << order_swap_pi << " da " << order_swap_a
           << (order_swap_ok ? " ok" : " FAIL") << "\n";
        return os.str();
    }
};

// First-order stationarity, saddle curvature and order-swap verification of the
// objective at the candidate tuple.
inline SaddleReport saddle_check(const EquilibriumProfile& prof, std::size_t i, double t, double y,
                                 double z, double grad_tol = 1e-6, double swap_tol = 1e-8) {
    const GameSpec& spec = prof.spec;
    const InsurerType& ins = spec.insurers[i];
    const ValueFunction vf = prof.value_function(i);
    const ControlPoint cand = candidate_point(prof, i, t, y, z);

    SaddleReport rep;
    {
        const ValuePartials vp = vf.partials(t, y, z);
        rep.scale = std::max(1.0, generator_terms(cand, field_from_value(vp), spec, i)
                                      .max_abs_term());
    }
    const double curv_tol = 1e-7 * rep.scale;

    auto eval = [&](const ControlPoint& pt) { return hamiltonian(pt, vf, spec, i); };

    auto probe = [&](const std::string& name, double base, auto&& setter, bool is_max,
                     bool capped_at_one) {
        SaddleEntry e;
        e.control = name;
        e.at_boundary = capped_at_one;
        const double eps = 1e-4 * std::max(1.0, std::abs(base));
        ControlPoint up = cand, dn = cand;
        setter(up, base + eps);
        setter(dn, base - eps);
        const double f0 = eval(cand), fu = eval(up), fd = eval(dn);
        if (capped_at_one) {
            // one-sided: objective must be nondecreasing toward the cap
            const double one_sided = (f0 - fd) / eps;
            e.gradient = one_sided / rep.scale;
            e.stationary = one_sided >= -grad_tol * rep.scale;
        } else {
            e.gradient = (fu - fd) / (2.0 * eps) / rep.scale;
            e.stationary = std::abs(e.gradient) < grad_tol;
        }
        e.curvature = (fu - 2.0 * f0 + fd) / (eps * eps);
        e.curvature_ok = is_max ? e.curvature <= curv_tol : e.curvature >= -curv_tol;
        rep.entries.push_back(e);
    };

    probe("pi", cand.pi_i, [](ControlPoint& p, double v) { p.pi_i = v; }, true, false);
    probe("a", cand.a_i, [](ControlPoint& p, double v) { p.a_i = v; }, true,
          cand.a_i >= 1.0 - 1e-12);
    if (ins.psi1 > 0.0)
        probe("phi", cand.measure.phi, [](ControlPoint& p, double v) { p.measure.phi = v; },
              false, false);
    if (ins.psi2 > 0.0)
        probe("chi", cand.measure.chi, [](ControlPoint& p, double v) { p.measure.chi = v; },
              false, false);
    if (ins.psi3 > 0.0)
        probe("phi_tilde", cand.measure.phi_tilde,
              [](ControlPoint& p, double v) { p.measure.phi_tilde = v; }, false, false);
    if (ins.psi4 > 0.0) {
        for (std::size_t k = 0; k < spec.n(); ++k)
            probe("vartheta_" + std::to_string(k + 1), cand.measure.vartheta[k],
                  [k](ControlPoint& p, double v) { p.measure.vartheta[k] = v; }, false, false);
    }

    // Order swap: maximize over (pi, a) with the measure frozen at the
    // candidate. The objective is quadratic and separable in (pi, a), so one
    // Newton step from any base point is exact; a fine grid scan cross-checks
    // the constrained retention.
    {
        auto f_pi = [&](double v) {
            ControlPoint p = cand;
            p.pi_i = v;
            return eval(p);
        };
        const double eps = 1e-3 * std::max(1.0, std::abs(cand.pi_i));
        const double d1 = (f_pi(cand.pi_i + eps) - f_pi(cand.pi_i - eps)) / (2.0 * eps);
        const double d2 =
            (f_pi(cand.pi_i + eps) - 2.0 * f_pi(cand.pi_i) + f_pi(cand.pi_i - eps)) / (eps * eps);
        const double pi_hat = cand.pi_i - d1 / d2;
        rep.order_swap_pi = std::abs(pi_hat - cand.pi_i) / std::max(1.0, std::abs(cand.pi_i));
    }
    {
        auto f_a = [&](double v) {
            ControlPoint p = cand;
            p.a_i = v;
            return eval(p);
        };
        const double eps = 1e-4;
        const double base = std::min(std::max(cand.a_i, eps), 1.0 - eps);
        const double d1 = (f_a(base + eps) - f_a(base - eps)) / (2.0 * eps);
        const double d2 = (f_a(base + eps) - 2.0 * f_a(base) + f_a(base - eps)) / (eps * eps);
        double a_hat = base - d1 / d2;
        a_hat = std::min(std::max(a_hat, 0.0), 1.0);
        // grid scan oracle over [0,1]
        double best_v = -std::numeric_limits<double>::infinity(), best_a = 0.0;
        const int grid_n = 2000;
        for (int j = 0; j <= grid_n; ++j) {
            const double aj = static_cast<double>(j) / grid_n;
            const double vj = f_a(aj);
            if (vj > best_v) {
                best_v = vj;
                best_a = aj;
            }
        }
        if (std::abs(best_a - a_hat) > 2.0 / grid_n)
            a_hat = best_a;  // quadratic step disagreed with the scan; trust the scan
        rep.order_swap_a = std::abs(a_hat - cand.a_i);
    }
    rep.order_swap_ok = rep.order_swap_pi < swap_tol && rep.order_swap_a < swap_tol;
    return rep;
}

}  // namespace rig
