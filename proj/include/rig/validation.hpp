#pragma once

#include <cmath>
#include <string>

#include "rig/params.hpp"
#include "rig/value_function.hpp"

namespace rig {

// Precondition report: Feller, per-type invariants, the two admissibility
// conditions on the worst-case drifts, and equilibrium existence. Report-only;
// equilibrium and simulation entry points refuse specs whose report fails.
inline ValidationReport validate(const GameSpec& spec) {
    ValidationReport rep;
    const MarketParams& mkt = spec.market;

    auto add = [&rep](std::string name, bool pass, double lhs, double rhs, std::string detail) {
        rep.checks.push_back({std::move(name), pass, lhs, rhs, std::move(detail)});
    };

    const bool market_ok = mkt.r >= 0.0 && mkt.kappa > 0.0 && mkt.zbar > 0.0 && mkt.nu > 0.0 &&
                           std::abs(mkt.rho) < 1.0 && mkt.z0 > 0.0 && mkt.horizon > 0.0 &&
                           mkt.lambda_hat > 0.0 && mkt.eta_hat > 0.0 && mkt.a >= 0.0 &&
                           mkt.b >= 0.0 && mkt.a * mkt.a + mkt.b * mkt.b > 0.0;
    add("market_ranges", market_ok, 0.0, 0.0,
        market_ok ? "" : "one of r>=0, kappa>0, zbar>0, nu>0, |rho|<1, z0>0, T>0, "
                         "lambda_hat>0, eta_hat>0, a,b>=0, a^2+b^2!=0 failed");
    add("feller", mkt.feller_lhs() > mkt.feller_rhs(), mkt.feller_lhs(), mkt.feller_rhs(),
        "2*kappa*zbar > nu^2");

    const double cbound = mkt.kappa * mkt.kappa / (2.0 * mkt.nu * mkt.nu);

    double cond1 = 0.0, cond2 = 0.0;
    bool types_ok = !spec.insurers.empty();
    bool drift_pos = true;
    std::string type_detail;
    for (std::size_t i = 0; i < spec.insurers.size(); ++i) {
        const InsurerType& ins = spec.insurers[i];
        const bool ok = ins.mu1 > 0.0 && ins.mu2 >= ins.mu1 * ins.mu1 && ins.lambda >= 0.0 &&
                        ins.eta > 0.0 && ins.theta >= 0.0 && ins.theta <= 1.0 &&
                        ins.delta > 0.0 && ins.psi1 >= 0.0 && ins.psi2 >= 0.0 &&
                        ins.psi3 >= 0.0 && ins.psi4 >= 0.0;
        if (!ok) {
            types_ok = false;
            if (type_detail.empty())
                type_detail = "insurer " + std::to_string(i) + " violates a type invariant";
        }
        if (ok && market_ok) {
            const double b1 = ins.beta1();
            cond1 = std::max(cond1, b1 * b1 / ((1.0 - b1) * (1.0 - b1)) * mkt.m * mkt.m);
            const RiccatiConstants rc = riccati_constants(ins, mkt);
            const double h0 = h_of_t(rc, 0.0, mkt.horizon);
            const double b2 = ins.beta2();
            cond2 = std::max(cond2,
                             mkt.nu * mkt.nu * (1.0 - mkt.rho * mkt.rho) * b2 * b2 * h0 * h0);
        }
    }
    if (!(mkt.kappa + mkt.m * mkt.nu * mkt.rho > 0.0)) drift_pos = false;
    add("type_invariants", types_ok, 0.0, 0.0, type_detail);
    add("condition_I", market_ok && cond1 < cbound, cond1, cbound,
        "sup_i beta_{i,1}^2 m^2/(1-beta_{i,1})^2 < kappa^2/(2 nu^2)");
    add("condition_II", market_ok && cond2 < cbound, cond2, cbound,
        "sup_i nu^2 (1-rho^2) beta_{i,2}^2 h_i(0)^2 < kappa^2/(2 nu^2)");
    add("riccati_drift_positive", drift_pos, mkt.kappa + mkt.m * mkt.nu * mkt.rho, 0.0,
        "kappa + m*nu*rho > 0 (guarantees positive closed-form constants)");

    const double n = static_cast<double>(spec.n());
    const double ts = spec.theta_sum();
    add("existence", std::abs(n - ts) > 1e-12 * std::max(1.0, n), ts, n,
        "sum theta_k != n");

    return rep;
}

inline void require_valid(const GameSpec& spec, const char* where) {
    const ValidationReport rep = validate(spec);
    if (!rep.all_pass()) {
        std::string failed;
        for (const auto& c : rep.checks)
            if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
        throw std::invalid_argument(std::string(where) + ": spec fails validation (" + failed + ")");
    }
}

}  // namespace rig
