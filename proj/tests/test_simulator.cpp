#include <catch2/catch.hpp>

#include <cmath>

#include "rig/default_spec.hpp"
#include "rig/simulator.hpp"
#include "test_helpers.hpp"

using namespace rig;

namespace {

EngineSetup degenerate_setup(GameSpec spec, const PathConfig& cfg,
                             std::function<double(std::size_t, double)> Pi_fn,
                             std::function<double(std::size_t, double)> a_fn) {
    EngineSetup su;
    su.spec = std::move(spec);
    su.cfg = cfg;
    const std::size_t n_steps = steps_for(su.spec.market.horizon, cfg.dt);
    su.strat = tabulate_strategies(su.spec.n(), su.spec.market.horizon, n_steps, Pi_fn, a_fn);
    return su;
}

}  // namespace

TEST_CASE("deterministic limit: no volatility, no strategies") {
    // nu = 0, pi = a = 0: the surplus is a linear ODE driven by premium flows
    GameSpec spec = default_two_insurer_spec();
    spec.market.nu = 0.0;  // engine-level run; validation would refuse this
    PathConfig cfg;
    cfg.n_paths = 1;
    cfg.dt = 1e-6;
    spec.market.horizon = 1.0;
    const EngineSetup su = degenerate_setup(
        spec, cfg, [](std::size_t, double) { return 0.0; },
        [](std::size_t, double) { return 0.0; });
    const SimResult res = run_paths(su);
    for (std::size_t k = 0; k < 2; ++k) {
        const InsurerType& ins = spec.insurers[k];
        const double r = spec.market.r;
        const double flow = ins.eta * (ins.lambda + spec.market.lambda_hat) * ins.mu1 -
                            spec.market.eta_hat * (ins.lambda + spec.market.lambda_hat) * ins.mu2;
        const double expect = ins.x0 * std::exp(r) + flow * (std::exp(r) - 1.0) / r;
        CHECK(res.x_T[k][0] == Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("variance process matches the analytic CIR mean") {
    const GameSpec spec = default_two_insurer_spec();
    PathConfig cfg;
    cfg.n_paths = 100000;
    cfg.dt = 1e-3;
    cfg.seed = 17;
    // strategies are irrelevant for Z; keep them zero to stay cheap
    const EngineSetup su = degenerate_setup(
        spec, cfg, [](std::size_t, double) { return 0.0; },
        [](std::size_t, double) { return 0.0; });
    const SimResult res = run_paths(su);
    RunningStats zs;
    for (double v : res.z_T) zs.add(v);
    const MarketParams& mkt = spec.market;
    const double analytic = mkt.z0 * std::exp(-mkt.kappa * mkt.horizon) +
                            mkt.zbar * (1.0 - std::exp(-mkt.kappa * mkt.horizon));
    INFO("mc " << zs.mean << " analytic " << analytic << " se " << zs.std_error());
    CHECK(std::abs(zs.mean - analytic) < 3.0 * zs.std_error());
    // Feller holds: truncation is rare
    CHECK(static_cast<double>(res.truncated_steps) <
          0.01 * static_cast<double>(res.total_steps));
    for (double v : res.z_T) CHECK(v >= 0.0);
}

TEST_CASE("claims diffusion variance follows the retention integral") {
    GameSpec spec = default_two_insurer_spec();
    spec.market.r = 0.0;  // isolate the claims term
    spec.market.m = 0.0;
    PathConfig cfg;
    cfg.n_paths = 100000;
    cfg.dt = 2e-3;
    cfg.seed = 23;
    auto a_fn = [](std::size_t, double t) { return 0.3 + 0.1 * t; };
    const EngineSetup su =
        degenerate_setup(spec, cfg, [](std::size_t, double) { return 0.0; }, a_fn);
    const SimResult res = run_paths(su);
    const double T = spec.market.horizon;
    // Var X_k(T) = (lambda_hat + lambda_k) mu_k2 * int_0^T a(s)^2 ds
    const double a2_int = simpson([&](double s) { const double a = 0.3 + 0.1 * s; return a * a; },
                                  0.0, T, 500);
    for (std::size_t k = 0; k < 2; ++k) {
        RunningStats xs;
        for (double v : res.x_T[k]) xs.add(v);
        const double expect =
            (spec.market.lambda_hat + spec.insurers[k].lambda) * spec.insurers[k].mu2 * a2_int;
        const double se_var = xs.variance() * std::sqrt(2.0 / (cfg.n_paths - 1.0));
        INFO("insurer " << k << " var " << xs.variance() << " expect " << expect);
        CHECK(std::abs(xs.variance() - expect) < 3.0 * se_var);
    }
}

TEST_CASE("driving increments carry the model correlation structure") {
    const GameSpec spec = default_two_insurer_spec();
    PathConfig cfg;
    cfg.n_paths = 200;
    cfg.dt = 1e-2;
    cfg.seed = 31;
    cfg.store_paths = 200;
    const EngineSetup su = degenerate_setup(
        spec, cfg, [](std::size_t, double) { return 0.0; },
        [](std::size_t, double) { return 1.0; });
    const SimResult res = run_paths(su);

    // pool all increments (200 paths x 500 steps = 1e5 samples)
    const std::size_t steps = res.bundle.dw[0].size();
    const double sqdt = std::sqrt(spec.market.horizon / static_cast<double>(steps));
    double sum_w_b = 0.0, sum_w_zdrv = 0.0, sum_w1_w2 = 0.0;
    std::size_t count = 0;
    const double rho_bar = std::sqrt(1.0 - spec.market.rho * spec.market.rho);
    for (std::size_t p = 0; p < cfg.store_paths; ++p) {
        for (std::size_t j = 0; j < steps; ++j) {
            const double w = res.bundle.dw[p][j] / sqdt;
            const double b = res.bundle.db[p][j] / sqdt;
            const double zdrv = spec.market.rho * w + rho_bar * b;
            sum_w_b += w * b;
            sum_w_zdrv += w * zdrv;
            // composite claims drivers of the two insurers
            const InsurerType& i1 = spec.insurers[0];
            const InsurerType& i2 = spec.insurers[1];
            auto driver = [&](const InsurerType& ins, double dwh) {
                const double common_w =
                    std::sqrt(spec.market.lambda_hat * ins.mu1 * ins.mu1 /
                              ((spec.market.lambda_hat + ins.lambda) * ins.mu2));
                return common_w * res.bundle.dwt[p][j] / sqdt +
                       std::sqrt(1.0 - common_w * common_w) * dwh;
            };
            sum_w1_w2 += driver(i1, res.bundle.dwh[p][0][j] / sqdt) *
                         driver(i2, res.bundle.dwh[p][1][j] / sqdt);
            ++count;
        }
    }
    const double se = 1.0 / std::sqrt(static_cast<double>(count));
    CHECK(std::abs(sum_w_b / count) < 3.0 * se);  // W and B independent
    CHECK(std::abs(sum_w_zdrv / count - spec.market.rho) < 3.0 * se);
    const double rho12 = claim_correlation(spec.insurers[0], spec.insurers[1], spec.market);
    CHECK(std::abs(sum_w1_w2 / count - rho12) < 3.0 * se);
}

TEST_CASE("seed determinism and thread invariance") {
    const GameSpec spec = default_two_insurer_spec();
    const EquilibriumProfile prof = compute_equilibrium(spec, 501);
    PathConfig cfg;
    cfg.n_paths = 600;
    cfg.dt = 5e-3;
    cfg.seed = 91;
    cfg.store_paths = 3;
    cfg.measure = Measure::worst_case;
    cfg.worst_case_insurer = 0;
    const SimResult a = simulate(prof, cfg);
    const SimResult b = simulate(prof, cfg);
    cfg.n_threads = 3;
    const SimResult c = simulate(prof, cfg);
    REQUIRE(a.z_T.size() == b.z_T.size());
    for (std::size_t p = 0; p < a.z_T.size(); ++p) {
        CHECK(a.z_T[p] == b.z_T[p]);
        CHECK(a.z_T[p] == c.z_T[p]);
        CHECK(a.x_T[0][p] == c.x_T[0][p]);
        CHECK(a.y_T[1][p] == c.y_T[1][p]);
    }
    CHECK(a.bundle.z[0] == b.bundle.z[0]);
    CHECK(a.bundle.z[2] == c.bundle.z[2]);
}

TEST_CASE("relative wealth accumulates consistently with terminal recomputation") {
    const GameSpec spec = default_two_insurer_spec();
    const EquilibriumProfile prof = compute_equilibrium(spec, 501);
    PathConfig cfg;
    cfg.n_paths = 50;
    cfg.dt = 1e-2;
    cfg.seed = 7;
    const SimResult res = simulate(prof, cfg);
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        const double xbar = 0.5 * (res.x_T[0][p] + res.x_T[1][p]);
        for (std::size_t k = 0; k < 2; ++k)
            CHECK(res.y_T[k][p] ==
                  Approx(res.x_T[k][p] - spec.insurers[k].theta * xbar).margin(1e-9));
    }
}

TEST_CASE("ambiguity-neutral worst case coincides with the reference measure") {
    GameSpec spec = default_two_insurer_spec();
    for (auto& ins : spec.insurers) ins.psi1 = ins.psi2 = ins.psi3 = ins.psi4 = 0.0;
    const EquilibriumProfile prof = compute_equilibrium(spec, 501);
    PathConfig ref_cfg;
    ref_cfg.n_paths = 2000;
    ref_cfg.dt = 5e-3;
    ref_cfg.seed = 11;
    PathConfig wc_cfg = ref_cfg;
    wc_cfg.measure = Measure::worst_case;
    wc_cfg.worst_case_insurer = 0;
    const SimResult ref = simulate(prof, ref_cfg);
    const SimResult wc = simulate(prof, wc_cfg);
    for (std::size_t p = 0; p < ref_cfg.n_paths; ++p) {
        CHECK(ref.x_T[0][p] == wc.x_T[0][p]);  // zero drift adjustment, same draws
        CHECK(ref.z_T[p] == wc.z_T[p]);
    }
}

TEST_CASE("custom measure drifts shift the surplus as prescribed") {
    // a constant drift on the common claims driver moves E[X_k(T)] by
    // a_k sqrt(lambda_hat) mu_k1 * drift * T on average
    const GameSpec spec = default_two_insurer_spec();
    const EquilibriumProfile prof = compute_equilibrium(spec, 501);
    PathConfig cfg;
    cfg.n_paths = 20000;
    cfg.dt = 5e-3;
    cfg.seed = 67;
    const std::size_t nodes = steps_for(spec.market.horizon, cfg.dt) + 1;
    MeasureTables custom;
    custom.phi_over_sqrtz = 0.0;
    custom.chi_over_sqrtz.assign(nodes, 0.0);
    custom.phi_tilde.assign(nodes, -0.5);
    custom.vartheta.assign(spec.n(), std::vector<double>(nodes, 0.0));
    const SimResult ref = simulate(prof, cfg);
    const SimResult shifted = simulate(prof, cfg, custom);
    for (std::size_t k = 0; k < 2; ++k) {
        RunningStats r0, r1;
        for (double v : ref.x_T[k]) r0.add(v);
        for (double v : shifted.x_T[k]) r1.add(v);
        // a_k(t) varies in t; bound the shift with its min/max over the grid
        double amin = 1.0, amax = 0.0;
        for (std::size_t j = 0; j < prof.grid.n_nodes; ++j) {
            amin = std::min(amin, prof.a[k][j]);
            amax = std::max(amax, prof.a[k][j]);
        }
        // shift compounds at the risk-free rate: within [amin, amax e^{rT}] * scale
        const double scale = std::sqrt(spec.market.lambda_hat) * spec.insurers[k].mu1 * 0.5 *
                             spec.market.horizon;
        const double grow = std::exp(spec.market.r * spec.market.horizon);
        const double shift = r0.mean - r1.mean;
        INFO("insurer " << k << " shift " << shift);
        CHECK(shift > amin * scale - 3.0 * (r0.std_error() + r1.std_error()));
        CHECK(shift < amax * scale * grow + 3.0 * (r0.std_error() + r1.std_error()));
    }
}

TEST_CASE("compound Poisson aggregate claims moments") {
    const GameSpec spec = default_two_insurer_spec();
    PathConfig cfg;
    cfg.n_paths = 100000;
    cfg.dt = 0.25;  // exact in distribution at any step size
    cfg.seed = 41;
    const CpResult res = simulate_compound_poisson(spec, cfg);
    const double T = spec.market.horizon;
    for (std::size_t k = 0; k < 2; ++k) {
        const InsurerType& ins = spec.insurers[k];
        RunningStats s;
        for (double v : res.claims_T[k]) s.add(v);
        const double mean_expect = (spec.market.lambda_hat + ins.lambda) * ins.mu1 * T;
        const double var_expect = (spec.market.lambda_hat + ins.lambda) * ins.mu2 * T;
        INFO("insurer " << k << ": mean " << s.mean << "/" << mean_expect << " var "
                        << s.variance() << "/" << var_expect);
        CHECK(std::abs(s.mean - mean_expect) < 3.0 * s.std_error());
        const double se_var = s.variance() * std::sqrt(2.0 / (cfg.n_paths - 1.0));
        CHECK(std::abs(s.variance() - var_expect) < 3.0 * se_var);
    }

    // common-shock covariance between the books
    RunningStats s1, s2;
    for (double v : res.claims_T[0]) s1.add(v);
    for (double v : res.claims_T[1]) s2.add(v);
    double cov = 0.0;
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
        cov += (res.claims_T[0][p] - s1.mean) * (res.claims_T[1][p] - s2.mean);
    cov /= static_cast<double>(cfg.n_paths - 1);
    const double cov_expect =
        spec.market.lambda_hat * spec.insurers[0].mu1 * spec.insurers[1].mu1 * T;
    const double se_cov = std::sqrt(s1.variance() * s2.variance() / cfg.n_paths) * 2.0;
    INFO("cov " << cov << " expect " << cov_expect);
    CHECK(std::abs(cov - cov_expect) < 3.0 * se_cov);
}

TEST_CASE("compound Poisson surplus paths follow premium minus claims") {
    const GameSpec spec = default_two_insurer_spec();
    PathConfig cfg;
    cfg.n_paths = 4;
    cfg.dt = 0.5;
    cfg.seed = 3;
    cfg.store_paths = 4;
    const CpResult res = simulate_compound_poisson(spec, cfg);
    for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(res.x[p][k][0] == spec.insurers[k].x0);
            CHECK(res.x_T[k][p] ==
                  Approx(spec.insurers[k].x0 +
                         spec.insurers[k].premium(spec.market) * spec.market.horizon -
                         res.claims_T[k][p])
                      .margin(1e-12));
        }
}

TEST_CASE("normal-approximation accuracy bound is computed, not asserted") {
    const GameSpec spec = default_two_insurer_spec();
    const ClaimModel cm = default_claim_model(spec.insurers[0]);
    const double b5 = berry_esseen_bound(cm, spec.insurers[0], spec.market, 5.0);
    const double b1 = berry_esseen_bound(cm, spec.insurers[0], spec.market, 1.0);
    CHECK(b5 > 0.0);
    CHECK(b5 < b1);  // tightens with time
    // exponential claims: l_t = (3/sqrt(2)) / sqrt((lambda_hat+lambda) t)
    const double lt = 3.0 / std::sqrt(2.0) / std::sqrt(1.5 * 5.0);
    CHECK(b5 == Approx(0.266 * lt + 0.5 * lt * lt).epsilon(1e-12));
}

TEST_CASE("claim model consistency is enforced") {
    InsurerType ins = default_two_insurer_spec().insurers[0];
    ins.mu2 = 3.0;  // not exponential-compatible
    CHECK_THROWS_AS(default_claim_model(ins), std::invalid_argument);
}

TEST_CASE("MC standard error shrinks like one over root paths") {
    const GameSpec spec = default_two_insurer_spec();
    const EquilibriumProfile prof = compute_equilibrium(spec, 501);
    PathConfig cfg;
    cfg.dt = 5e-3;
    cfg.seed = 5;
    cfg.n_paths = 4000;
    const McEstimate small = mc_objective(prof, 0, cfg);
    cfg.n_paths = 16000;
    const McEstimate big = mc_objective(prof, 0, cfg);
    // quadrupling paths halves the SE, within 20%
    const double ratio = small.std_error / big.std_error;
    INFO("se ratio " << ratio);
    CHECK(ratio > 2.0 * 0.8);
    CHECK(ratio < 2.0 * 1.2);
}

TEST_CASE("deterministic no-risk objective equals the closed form exactly") {
    // theta = 0, psi = 0, pi = a = 0: Y is deterministic, U_f(Y_T) is a constant
    GameSpec spec = default_two_insurer_spec();
    spec.insurers.resize(1);
    spec.insurers[0].theta = 0.0;
    spec.insurers[0].psi1 = spec.insurers[0].psi2 = spec.insurers[0].psi3 =
        spec.insurers[0].psi4 = 0.0;
    spec.market.r = 0.0;
    PathConfig cfg;
    cfg.n_paths = 64;
    cfg.dt = 1e-3;
    cfg.seed = 2;
    EngineSetup su = degenerate_setup(
        spec, cfg, [](std::size_t, double) { return 0.0; },
        [](std::size_t, double) { return 0.0; });
    const SimResult res = run_paths(su);
    const InsurerType& ins = spec.insurers[0];
    const double flow = ins.eta * (ins.lambda + spec.market.lambda_hat) * ins.mu1 -
                        spec.market.eta_hat * (ins.lambda + spec.market.lambda_hat) * ins.mu2;
    const double yT = ins.x0 + flow * spec.market.horizon;
    RunningStats s;
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
        s.add(-std::exp(-ins.delta * res.y_T[0][p]) / ins.delta);
    CHECK(s.mean == Approx(-std::exp(-ins.delta * yT) / ins.delta).epsilon(1e-9));
    CHECK(s.variance() == Approx(0.0).margin(1e-18));
}
