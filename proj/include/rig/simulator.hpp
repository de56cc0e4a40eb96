#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rig/equilibrium.hpp"
#include "rig/numerics.hpp"
#include "rig/params.hpp"
#include "rig/value_function.hpp"

namespace rig {

// Counter-derived substreams: one generator per (path, factor), so path workers
// never share state and the layout is independent of the thread count.
inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t path,
                                    std::uint64_t factor) {
    return mix64(mix64(master + 0x9E3779B97F4A7C15ull * (path + 1)) +
                 0xD1B54A32D192ED03ull * (factor + 1));
}

enum class Measure { reference, worst_case };
enum class ClaimMode { diffusion, compound_poisson };

struct PathConfig {
    double dt = 1e-3;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    Measure measure = Measure::reference;
    std::size_t worst_case_insurer = 0;
    ClaimMode mode = ClaimMode::diffusion;
    bool antithetic = false;
    std::size_t store_paths = 0;  // keep full paths and increments for this many paths
    unsigned n_threads = 0;       // 0 = hardware concurrency
};

// Deterministic strategy coefficients sampled on the simulation grid:
// pi_k(t) = Pi[k][j] * Z/(aZ+b) and retention a[k][j] on [t_j, t_{j+1}).
struct StrategyTables {
    std::vector<double> times;             // n_steps + 1 nodes
    std::vector<std::vector<double>> Pi;   // [insurer][node]
    std::vector<std::vector<double>> a;    // [insurer][node]
};

// Worst-case drift tables of one insurer.
struct MeasureTables {
    double phi_over_sqrtz = 0.0;
    std::vector<double> chi_over_sqrtz;          // [node]
    std::vector<double> phi_tilde;               // [node]
    std::vector<std::vector<double>> vartheta;   // [insurer][node]
};

inline std::size_t steps_for(double horizon, double dt) {
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    return std::max<std::size_t>(n, 1);
}

inline StrategyTables tabulate_strategies(const EquilibriumProfile& prof, std::size_t n_steps) {
    StrategyTables st;
    const double horizon = prof.spec.market.horizon;
    const double dt = horizon / static_cast<double>(n_steps);
    const std::size_t n = prof.n();
    st.times.resize(n_steps + 1);
    st.Pi.assign(n, std::vector<double>(n_steps + 1, 0.0));
    st.a.assign(n, std::vector<double>(n_steps + 1, 0.0));
    for (std::size_t j = 0; j <= n_steps; ++j) {
        const double t = std::min(dt * static_cast<double>(j), horizon);
        st.times[j] = t;
        const auto pis = investment_coefficients(prof.spec, prof.rc, t);
        const auto a = prof.a_at(t);
        for (std::size_t k = 0; k < n; ++k) {
            st.Pi[k][j] = pis[k];
            st.a[k][j] = a[k];
        }
    }
    return st;
}

inline StrategyTables tabulate_strategies(std::size_t n_insurers, double horizon,
                                          std::size_t n_steps,
                                          const std::function<double(std::size_t, double)>& Pi_fn,
                                          const std::function<double(std::size_t, double)>& a_fn) {
    StrategyTables st;
    const double dt = horizon / static_cast<double>(n_steps);
    st.times.resize(n_steps + 1);
    st.Pi.assign(n_insurers, std::vector<double>(n_steps + 1, 0.0));
    st.a.assign(n_insurers, std::vector<double>(n_steps + 1, 0.0));
    for (std::size_t j = 0; j <= n_steps; ++j) {
        const double t = std::min(dt * static_cast<double>(j), horizon);
        st.times[j] = t;
        for (std::size_t k = 0; k < n_insurers; ++k) {
            st.Pi[k][j] = Pi_fn(k, t);
            st.a[k][j] = a_fn(k, t);
        }
    }
    return st;
}

inline MeasureTables tabulate_measure(const EquilibriumProfile& prof, std::size_t i,
                                      const StrategyTables& st) {
    MeasureTables mt;
    const std::size_t n = prof.n();
    const std::size_t nodes = st.times.size();
    mt.chi_over_sqrtz.resize(nodes);
    mt.phi_tilde.resize(nodes);
    mt.vartheta.assign(n, std::vector<double>(nodes, 0.0));
    for (std::size_t j = 0; j < nodes; ++j) {
        std::vector<double> a_now(n);
        for (std::size_t k = 0; k < n; ++k) a_now[k] = st.a[k][j];
        const MeasureControls mc =
            worst_case_controls(prof.spec, prof.rc, a_now, i, st.times[j]);
        mt.phi_over_sqrtz = mc.phi_over_sqrtz;
        mt.chi_over_sqrtz[j] = mc.chi_over_sqrtz;
        mt.phi_tilde[j] = mc.phi_tilde;
        for (std::size_t k = 0; k < n; ++k) mt.vartheta[k][j] = mc.vartheta[k];
    }
    return mt;
}

// Stored sample paths (first store_paths paths only) with driving increments.
struct PathBundle {
    std::vector<double> times;
    std::vector<std::vector<double>> z;                    // [path][node]
    std::vector<std::vector<std::vector<double>>> x;       // [path][insurer][node]
    std::vector<std::vector<std::vector<double>>> y;       // [path][insurer][node]
    std::vector<std::vector<double>> dw, db, dwt;          // [path][step]
    std::vector<std::vector<std::vector<double>>> dwh;     // [path][insurer][step]
};

struct SimResult {
    PathBundle bundle;
    std::vector<double> z_T;
    std::vector<std::vector<double>> x_T;  // [insurer][path]
    std::vector<std::vector<double>> y_T;  // [insurer][path]
    std::vector<double> objective;         // per path; filled when a value function is supplied
    std::size_t truncated_steps = 0;
    std::size_t total_steps = 0;
};

struct EngineSetup {
    GameSpec spec;
    StrategyTables strat;
    MeasureTables measure;  // used when cfg.measure == worst_case
    PathConfig cfg;
    const ValueFunction* objective_vf = nullptr;  // penalty scaling for the MC objective
};

namespace detail {

struct StepCounters {
    std::size_t truncated = 0;
    std::size_t total = 0;
};

// RNG factor layout: 0 = equity W, 1 = volatility B, 2 = common claims Wt,
// 3+k = idiosyncratic What_k. Output arrays are shared; workers touch disjoint
// path indices only.
inline void run_path_range(const EngineSetup& su, std::size_t lo, std::size_t hi, SimResult& out,
                           StepCounters& counters) {
    const GameSpec& spec = su.spec;
    const MarketParams& mkt = spec.market;
    const PathConfig& cfg = su.cfg;
    const std::size_t n = spec.n();
    const std::size_t n_steps = su.strat.times.size() - 1;
    const double dt = mkt.horizon / static_cast<double>(n_steps);
    const double sqdt = std::sqrt(dt);
    const double rho_bar = std::sqrt(1.0 - mkt.rho * mkt.rho);
    const bool wc = cfg.measure == Measure::worst_case;
    const std::size_t wci = cfg.worst_case_insurer;
    const InsurerType* wc_ins = wc ? &spec.insurers[wci] : nullptr;

    std::vector<double> mu1(n), idio(n), premium_loading(n), claim_load(n);
    for (std::size_t k = 0; k < n; ++k) {
        mu1[k] = spec.insurers[k].mu1;
        idio[k] = spec.insurers[k].idio_sd(mkt);
        premium_loading[k] =
            spec.insurers[k].eta * (spec.insurers[k].lambda + mkt.lambda_hat) * mu1[k];
        claim_load[k] = (spec.insurers[k].lambda + mkt.lambda_hat) * spec.insurers[k].mu2;
    }
    const double sql = std::sqrt(mkt.lambda_hat);
    const double x0_mean = spec.mean_x0();

    std::vector<double> X(n), Y(n), dX(n);
    std::normal_distribution<double> gauss;

    for (std::size_t p = lo; p < hi; ++p) {
        const std::uint64_t stream = cfg.antithetic ? p / 2 : p;
        const double sign = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
        std::mt19937_64 gw(substream_seed(cfg.seed, stream, 0));
        std::mt19937_64 gb(substream_seed(cfg.seed, stream, 1));
        std::mt19937_64 gt(substream_seed(cfg.seed, stream, 2));
        std::vector<std::mt19937_64> gh;
        gh.reserve(n);
        for (std::size_t k = 0; k < n; ++k)
            gh.emplace_back(substream_seed(cfg.seed, stream, 3 + k));

        double Z = mkt.z0;
        for (std::size_t k = 0; k < n; ++k) {
            X[k] = spec.insurers[k].x0;
            Y[k] = spec.insurers[k].x0 - spec.insurers[k].theta * x0_mean;
        }
        const bool store = p < cfg.store_paths;
        if (store) {
            out.bundle.z[p][0] = std::max(Z, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                out.bundle.x[p][k][0] = X[k];
                out.bundle.y[p][k][0] = Y[k];
            }
        }
        double obj_integral = 0.0;
        double pen_prev = 0.0;
        auto penalty_at = [&](std::size_t j, double Zp) {
            // entropy penalties scaled by beta_j / v along the path
            const double t = su.strat.times[j];
            const ValueCoeffs& vcf = su.objective_vf->coeffs;
            const double delta = su.objective_vf->delta;
            const double v =
                -std::exp(vcf.f(t) - delta * Y[wci] * vcf.g(t) + vcf.h(t) * Zp) / delta;
            double pen = 0.0;
            const double phi = su.measure.phi_over_sqrtz * std::sqrt(Zp);
            const double chi = su.measure.chi_over_sqrtz[j] * std::sqrt(Zp);
            if (wc_ins->psi1 > 0.0) pen += phi * phi * v / (2.0 * wc_ins->beta1());
            if (wc_ins->psi2 > 0.0) pen += chi * chi * v / (2.0 * wc_ins->beta2());
            if (wc_ins->psi3 > 0.0) {
                const double pt = su.measure.phi_tilde[j];
                pen += pt * pt * v / (2.0 * wc_ins->beta3());
            }
            if (wc_ins->psi4 > 0.0) {
                double th2 = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vt = su.measure.vartheta[k][j];
                    th2 += vt * vt;
                }
                pen += th2 * v / (2.0 * wc_ins->beta4());
            }
            return pen;
        };
        if (su.objective_vf) pen_prev = penalty_at(0, std::max(Z, 0.0));

        for (std::size_t j = 0; j < n_steps; ++j) {
            const double Zp = std::max(Z, 0.0);
            if (Z < 0.0) ++counters.truncated;
            const double sqZp = std::sqrt(Zp);

            const double dW = sign * sqdt * gauss(gw);
            const double dB = sign * sqdt * gauss(gb);
            const double dWt = sign * sqdt * gauss(gt);
            if (store) {
                out.bundle.dw[p][j] = dW;
                out.bundle.db[p][j] = dB;
                out.bundle.dwt[p][j] = dWt;
            }

            double mean_dX = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double Pi = su.strat.Pi[k][j];
                const double a = su.strat.a[k][j];
                const double dWh = sign * sqdt * gauss(gh[k]);
                if (store) out.bundle.dwh[p][k][j] = dWh;
                double drift = mkt.r * X[k] + premium_loading[k] -
                               mkt.eta_hat * (1.0 - a) * (1.0 - a) * claim_load[k] +
                               Pi * mkt.m * Zp;
                if (wc) {
                    drift += Pi * su.measure.phi_over_sqrtz * Zp +
                             a * (sql * mu1[k] * su.measure.phi_tilde[j] +
                                  idio[k] * su.measure.vartheta[k][j]);
                }
                dX[k] = drift * dt + a * (sql * mu1[k] * dWt + idio[k] * dWh) + Pi * sqZp * dW;
                mean_dX += dX[k];
            }
            mean_dX /= static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k) {
                X[k] += dX[k];
                Y[k] += dX[k] - spec.insurers[k].theta * mean_dX;
            }

            double z_drift = mkt.kappa * (mkt.zbar - Zp);
            if (wc)
                z_drift += mkt.nu * Zp *
                           (mkt.rho * su.measure.phi_over_sqrtz +
                            rho_bar * su.measure.chi_over_sqrtz[j]);
            Z += z_drift * dt + mkt.nu * sqZp * (mkt.rho * dW + rho_bar * dB);
            ++counters.total;

            if (store) {
                out.bundle.z[p][j + 1] = std::max(Z, 0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    out.bundle.x[p][k][j + 1] = X[k];
                    out.bundle.y[p][k][j + 1] = Y[k];
                }
            }
            if (su.objective_vf) {
                const double pen = penalty_at(j + 1, std::max(Z, 0.0));
                obj_integral += 0.5 * (pen_prev + pen) * dt;
                pen_prev = pen;
            }
        }

        out.z_T[p] = std::max(Z, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            out.x_T[k][p] = X[k];
            out.y_T[k][p] = Y[k];
        }
        if (su.objective_vf) {
            const double delta = su.objective_vf->delta;
            out.objective[p] = -std::exp(-delta * Y[wci]) / delta + obj_integral;
        }
    }
}

}  // namespace detail

inline SimResult run_paths(const EngineSetup& su) {
    const std::size_t n = su.spec.n();
    const std::size_t n_steps = su.strat.times.size() - 1;
    const PathConfig& cfg = su.cfg;
    const bool needs_measure = cfg.measure == Measure::worst_case || su.objective_vf;
    if (needs_measure && (su.measure.chi_over_sqrtz.size() != n_steps + 1 ||
                          su.measure.phi_tilde.size() != n_steps + 1 ||
                          su.measure.vartheta.size() != n))
        throw std::invalid_argument("run_paths: measure tables do not match the grid");

    SimResult out;
    out.z_T.assign(cfg.n_paths, 0.0);
    out.x_T.assign(n, std::vector<double>(cfg.n_paths, 0.0));
    out.y_T.assign(n, std::vector<double>(cfg.n_paths, 0.0));
    if (su.objective_vf) out.objective.assign(cfg.n_paths, 0.0);
    const std::size_t stored = std::min(cfg.store_paths, cfg.n_paths);
    out.bundle.times = su.strat.times;
    out.bundle.z.assign(stored, std::vector<double>(n_steps + 1, 0.0));
    out.bundle.x.assign(stored, std::vector<std::vector<double>>(n, std::vector<double>(n_steps + 1, 0.0)));
    out.bundle.y = out.bundle.x;
    out.bundle.dw.assign(stored, std::vector<double>(n_steps, 0.0));
    out.bundle.db = out.bundle.dw;
    out.bundle.dwt = out.bundle.dw;
    out.bundle.dwh.assign(stored, std::vector<std::vector<double>>(n, std::vector<double>(n_steps, 0.0)));

    unsigned n_threads = cfg.n_threads ? cfg.n_threads : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, 64));
    if (cfg.n_paths < 256) n_threads = 1;

    std::vector<detail::StepCounters> counters(n_threads);
    if (n_threads == 1) {
        detail::run_path_range(su, 0, cfg.n_paths, out, counters[0]);
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (cfg.n_paths + n_threads - 1) / n_threads;
        for (unsigned w = 0; w < n_threads; ++w) {
            const std::size_t lo = std::min<std::size_t>(w * chunk, cfg.n_paths);
            const std::size_t hi = std::min<std::size_t>(lo + chunk, cfg.n_paths);
            if (lo >= hi) break;
            workers.emplace_back([&su, lo, hi, &out, &counters, w]() {
                detail::run_path_range(su, lo, hi, out, counters[w]);
            });
        }
        for (auto& t : workers) t.join();
    }
    for (const auto& c : counters) {
        out.truncated_steps += c.truncated;
        out.total_steps += c.total;
    }
    return out;
}

// Validated front end: equilibrium strategies, optionally under insurer i's
// worst-case measure.
inline SimResult simulate(const EquilibriumProfile& prof, const PathConfig& cfg) {
    require_valid(prof.spec, "simulate");
    if (cfg.mode != ClaimMode::diffusion)
        throw std::invalid_argument("simulate: use simulate_compound_poisson for jump mode");
    EngineSetup su;
    su.spec = prof.spec;
    su.cfg = cfg;
    const std::size_t n_steps = steps_for(prof.spec.market.horizon, cfg.dt);
    su.strat = tabulate_strategies(prof, n_steps);
    if (cfg.measure == Measure::worst_case) {
        if (cfg.worst_case_insurer >= prof.n())
            throw std::invalid_argument("simulate: worst-case insurer index out of range");
        su.measure = tabulate_measure(prof, cfg.worst_case_insurer, su.strat);
    }
    return run_paths(su);
}

// Equilibrium strategies under caller-supplied measure drifts. The tables must
// be sampled on the simulation grid (steps_for(horizon, dt) + 1 nodes).
inline SimResult simulate(const EquilibriumProfile& prof, PathConfig cfg,
                          const MeasureTables& custom_measure) {
    require_valid(prof.spec, "simulate");
    EngineSetup su;
    su.spec = prof.spec;
    cfg.measure = Measure::worst_case;  // engine applies the supplied drifts
    su.cfg = cfg;
    const std::size_t n_steps = steps_for(prof.spec.market.horizon, cfg.dt);
    su.strat = tabulate_strategies(prof, n_steps);
    if (custom_measure.chi_over_sqrtz.size() != n_steps + 1 ||
        custom_measure.phi_tilde.size() != n_steps + 1 ||
        custom_measure.vartheta.size() != prof.n())
        throw std::invalid_argument("simulate: custom measure tables do not match the grid");
    su.measure = custom_measure;
    return run_paths(su);
}

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

// Monte Carlo estimate of the robust objective of insurer i under the
// worst-case measure: U_f(Y_i(T)) plus the trapezoid of the entropy penalties
// scaled by beta_j / v along the path.
inline McEstimate mc_objective(const EquilibriumProfile& prof, std::size_t i, PathConfig cfg) {
    require_valid(prof.spec, "mc_objective");
    cfg.measure = Measure::worst_case;
    cfg.worst_case_insurer = i;
    EngineSetup su;
    su.spec = prof.spec;
    su.cfg = cfg;
    const std::size_t n_steps = steps_for(prof.spec.market.horizon, cfg.dt);
    su.strat = tabulate_strategies(prof, n_steps);
    su.measure = tabulate_measure(prof, i, su.strat);
    const ValueFunction vf = prof.value_function(i);
    su.objective_vf = &vf;
    const SimResult res = run_paths(su);
    RunningStats stats;
    for (double v : res.objective) stats.add(v);
    return McEstimate{stats.mean, stats.std_error(), cfg.n_paths};
}

// ---------------------------------------------------------------------------
// Compound-Poisson mode: the pre-approximation surplus, common jump counts
// shared across insurers, idiosyncratic counts per insurer, claim sizes drawn
// per insurer at every jump.

struct ClaimModel {
    std::function<double(std::mt19937_64&)> sample;
    double m1 = 0.0;      // E[Y]
    double m2 = 0.0;      // E[Y^2]
    double m3_abs = 0.0;  // E[|Y|^3]
};

inline ClaimModel exponential_claims(double mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("exponential_claims: mean must be positive");
    ClaimModel cm;
    cm.sample = [mean](std::mt19937_64& g) {
        std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
        return -mean * std::log(u(g));
    };
    cm.m1 = mean;
    cm.m2 = 2.0 * mean * mean;
    cm.m3_abs = 6.0 * mean * mean * mean;
    return cm;
}

inline ClaimModel default_claim_model(const InsurerType& ins) {
    if (std::abs(ins.mu2 - 2.0 * ins.mu1 * ins.mu1) > 1e-9 * std::max(1.0, ins.mu2))
        throw std::invalid_argument(
            "default_claim_model: (mu1, mu2) inconsistent with exponential claims");
    return exponential_claims(ins.mu1);
}

// Normal-approximation accuracy bound for the standardized aggregate claims at
// time t: 0.266 l_t + 0.5 l_t^2 with l_t = m3_abs / (sqrt((lh+l) t) m2^{3/2}).
inline double berry_esseen_bound(const ClaimModel& cm, const InsurerType& ins,
                                 const MarketParams& mkt, double t) {
    const double lt = cm.m3_abs / (std::sqrt((mkt.lambda_hat + ins.lambda) * t) *
                                   std::pow(cm.m2, 1.5));
    return 0.266 * lt + 0.5 * lt * lt;
}

struct CpResult {
    std::vector<double> times;
    std::vector<std::vector<std::vector<double>>> x;       // stored paths [path][insurer][node]
    std::vector<std::vector<double>> claims_T;              // [insurer][path]
    std::vector<std::vector<double>> x_T;                   // [insurer][path]
};

inline CpResult simulate_compound_poisson(const GameSpec& spec, const PathConfig& cfg,
                                          std::vector<ClaimModel> models = {}) {
    const MarketParams& mkt = spec.market;
    const std::size_t n = spec.n();
    if (models.empty())
        for (const auto& ins : spec.insurers) models.push_back(default_claim_model(ins));
    if (models.size() != n)
        throw std::invalid_argument("simulate_compound_poisson: one claim model per insurer");

    const std::size_t n_steps = steps_for(mkt.horizon, cfg.dt);
    const double dt = mkt.horizon / static_cast<double>(n_steps);
    CpResult out;
    out.times.resize(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j)
        out.times[j] = std::min(dt * static_cast<double>(j), mkt.horizon);
    const std::size_t stored = std::min(cfg.store_paths, cfg.n_paths);
    out.x.assign(stored,
                 std::vector<std::vector<double>>(n, std::vector<double>(n_steps + 1, 0.0)));
    out.claims_T.assign(n, std::vector<double>(cfg.n_paths, 0.0));
    out.x_T.assign(n, std::vector<double>(cfg.n_paths, 0.0));

    std::vector<double> premium(n);
    for (std::size_t k = 0; k < n; ++k) premium[k] = spec.insurers[k].premium(mkt);

    auto worker = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> S(n);
        for (std::size_t p = lo; p < hi; ++p) {
            std::mt19937_64 g_common(substream_seed(cfg.seed, p, 0));
            std::vector<std::mt19937_64> g_idio, g_size;
            for (std::size_t k = 0; k < n; ++k) {
                g_idio.emplace_back(substream_seed(cfg.seed, p, 1 + k));
                g_size.emplace_back(substream_seed(cfg.seed, p, 1 + n + k));
            }
            std::fill(S.begin(), S.end(), 0.0);
            const bool store = p < stored;
            if (store)
                for (std::size_t k = 0; k < n; ++k) out.x[p][k][0] = spec.insurers[k].x0;
            std::poisson_distribution<int> common_count(mkt.lambda_hat * dt);
            for (std::size_t j = 0; j < n_steps; ++j) {
                const int n_common = common_count(g_common);
                for (std::size_t k = 0; k < n; ++k) {
                    std::poisson_distribution<int> idio_count(spec.insurers[k].lambda * dt);
                    int jumps = n_common + idio_count(g_idio[k]);
                    for (int q = 0; q < jumps; ++q) S[k] += models[k].sample(g_size[k]);
                    if (store)
                        out.x[p][k][j + 1] =
                            spec.insurers[k].x0 + premium[k] * out.times[j + 1] - S[k];
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                out.claims_T[k][p] = S[k];
                out.x_T[k][p] = spec.insurers[k].x0 + premium[k] * mkt.horizon - S[k];
            }
        }
    };
    unsigned n_threads = cfg.n_threads ? cfg.n_threads : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, 64));
    if (cfg.n_paths < 256) n_threads = 1;
    if (n_threads == 1) {
        worker(0, cfg.n_paths);
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (cfg.n_paths + n_threads - 1) / n_threads;
        for (unsigned w = 0; w < n_threads; ++w) {
            const std::size_t lo = std::min<std::size_t>(w * chunk, cfg.n_paths);
            const std::size_t hi = std::min<std::size_t>(lo + chunk, cfg.n_paths);
            if (lo < hi) workers.emplace_back([&worker, lo, hi]() { worker(lo, hi); });
        }
        for (auto& t : workers) t.join();
    }
    return out;
}

}  // namespace rig
