#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rig/config.hpp"
#include "rig/csv.hpp"
#include "rig/equilibrium.hpp"
#include "rig/hamiltonian.hpp"
#include "rig/mean_field.hpp"
#include "rig/simulator.hpp"
#include "rig/sweep.hpp"
#include "rig/validation.hpp"

namespace rig::cli {

inline std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list of numbers");
    return out;
}

inline int cmd_validate(const std::string& config_path, std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    const ValidationReport rep = validate(spec);
    for (const auto& c : rep.checks) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-24s %s  lhs=%.6g rhs=%.6g %s", c.name.c_str(),
                      c.pass ? "pass" : "FAIL", c.lhs, c.rhs, c.detail.c_str());
        os << buf << "\n";
    }
    os << (rep.all_pass() ? "all checks passed" : "validation FAILED") << "\n";
    return rep.all_pass() ? 0 : 2;
}

inline int cmd_equilibrium(const std::string& config_path, const std::string& out_dir,
                           std::size_t grid, std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    const EquilibriumProfile prof = compute_equilibrium(spec, grid);
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/equilibrium.csv";
    std::ofstream f(path, std::ios::binary);
    export_equilibrium_csv(prof, f);
    os << "wrote " << path << "\n";
    return 0;
}

inline int cmd_meanfield(const std::string& config_path, const std::string& out_dir,
                         std::size_t grid, const std::string& weights_text, double literal_n,
                         std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    TypeDistribution dist;
    std::vector<double> weights;
    if (!weights_text.empty()) {
        weights = parse_value_list(weights_text);
        if (weights.size() != spec.n())
            throw std::invalid_argument("meanfield: one weight per insurer required");
    } else {
        weights.assign(spec.n(), 1.0 / static_cast<double>(spec.n()));
    }
    for (std::size_t k = 0; k < spec.n(); ++k)
        dist.atoms.push_back({spec.insurers[k], weights[k]});
    MfOptions opts;
    opts.grid_nodes = grid;
    if (literal_n > 0.0) {
        opts.r_factor = RFactor::literal;
        opts.literal_n = literal_n;
    }
    const MeanFieldEquilibrium eq = solve_mean_field(dist, spec.market, opts);
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/meanfield.csv";
    std::ofstream f(path, std::ios::binary);
    export_mean_field_csv(eq, f);
    os << "wrote " << path << "\n";
    return 0;
}

inline int cmd_residual_check(const std::string& config_path, const std::string& out_dir,
                              std::size_t insurer, std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    const EquilibriumProfile prof = compute_equilibrium(spec);
    if (insurer >= prof.n()) throw std::invalid_argument("residual-check: insurer out of range");
    const ValueFunction vf = prof.value_function(insurer);
    const double T = spec.market.horizon;
    const double z0 = spec.market.z0;

    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/residuals.csv";
    std::ofstream f(path, std::ios::binary);
    f << "t,y,z,residual,max_gradient,curvature_flags\n";
    char buf[200];
    double worst = 0.0;
    for (double tf : {0.0, 0.25, 0.5, 0.75, 1.0 - 1e-3}) {
        const double t = tf * T;
        for (double y : {-5.0, -2.5, 0.0, 2.5, 5.0}) {
            for (double zf : {0.25, 0.5, 1.0, 2.0, 4.0}) {
                const double z = zf * z0;
                const ControlPoint pt = candidate_point(prof, insurer, t, y, z);
                const ValuePartials vp = vf.partials(t, y, z);
                const GeneratorTerms gt = generator_terms(pt, field_from_value(vp), spec, insurer);
                const double scale = std::max(1.0, gt.max_abs_term());
                const double res = std::abs(hamiltonian(pt, vf, spec, insurer)) / scale;
                const SaddleReport rep = saddle_check(prof, insurer, t, y, z);
                double grad = 0.0;
                bool curv_ok = true;
                for (const auto& e : rep.entries) {
                    grad = std::max(grad, std::abs(e.gradient));
                    curv_ok = curv_ok && e.curvature_ok;
                }
                worst = std::max(worst, res);
                std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6e,%.6e,%s\n", t, y, z, res,
                              grad, curv_ok ? "ok" : "curvature_fail");
                f << buf;
            }
        }
    }
    os << "wrote " << path << " (worst scaled residual " << worst << ")\n";
    return 0;
}

inline int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                        std::size_t paths, double dt, std::uint64_t seed,
                        const std::string& measure_text, const std::string& mode_text,
                        std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    PathConfig cfg;
    cfg.n_paths = paths;
    cfg.dt = dt;
    cfg.seed = seed;
    cfg.store_paths = std::min<std::size_t>(paths, 10);
    if (measure_text == "reference") {
        cfg.measure = Measure::reference;
    } else if (measure_text.rfind("worst-case:", 0) == 0) {
        cfg.measure = Measure::worst_case;
        cfg.worst_case_insurer = std::stoul(measure_text.substr(11)) - 1;
    } else {
        throw std::invalid_argument("simulate: --measure must be reference or worst-case:<i>");
    }
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/paths.csv";
    std::ofstream f(path, std::ios::binary);
    char buf[64];

    if (mode_text == "cpoisson") {
        cfg.mode = ClaimMode::compound_poisson;
        const CpResult res = simulate_compound_poisson(spec, cfg);
        f << "path,t";
        for (std::size_t k = 0; k < spec.n(); ++k) f << ",x_" << (k + 1);
        f << "\n";
        const std::size_t thin = std::max<std::size_t>(1, (res.times.size() - 1) / 500);
        for (std::size_t p = 0; p < res.x.size(); ++p)
            for (std::size_t j = 0; j < res.times.size(); j += thin) {
                f << p << ",";
                std::snprintf(buf, sizeof buf, "%.12g", res.times[j]);
                f << buf;
                for (std::size_t k = 0; k < spec.n(); ++k) {
                    std::snprintf(buf, sizeof buf, ",%.12g", res.x[p][k][j]);
                    f << buf;
                }
                f << "\n";
            }
        RunningStats claims;
        for (double v : res.claims_T[0]) claims.add(v);
        os << "aggregate claims of insurer 1 at T: mean " << claims.mean << ", var "
           << claims.variance() << "\n";
        const double be =
            berry_esseen_bound(default_claim_model(spec.insurers[0]), spec.insurers[0],
                               spec.market, spec.market.horizon);
        os << "normal-approximation bound at T (insurer 1): " << be << "\n";
    } else if (mode_text == "diffusion") {
        const EquilibriumProfile prof = compute_equilibrium(spec);
        const SimResult res = simulate(prof, cfg);
        f << "path,t,z";
        for (std::size_t k = 0; k < spec.n(); ++k) f << ",x_" << (k + 1) << ",y_" << (k + 1);
        f << "\n";
        const std::size_t thin = std::max<std::size_t>(1, (res.bundle.times.size() - 1) / 500);
        for (std::size_t p = 0; p < res.bundle.z.size(); ++p)
            for (std::size_t j = 0; j < res.bundle.times.size(); j += thin) {
                f << p << ",";
                std::snprintf(buf, sizeof buf, "%.12g,%.12g", res.bundle.times[j],
                              res.bundle.z[p][j]);
                f << buf;
                for (std::size_t k = 0; k < spec.n(); ++k) {
                    std::snprintf(buf, sizeof buf, ",%.12g,%.12g", res.bundle.x[p][k][j],
                                  res.bundle.y[p][k][j]);
                    f << buf;
                }
                f << "\n";
            }
        RunningStats zs;
        for (double v : res.z_T) zs.add(v);
        os << "Z(T): mean " << zs.mean << ", analytic CIR mean "
           << spec.market.z0 * std::exp(-spec.market.kappa * spec.market.horizon) +
                  spec.market.zbar *
                      (1.0 - std::exp(-spec.market.kappa * spec.market.horizon))
           << "\n";
        for (std::size_t k = 0; k < spec.n(); ++k) {
            RunningStats xs;
            for (double v : res.x_T[k]) xs.add(v);
            os << "X_" << (k + 1) << "(T): mean " << xs.mean << ", sd "
               << std::sqrt(xs.variance()) << "\n";
        }
        os << "truncated steps: "
           << static_cast<double>(res.truncated_steps) /
                  static_cast<double>(std::max<std::size_t>(res.total_steps, 1))
           << " of all steps\n";
    } else {
        throw std::invalid_argument("simulate: --mode must be diffusion or cpoisson");
    }
    os << "wrote " << path << "\n";
    return 0;
}

inline int cmd_sweep(const std::string& config_path, const std::string& out_dir,
                     const std::string& target_text, const std::string& values_text,
                     const std::string& quantity_text, std::size_t insurer, std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    const SweepTarget target = parse_target(target_text);
    const std::vector<double> values = parse_value_list(values_text);
    SweepQuantity q;
    if (quantity_text == "a")
        q = SweepQuantity::retention;
    else if (quantity_text == "Pi")
        q = SweepQuantity::investment;
    else
        throw std::invalid_argument("sweep: --quantity must be a or Pi");
    const SweepResult sr = run_sweep(spec, target, values, q, insurer);
    std::filesystem::create_directories(out_dir);
    std::string base = target.key;
    if (!target.is_market) base = "insurer" + std::to_string(target.insurer + 1) + "_" + base;
    const std::string basename = out_dir + "/sweep_" + quantity_text + "_" + base;
    write_sweep_outputs(sr, target, basename);
    os << "wrote " << basename << ".csv (direction "
       << curve_direction(sr) << ")\n";
    return 0;
}

inline int cmd_figures(const std::string& config_path, const std::string& out_dir,
                       std::ostream& os) {
    const GameSpec spec = load_game_spec(config_path);
    const auto outcomes = reproduce_figures(spec, out_dir);
    for (const auto& oc : outcomes) {
        os << oc.fig.name << ": direction "
           << (oc.computed_direction > 0 ? "increasing"
                                         : (oc.computed_direction < 0 ? "decreasing" : "mixed"));
        if (oc.asserted)
            os << " (expected " << (oc.fig.expected_direction > 0 ? "increasing" : "decreasing")
               << (oc.matches ? ", matches)" : ", MISMATCH)");
        else
            os << " (reported, not asserted)";
        os << "\n";
    }
    os << "wrote " << outcomes.size() << " figure families under " << out_dir << "\n";
    return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& os = std::cout) {
    CLI::App app{"robust reinsurance-investment game toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::size_t grid = 2001, insurer = 0, paths = 1000;
    double dt = 1e-3, literal_n = 0.0;
    std::uint64_t seed = 1;
    std::string weights_text, measure_text = "reference", mode_text = "diffusion";
    std::string target_text, values_text, quantity_text = "a";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "game specification file")->required();
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* validate_cmd = app.add_subcommand("validate", "check model preconditions");
    validate_cmd->add_option("config", config_path)->required();

    CLI::App* eq_cmd = app.add_subcommand("equilibrium", "compute and export the equilibrium");
    add_common(eq_cmd);
    eq_cmd->add_option("--grid", grid, "time-grid nodes");

    CLI::App* mf_cmd = app.add_subcommand("meanfield", "compute the mean-field equilibrium");
    add_common(mf_cmd);
    mf_cmd->add_option("--grid", grid, "time-grid nodes");
    mf_cmd->add_option("--weights", weights_text, "atom weights (comma separated)");
    mf_cmd->add_option("--literal-n", literal_n, "use the pre-limit R factor with this n");

    CLI::App* rc_cmd = app.add_subcommand("residual-check", "objective residuals at the candidate");
    add_common(rc_cmd);
    rc_cmd->add_option("--insurer", insurer, "insurer index (0-based)");

    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo paths");
    add_common(sim_cmd);
    sim_cmd->add_option("--paths", paths, "number of paths");
    sim_cmd->add_option("--dt", dt, "step size in years");
    sim_cmd->add_option("--seed", seed, "master seed");
    sim_cmd->add_option("--measure", measure_text, "reference | worst-case:<i>");
    sim_cmd->add_option("--mode", mode_text, "diffusion | cpoisson");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "parameter sweep");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--target", target_text, "market.<key> or insurers[<i>].<key>")
        ->required();
    sweep_cmd->add_option("--values", values_text, "comma-separated values")->required();
    sweep_cmd->add_option("--quantity", quantity_text, "a | Pi");
    sweep_cmd->add_option("--insurer", insurer, "insurer index (0-based)");

    CLI::App* fig_cmd = app.add_subcommand("figures", "sensitivity families and directions");
    add_common(fig_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(config_path, os);
        if (eq_cmd->parsed()) return cmd_equilibrium(config_path, out_dir, grid, os);
        if (mf_cmd->parsed())
            return cmd_meanfield(config_path, out_dir, grid, weights_text, literal_n, os);
        if (rc_cmd->parsed()) return cmd_residual_check(config_path, out_dir, insurer, os);
        if (sim_cmd->parsed())
            return cmd_simulate(config_path, out_dir, paths, dt, seed, measure_text, mode_text,
                                os);
        if (sweep_cmd->parsed())
            return cmd_sweep(config_path, out_dir, target_text, values_text, quantity_text,
                             insurer, os);
        if (fig_cmd->parsed()) return cmd_figures(config_path, out_dir, os);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 3;
    } catch (const NoEquilibriumError& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace rig::cli
