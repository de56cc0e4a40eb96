#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rig/csv.hpp"
#include "rig/equilibrium.hpp"
#include "rig/params.hpp"
#include "rig/svg.hpp"

namespace rig {

// Parameter path of the form "market.<key>" or "insurers[<idx>].<key>".
struct SweepTarget {
    bool is_market = false;
    std::size_t insurer = 0;
    std::string key;

    std::string to_string() const {
        if (is_market) return "market." + key;
        return "insurers[" + std::to_string(insurer) + "]." + key;
    }
};

inline SweepTarget parse_target(const std::string& text) {
    SweepTarget t;
    if (text.rfind("market.", 0) == 0) {
        t.is_market = true;
        t.key = text.substr(7);
        return t;
    }
    if (text.rfind("insurers[", 0) == 0) {
        const auto close = text.find(']');
        if (close == std::string::npos || close + 1 >= text.size() || text[close + 1] != '.')
            throw std::invalid_argument("parse_target: expected insurers[<idx>].<key>");
        t.insurer = std::stoul(text.substr(9, close - 9));
        t.key = text.substr(close + 2);
        return t;
    }
    throw std::invalid_argument("parse_target: expected market.<key> or insurers[<idx>].<key>");
}

inline double* target_ref(GameSpec& spec, const SweepTarget& t) {
    if (t.is_market) {
        MarketParams& m = spec.market;
        if (t.key == "r") return &m.r;
        if (t.key == "kappa") return &m.kappa;
        if (t.key == "zbar") return &m.zbar;
        if (t.key == "nu") return &m.nu;
        if (t.key == "rho") return &m.rho;
        if (t.key == "m") return &m.m;
        if (t.key == "a") return &m.a;
        if (t.key == "b") return &m.b;
        if (t.key == "z0") return &m.z0;
        if (t.key == "T") return &m.horizon;
        if (t.key == "lambda_hat") return &m.lambda_hat;
        if (t.key == "eta_hat") return &m.eta_hat;
        throw std::invalid_argument("target_ref: unknown market key '" + t.key + "'");
    }
    if (t.insurer >= spec.n())
        throw std::invalid_argument("target_ref: insurer index out of range");
    InsurerType& ins = spec.insurers[t.insurer];
    if (t.key == "x0") return &ins.x0;
    if (t.key == "lambda") return &ins.lambda;
    if (t.key == "mu1") return &ins.mu1;
    if (t.key == "mu2") return &ins.mu2;
    if (t.key == "eta") return &ins.eta;
    if (t.key == "theta") return &ins.theta;
    if (t.key == "delta") return &ins.delta;
    if (t.key == "psi1") return &ins.psi1;
    if (t.key == "psi2") return &ins.psi2;
    if (t.key == "psi3") return &ins.psi3;
    if (t.key == "psi4") return &ins.psi4;
    throw std::invalid_argument("target_ref: unknown insurer key '" + t.key + "'");
}

enum class SweepQuantity { retention, investment };  // a*_i(t) or Pi_i(t)

struct SweepResult {
    std::vector<double> times;
    std::vector<double> values;               // swept parameter values
    std::vector<std::vector<double>> curves;  // [value][node]
};

// One equilibrium per swept value; values run in a small worker pool and the
// output order follows the input order regardless of scheduling.
inline SweepResult run_sweep(const GameSpec& base, const SweepTarget& target,
                             const std::vector<double>& values, SweepQuantity quantity,
                             std::size_t insurer = 0, std::size_t grid_nodes = 201) {
    if (values.empty()) throw std::invalid_argument("run_sweep: no values");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("run_sweep: non-finite sweep value");
    SweepResult out;
    out.values = values;
    out.times = TimeGrid(base.market.horizon, grid_nodes).times();
    out.curves.assign(values.size(), {});

    auto compute_one = [&](std::size_t idx) {
        GameSpec spec = base;
        *target_ref(spec, target) = values[idx];
        const EquilibriumProfile prof = compute_equilibrium(spec, grid_nodes);
        out.curves[idx] =
            quantity == SweepQuantity::retention ? prof.a[insurer] : prof.Pi[insurer];
    };

    unsigned n_threads =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(values.size())));
    if (n_threads <= 1) {
        for (std::size_t idx = 0; idx < values.size(); ++idx) compute_one(idx);
    } else {
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < n_threads; ++w)
            workers.emplace_back([&, w]() {
                for (std::size_t idx = w; idx < values.size(); idx += n_threads)
                    compute_one(idx);
            });
        for (auto& th : workers) th.join();
    }
    return out;
}

// Pointwise ordering of the curve family: +1 if each later curve dominates the
// previous one at every grid time, -1 for the reverse, 0 otherwise.
inline int curve_direction(const SweepResult& sr, double tol = 1e-12) {
    bool incr = true, decr = true;
    for (std::size_t v = 0; v + 1 < sr.curves.size(); ++v) {
        for (std::size_t j = 0; j < sr.times.size(); ++j) {
            const double d = sr.curves[v + 1][j] - sr.curves[v][j];
            if (d < -tol) incr = false;
            if (d > tol) decr = false;
        }
    }
    if (incr && !decr) return 1;
    if (decr && !incr) return -1;
    return 0;
}

inline CsvTable sweep_table(const SweepResult& sr, const SweepTarget& target) {
    CsvTable table;
    table.header.push_back("t");
    table.columns.push_back(sr.times);
    char buf[64];
    for (std::size_t v = 0; v < sr.values.size(); ++v) {
        std::snprintf(buf, sizeof buf, "%s=%.6g", target.key.c_str(), sr.values[v]);
        table.header.emplace_back(buf);
        table.columns.push_back(sr.curves[v]);
    }
    return table;
}

inline void write_sweep_outputs(const SweepResult& sr, const SweepTarget& target,
                                const std::string& basename) {
    sweep_table(sr, target).write_file(basename + ".csv");
    std::vector<SvgSeries> series;
    char buf[64];
    for (std::size_t v = 0; v < sr.values.size(); ++v) {
        std::snprintf(buf, sizeof buf, "%s=%.6g", target.key.c_str(), sr.values[v]);
        series.push_back(SvgSeries{buf, sr.curves[v]});
    }
    write_svg_chart(basename + ".svg", target.to_string(), sr.times, series);
}

// Sensitivity families: swept parameter, line values, plotted quantity and the
// expected pointwise direction (+1/-1), or 0 where the direction is computed
// and reported without assertion.
struct FigureSpec {
    std::string name;
    std::string target;
    std::vector<double> values;
    SweepQuantity quantity = SweepQuantity::retention;
    int expected_direction = 0;
};

inline std::vector<double> scaled_values(double base) {
    if (base == 0.0) return {0.0, 0.5, 1.0, 1.5};
    return {0.5 * base, base, 1.5 * base, 2.0 * base};
}

inline std::vector<FigureSpec> default_figures(const GameSpec& base) {
    const auto& i0 = base.insurers[0];
    const auto& i1 = base.insurers.size() > 1 ? base.insurers[1] : base.insurers[0];
    std::vector<FigureSpec> figs;
    auto R = SweepQuantity::retention;
    auto I = SweepQuantity::investment;
    figs.push_back({"a1_vs_lambda_hat", "market.lambda_hat",
                    scaled_values(base.market.lambda_hat), R, +1});
    figs.push_back({"a1_vs_eta_hat", "market.eta_hat", scaled_values(base.market.eta_hat), R, +1});
    figs.push_back({"a1_vs_theta1", "insurers[0].theta", {0.1, 0.4, 0.7, 0.9}, R, +1});
    figs.push_back({"a1_vs_theta2", "insurers[1].theta", {0.1, 0.4, 0.7, 0.9}, R, +1});
    figs.push_back({"a1_vs_delta1", "insurers[0].delta", scaled_values(i0.delta), R, -1});
    figs.push_back({"a1_vs_delta2", "insurers[1].delta", scaled_values(i1.delta), R, -1});
    figs.push_back({"a1_vs_psi1_3", "insurers[0].psi3", scaled_values(i0.psi3), R, -1});
    figs.push_back({"a1_vs_psi2_3", "insurers[1].psi3", scaled_values(i1.psi3), R, 0});
    figs.push_back({"a1_vs_psi1_4", "insurers[0].psi4", scaled_values(i0.psi4), R, -1});
    figs.push_back({"a1_vs_psi2_4", "insurers[1].psi4", scaled_values(i1.psi4), R, 0});
    figs.push_back({"Pi1_vs_theta1", "insurers[0].theta", {0.1, 0.4, 0.7, 0.9}, I, +1});
    figs.push_back({"Pi1_vs_theta2", "insurers[1].theta", {0.1, 0.4, 0.7, 0.9}, I, +1});
    figs.push_back({"Pi1_vs_delta1", "insurers[0].delta", scaled_values(i0.delta), I, -1});
    figs.push_back({"Pi1_vs_delta2", "insurers[1].delta", scaled_values(i1.delta), I, -1});
    figs.push_back({"Pi1_vs_psi1_1", "insurers[0].psi1", scaled_values(i0.psi1), I, -1});
    figs.push_back({"Pi1_vs_psi2_1", "insurers[1].psi1", scaled_values(i1.psi1), I, -1});
    figs.push_back({"Pi1_vs_psi1_2", "insurers[0].psi2", scaled_values(i0.psi2), I, -1});
    figs.push_back({"Pi1_vs_psi2_2", "insurers[1].psi2", scaled_values(i1.psi2), I, -1});
    if (base.insurers.size() < 2) {
        std::erase_if(figs, [](const FigureSpec& f) {
            return f.target.rfind("insurers[1]", 0) == 0;
        });
    }
    return figs;
}

struct FigureOutcome {
    FigureSpec fig;
    int computed_direction = 0;
    bool asserted = false;
    bool matches = false;  // meaningful only when asserted
};

// One CSV (and SVG) per sensitivity family plus a summary of computed
// directions; curves are insurer 1's a*(t) or Pi(t).
inline std::vector<FigureOutcome> reproduce_figures(const GameSpec& base,
                                                    const std::string& out_dir,
                                                    std::size_t grid_nodes = 201) {
    std::filesystem::create_directories(out_dir);
    std::vector<FigureOutcome> outcomes;
    for (const FigureSpec& fig : default_figures(base)) {
        const SweepTarget target = parse_target(fig.target);
        const SweepResult sr = run_sweep(base, target, fig.values, fig.quantity, 0, grid_nodes);
        write_sweep_outputs(sr, target, out_dir + "/" + fig.name);
        FigureOutcome oc;
        oc.fig = fig;
        oc.computed_direction = curve_direction(sr);
        oc.asserted = fig.expected_direction != 0;
        oc.matches = oc.computed_direction == fig.expected_direction;
        outcomes.push_back(oc);
    }
    std::ofstream os(out_dir + "/summary.csv", std::ios::binary);
    os << "figure,target,quantity,computed_direction,expected_direction,asserted,matches\n";
    for (const auto& oc : outcomes) {
        os << oc.fig.name << "," << oc.fig.target << ","
           << (oc.fig.quantity == SweepQuantity::retention ? "a1" : "Pi1") << ","
           << oc.computed_direction << "," << oc.fig.expected_direction << ","
           << (oc.asserted ? 1 : 0) << "," << (oc.asserted ? (oc.matches ? 1 : 0) : 1) << "\n";
    }
    return outcomes;
}

}  // namespace rig
