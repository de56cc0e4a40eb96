#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rig/params.hpp"

namespace rig {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t j = 0; j < byte && j < text.size(); ++j)
        if (text[j] == '\n') ++line;
    return std::to_string(line);
}

inline double number_field(const nlohmann::json& obj, const std::string& key,
                           const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + ": key '" + key + "' must be a decimal number");
    return v.get<double>();
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace detail

// Game specification file: a JSON object with exactly two sections,
//   "market":   {r, kappa, zbar, nu, rho, m, a, b, z0, T, lambda_hat, eta_hat}
//   "insurers": [{x0, lambda, mu1, mu2, eta, theta, delta, psi1, psi2, psi3, psi4}, ...]
// All values decimal; unknown keys are errors.
inline GameSpec parse_game_spec(const std::string& text, const std::string& name = "config") {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(name + ":" + detail::line_of(text, e.byte) + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError(name + ": top level must be an object");
    detail::reject_unknown(root, {"market", "insurers"}, name);
    if (!root.contains("market") || !root.contains("insurers"))
        throw ConfigError(name + ": both 'market' and 'insurers' sections are required");

    const auto& mj = root.at("market");
    if (!mj.is_object()) throw ConfigError(name + ".market: must be an object");
    detail::reject_unknown(
        mj, {"r", "kappa", "zbar", "nu", "rho", "m", "a", "b", "z0", "T", "lambda_hat", "eta_hat"},
        name + ".market");
    GameSpec spec;
    spec.market.r = detail::number_field(mj, "r", name + ".market");
    spec.market.kappa = detail::number_field(mj, "kappa", name + ".market");
    spec.market.zbar = detail::number_field(mj, "zbar", name + ".market");
    spec.market.nu = detail::number_field(mj, "nu", name + ".market");
    spec.market.rho = detail::number_field(mj, "rho", name + ".market");
    spec.market.m = detail::number_field(mj, "m", name + ".market");
    spec.market.a = detail::number_field(mj, "a", name + ".market");
    spec.market.b = detail::number_field(mj, "b", name + ".market");
    spec.market.z0 = detail::number_field(mj, "z0", name + ".market");
    spec.market.horizon = detail::number_field(mj, "T", name + ".market");
    spec.market.lambda_hat = detail::number_field(mj, "lambda_hat", name + ".market");
    spec.market.eta_hat = detail::number_field(mj, "eta_hat", name + ".market");

    const auto& ij = root.at("insurers");
    if (!ij.is_array() || ij.empty())
        throw ConfigError(name + ".insurers: must be a non-empty array");
    for (std::size_t k = 0; k < ij.size(); ++k) {
        const std::string where = name + ".insurers[" + std::to_string(k) + "]";
        const auto& rec = ij.at(k);
        if (!rec.is_object()) throw ConfigError(where + ": must be an object");
        detail::reject_unknown(rec,
                               {"x0", "lambda", "mu1", "mu2", "eta", "theta", "delta", "psi1",
                                "psi2", "psi3", "psi4"},
                               where);
        InsurerType ins;
        ins.x0 = detail::number_field(rec, "x0", where);
        ins.lambda = detail::number_field(rec, "lambda", where);
        ins.mu1 = detail::number_field(rec, "mu1", where);
        ins.mu2 = detail::number_field(rec, "mu2", where);
        ins.eta = detail::number_field(rec, "eta", where);
        ins.theta = detail::number_field(rec, "theta", where);
        ins.delta = detail::number_field(rec, "delta", where);
        ins.psi1 = detail::number_field(rec, "psi1", where);
        ins.psi2 = detail::number_field(rec, "psi2", where);
        ins.psi3 = detail::number_field(rec, "psi3", where);
        ins.psi4 = detail::number_field(rec, "psi4", where);
        spec.insurers.push_back(ins);
    }
    return spec;
}

inline GameSpec load_game_spec(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_game_spec(ss.str(), path);
}

}  // namespace rig
