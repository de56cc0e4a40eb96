#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rig {

// Market, reinsurer and common-shock constants. Instantaneous stock volatility is
// sigma(z) = a*sqrt(z) + b/sqrt(z), market price of risk m*sqrt(z), variance z is
// CIR with speed kappa, level zbar, vol-of-vol nu, driver correlated with the
// equity driver through rho.
struct MarketParams {
    double r = 0.0;           // risk-free rate p.a.
    double kappa = 0.0;       // variance mean-reversion speed
    double zbar = 0.0;        // long-run variance level
    double nu = 0.0;          // vol-of-vol
    double rho = 0.0;         // corr(equity driver, variance driver), in (-1,1)
    double m = 0.0;           // market-price-of-risk slope
    double a = 0.0;           // volatility weight on sqrt(z)
    double b = 0.0;           // volatility weight on 1/sqrt(z)
    double z0 = 0.0;          // initial variance
    double horizon = 0.0;     // T, years
    double lambda_hat = 0.0;  // common claim intensity p.a.
    double eta_hat = 0.0;     // reinsurer safety loading (variance principle)

    double feller_lhs() const { return 2.0 * kappa * zbar; }
    double feller_rhs() const { return nu * nu; }
    bool feller_ok() const { return feller_lhs() > feller_rhs(); }
};

// sigma(z) = a*sqrt(z) + b/sqrt(z); z must be positive.
inline double vol(double z, const MarketParams& mkt) {
    if (!(z > 0.0)) throw std::domain_error("vol: z must be positive");
    const double s = std::sqrt(z);
    return mkt.a * s + mkt.b / s;
}

// One insurer's claim, preference, competition and ambiguity parameters.
struct InsurerType {
    double x0 = 0.0;      // initial surplus
    double lambda = 0.0;  // idiosyncratic claim intensity p.a.
    double mu1 = 0.0;     // claim-size mean
    double mu2 = 0.0;     // claim-size second moment
    double eta = 0.0;     // insurer safety loading (expected value principle)
    double theta = 0.0;   // competition weight in [0,1]
    double delta = 0.0;   // CARA risk aversion, > 0
    double psi1 = 0.0;    // ambiguity aversion: equity risk
    double psi2 = 0.0;    // ambiguity aversion: volatility risk
    double psi3 = 0.0;    // ambiguity aversion: common insurance risk
    double psi4 = 0.0;    // ambiguity aversion: idiosyncratic insurance risk

    // beta_j = -psi_j / delta <= 0; j in 1..4.
    double beta(int j) const {
        switch (j) {
            case 1: return -psi1 / delta;
            case 2: return -psi2 / delta;
            case 3: return -psi3 / delta;
            case 4: return -psi4 / delta;
            default: throw std::invalid_argument("beta: j must be 1..4");
        }
    }
    double beta1() const { return -psi1 / delta; }
    double beta2() const { return -psi2 / delta; }
    double beta3() const { return -psi3 / delta; }
    double beta4() const { return -psi4 / delta; }

    // Insurance premium rate, expected value principle.
    double premium(const MarketParams& mkt) const {
        return (1.0 + eta) * (lambda + mkt.lambda_hat) * mu1;
    }
    // Aggregate-claims diffusion loadings: common part sqrt(lambda_hat)*mu1 and
    // idiosyncratic part sqrt((lambda_hat+lambda)*mu2 - lambda_hat*mu1^2).
    double common_sd(const MarketParams& mkt) const { return std::sqrt(mkt.lambda_hat) * mu1; }
    double idio_var(const MarketParams& mkt) const {
        return (mkt.lambda_hat + lambda) * mu2 - mkt.lambda_hat * mu1 * mu1;
    }
    double idio_sd(const MarketParams& mkt) const { return std::sqrt(idio_var(mkt)); }
};

// Correlation of the aggregate-claims diffusion drivers of two insurers.
inline double claim_correlation(const InsurerType& i, const InsurerType& k,
                                const MarketParams& mkt) {
    const double num = mkt.lambda_hat * i.mu1 * k.mu1;
    const double den = std::sqrt((mkt.lambda_hat + i.lambda) * (mkt.lambda_hat + k.lambda) *
                                 i.mu2 * k.mu2);
    if (num == 0.0) return 0.0;
    return num / den;
}

struct GameSpec {
    MarketParams market;
    std::vector<InsurerType> insurers;

    std::size_t n() const { return insurers.size(); }
    double theta_sum() const {
        double s = 0.0;
        for (const auto& ins : insurers) s += ins.theta;
        return s;
    }
    double mean_x0() const {
        double s = 0.0;
        for (const auto& ins : insurers) s += ins.x0;
        return s / static_cast<double>(insurers.size());
    }
    // Initial relative surplus y0_i = x0_i - theta_i * mean(x0).
    double y0(std::size_t i) const { return insurers[i].x0 - insurers[i].theta * mean_x0(); }
};

struct ValidationCheck {
    std::string name;
    bool pass = false;
    double lhs = 0.0;  // computed left side of the inequality / quantity checked
    double rhs = 0.0;  // computed right side / bound
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const ValidationCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

// validate(GameSpec) lives in validation.hpp: the volatility-risk admissibility
// check needs the Riccati coefficient from value_function.hpp.

}  // namespace rig
