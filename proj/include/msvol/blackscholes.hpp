#pragma once

#include <Eigen/Core>

#include "msvol/errors.hpp"

namespace msvol {

enum class OptionKind { Call, Put };

// Contract terms shared by every pricing routine. sigma is passed separately
// because the expansion evaluates the same contract at an effective level vol.
struct OptionSpec {
    double tau = 0.0;   // time to maturity, years
    double spot = 0.0;  // x
    double strike = 0.0;
    double rate = 0.0;
    OptionKind kind = OptionKind::Call;
};

// Derivatives in log-spot. d(a,b) holds D1^a D2^b applied to the price, where
// D1 = x d/dx and D2 = x^2 d^2/dx^2; both commute. vega/vomma are plain sigma
// derivatives of the price.
struct LogGreeks {
    double price = 0.0;
    Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
    double vega = 0.0;
    double vomma = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    double d1p() const { return d(1, 0); }
    double d2p() const { return d(0, 1); }
    double d1d2p() const { return d(1, 1); }
    double d1sq_p() const { return d(2, 0); }
    double d1sq_d2p() const { return d(2, 1); }
    double d2sq_p() const { return d(0, 2); }
};

double norm_pdf(double z);
double norm_cdf(double z);

// Black-Scholes price. tau == 0 returns the terminal payoff.
double bs_price(const OptionSpec& opt, double sigma);

// Closed-form log-spot derivative ladder plus vega and vomma. Refuses tau == 0.
LogGreeks log_greeks(const OptionSpec& opt, double sigma);

// Safeguarded Newton inversion of bs_price in sigma over [1e-8, 10].
double implied_vol(const OptionSpec& opt, double price);

} // namespace msvol
