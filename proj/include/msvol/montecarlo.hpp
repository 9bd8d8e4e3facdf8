#pragma once

#include <cstdint>

#include "msvol/model.hpp"

namespace msvol {

// SmoothBump is a C-infinity test payoff: a Gaussian bump in log-moneyness,
// amplitude 10, width 0.2. Spot is the identity payoff used for martingale
// checks.
enum class PayoffKind { Call, Put, SmoothBump, Spot };

double payoff_value(PayoffKind kind, double x, double strike);

// Discounted expectation of the payoff when the terminal log-price is
// Gaussian: log X ~ N(log spot + (rate - sigma^2/2) tau, sigma^2 tau).
double lognormal_payoff_expectation(PayoffKind kind, double tau, double spot,
                                    double strike, double rate, double sigma);

struct McConfig {
    std::int64_t pairs = 1000000;  // antithetic pairs
    std::uint64_t seed = kDefaultSeed;
    double dt_override = 0.0;  // 0 = policy min(eps/20, tau/500)
    bool control_variate = false;  // constant-volatility companion asset
    int threads = 0;  // 0 = MSVOL_THREADS env, then hardware
};

struct McResult {
    double price = 0.0;
    double std_error = 0.0;
    std::int64_t pairs = 0;
    int steps = 0;
    double dt = 0.0;
};

// Euler simulation of (log X, Y, Z) with exact increment correlation.
// Deterministic for a given config: work is cut into fixed 4096-pair chunks,
// each with its own seeded stream, and chunk sums are reduced in index order,
// so the result is bit-identical for any worker count.
McResult mc_price(const ModelSpec& model, PayoffKind payoff, double tau,
                  double spot, double strike, const McConfig& cfg);

// Terminal fast-factor moments (mean, variance, their standard errors) for
// ergodicity checks.
struct FactorMoments {
    double mean = 0.0;
    double mean_se = 0.0;
    double var = 0.0;
    double var_se = 0.0;
};

FactorMoments mc_fast_factor_moments(const ModelSpec& model, double tau,
                                     const McConfig& cfg);

} // namespace msvol
