#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msvol/asymptotics.hpp"
#include "msvol/montecarlo.hpp"

namespace msvol {

// Closed-form log-spot derivative table for the Gaussian-bump payoff priced
// under a constant-volatility lognormal model; same layout as log_greeks so
// the expansion assembly can run on smooth payoffs too.
LogGreeks bump_log_greeks(double tau, double spot, double strike, double rate,
                          double sigma);

struct ScalingOptions {
    std::vector<double> eps_ladder = {0.32, 0.16, 0.08, 0.04};
    bool delta_equals_eps = true;  // false freezes the slow factor (delta = 0)
    PayoffKind payoff = PayoffKind::SmoothBump;
    double tau = 0.5;
    double spot = 100.0;
    double strike = 100.0;
    std::int64_t pairs = 4000000;
    std::uint64_t seed = kDefaultSeed;
    bool control_variate = true;
    int threads = 0;
    double slope_threshold = 1.2;
    double dt_override = 0.0;  // 0 = per-rung policy min(eps/20, tau/500)
};

struct ScalingRung {
    double eps = 0.0;
    double delta = 0.0;
    int steps = 0;
    double dt = 0.0;
    double approx_price = 0.0;
    double mc_price = 0.0;
    double mc_se = 0.0;
    double abs_error = 0.0;
};

struct ScalingReport {
    std::string regime;  // "combined-scales" or "fast-scale-only"
    std::string payoff;
    // "slope": fit log-error against log-eps. "null": the model has no
    // corrections (constant volatility), so errors must be noise-level instead.
    std::string mode;
    double tau = 0.0, spot = 0.0, strike = 0.0;
    std::int64_t pairs = 0;
    std::uint64_t seed = 0;
    bool control_variate = false;
    double slope_threshold = 0.0;
    std::vector<ScalingRung> rungs;
    double slope = 0.0;
    bool conclusive = false;
    bool pass = false;
    std::int64_t recommended_pairs = 0;  // only meaningful when inconclusive
};

// Runs the expansion-vs-simulation error ladder. The base model's eps/delta
// are overridden per rung; each rung gets its own decorrelated seed stream.
ScalingReport order_scaling_experiment(const ModelSpec& base,
                                       const ScalingOptions& options);

std::string to_json(const ScalingReport& report);
std::string to_csv(const ScalingReport& report);

const char* payoff_name(PayoffKind kind);

} // namespace msvol
