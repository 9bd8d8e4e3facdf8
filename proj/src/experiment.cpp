#include "msvol/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

namespace msvol {

LogGreeks bump_log_greeks(double tau, double spot, double strike, double rate,
                          double sigma) {
    if (!(tau > 0.0) || !(spot > 0.0) || !(strike > 0.0) || !(sigma > 0.0))
        throw DataError("bump greeks require positive tau, spot, strike, sigma");

    // Price is a Gaussian in log-spot: P = C exp(-q^2 / (2 Sigma)) with
    // Sigma = width^2 + sigma^2 tau, so every log-spot derivative is the
    // price times a Hermite polynomial.
    const double w2 = 0.2 * 0.2;
    const double sigma2t = sigma * sigma * tau;
    const double big = w2 + sigma2t;
    const double q = std::log(spot / strike) + (rate - 0.5 * sigma * sigma) * tau;
    const double price = 10.0 * std::exp(-rate * tau) * std::sqrt(w2 / big) *
                         std::exp(-q * q / (2.0 * big));
    const double u = q / std::sqrt(big);
    const double rt = 1.0 / std::sqrt(big);
    const double u2 = u * u;
    // probabilists' Hermite values at u, scaled by (-1/sqrt(Sigma))^n
    double dn[7];
    dn[0] = 1.0;
    const double he[7] = {1.0,
                          u,
                          u2 - 1.0,
                          u * (u2 - 3.0),
                          u2 * u2 - 6.0 * u2 + 3.0,
                          u * (u2 * u2 - 10.0 * u2 + 15.0),
                          u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0};
    double scale = 1.0;
    for (int n = 1; n <= 6; ++n) {
        scale *= -rt;
        dn[n] = he[n] * scale;
    }
    for (int n = 0; n <= 6; ++n) dn[n] *= price;

    LogGreeks g;
    g.price = price;
    g.d(0, 0) = price;
    g.d(1, 0) = dn[1];
    g.d(2, 0) = dn[2];
    g.d(0, 1) = dn[2] - dn[1];
    g.d(1, 1) = dn[3] - dn[2];
    g.d(2, 1) = dn[4] - dn[3];
    g.d(0, 2) = dn[4] - 2.0 * dn[3] + dn[2];
    g.d(1, 2) = dn[5] - 2.0 * dn[4] + dn[3];
    g.d(2, 2) = dn[6] - 2.0 * dn[5] + dn[4];
    g.vega = tau * sigma * g.d(0, 1);
    g.vomma = tau * g.d(0, 1) + tau * tau * sigma * sigma * g.d(0, 2);
    g.d1 = 0.0;
    g.d2 = 0.0;
    return g;
}

const char* payoff_name(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::Call: return "call";
        case PayoffKind::Put: return "put";
        case PayoffKind::SmoothBump: return "smooth-bump";
        case PayoffKind::Spot: return "spot";
    }
    return "?";
}

namespace {

double expansion_price(const ModelSpec& model, PayoffKind payoff, double tau,
                       double spot, double strike) {
    const ModelCoefficients mc = group_params_from_model(model, model.z0);
    const GroupParams& phi = mc.params;
    switch (payoff) {
        case PayoffKind::Call:
            return price_terms({tau, spot, strike, model.rate, OptionKind::Call}, phi)
                .total;
        case PayoffKind::Put:
            return price_terms({tau, spot, strike, model.rate, OptionKind::Put}, phi)
                .total;
        case PayoffKind::SmoothBump:
            return price_terms_from_greeks(
                       tau,
                       bump_log_greeks(tau, spot, strike, model.rate, phi.sigma_star),
                       phi)
                .total;
        case PayoffKind::Spot:
            throw DataError("spot payoff has no expansion; use it only for MC checks");
    }
    throw DataError("unknown payoff");
}

} // namespace

ScalingReport order_scaling_experiment(const ModelSpec& base,
                                       const ScalingOptions& options) {
    base.validate();
    if (options.eps_ladder.size() < 2)
        throw DataError("scaling ladder needs at least two rungs");
    for (double e : options.eps_ladder)
        if (!(e > 0.0 && e <= 1.0))
            throw DataError("ladder eps values must lie in (0, 1]");

    ScalingReport rep;
    rep.regime = options.delta_equals_eps ? "combined-scales" : "fast-scale-only";
    rep.payoff = payoff_name(options.payoff);
    rep.mode = base.vol_high == base.vol_low ? "null" : "slope";
    rep.tau = options.tau;
    rep.spot = options.spot;
    rep.strike = options.strike;
    rep.pairs = options.pairs;
    rep.seed = options.seed;
    rep.control_variate = options.control_variate;
    rep.slope_threshold = options.slope_threshold;

    for (std::size_t i = 0; i < options.eps_ladder.size(); ++i) {
        ModelSpec model = base;
        model.eps = options.eps_ladder[i];
        model.delta = options.delta_equals_eps ? model.eps : 0.0;

        ScalingRung rung;
        rung.eps = model.eps;
        rung.delta = model.delta;
        rung.approx_price =
            expansion_price(model, options.payoff, options.tau, options.spot,
                            options.strike);

        McConfig cfg;
        cfg.pairs = options.pairs;
        cfg.seed = options.seed + i;  // stream seeding decorrelates the rungs
        cfg.control_variate = options.control_variate;
        cfg.threads = options.threads;
        cfg.dt_override = options.dt_override;
        const McResult mc = mc_price(model, options.payoff, options.tau,
                                     options.spot, options.strike, cfg);
        rung.steps = mc.steps;
        rung.dt = mc.dt;
        rung.mc_price = mc.price;
        rung.mc_se = mc.std_error;
        rung.abs_error = std::abs(mc.price - rung.approx_price);
        rep.rungs.push_back(rung);
    }

    if (rep.mode == "null") {
        // No corrections exist, so the error itself must be noise-level. An
        // exact control variate can collapse the standard error to roundoff,
        // so keep an absolute floor above scheme-level roundoff.
        rep.conclusive = true;
        rep.slope = 0.0;
        rep.pass = true;
        for (const ScalingRung& r : rep.rungs) {
            const double floor_tol = 1e-10 * (1.0 + std::abs(r.mc_price));
            if (r.abs_error > std::max(3.0 * r.mc_se, floor_tol)) rep.pass = false;
        }
        return rep;
    }

    rep.conclusive = true;
    double worst_ratio = 0.0;
    for (const ScalingRung& r : rep.rungs) {
        if (r.abs_error <= 3.0 * r.mc_se) rep.conclusive = false;
        const double floor_err = std::max(r.abs_error, 1e-300);
        worst_ratio = std::max(worst_ratio, 3.0 * r.mc_se / floor_err);
    }
    if (!rep.conclusive) {
        const double factor = worst_ratio * worst_ratio * 1.25;  // 25% headroom
        rep.recommended_pairs =
            static_cast<std::int64_t>(std::ceil(options.pairs * factor));
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.rungs.size());
    for (const ScalingRung& r : rep.rungs) {
        const double x = std::log(r.eps);
        const double y = std::log(std::max(r.abs_error, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    rep.pass = rep.conclusive && rep.slope >= rep.slope_threshold;
    return rep;
}

std::string to_json(const ScalingReport& rep) {
    nlohmann::ordered_json j;
    j["regime"] = rep.regime;
    j["payoff"] = rep.payoff;
    j["mode"] = rep.mode;
    j["tau"] = rep.tau;
    j["spot"] = rep.spot;
    j["strike"] = rep.strike;
    j["pairs"] = rep.pairs;
    j["seed"] = rep.seed;
    j["control_variate"] = rep.control_variate;
    j["slope_threshold"] = rep.slope_threshold;
    nlohmann::ordered_json rungs = nlohmann::ordered_json::array();
    for (const ScalingRung& r : rep.rungs) {
        nlohmann::ordered_json row;
        row["eps"] = r.eps;
        row["delta"] = r.delta;
        row["steps"] = r.steps;
        row["dt"] = r.dt;
        row["approx_price"] = r.approx_price;
        row["mc_price"] = r.mc_price;
        row["mc_se"] = r.mc_se;
        row["abs_error"] = r.abs_error;
        rungs.push_back(row);
    }
    j["rungs"] = rungs;
    j["slope"] = rep.slope;
    j["conclusive"] = rep.conclusive;
    j["pass"] = rep.pass;
    if (!rep.conclusive) j["recommended_pairs"] = rep.recommended_pairs;
    return j.dump(2);
}

std::string to_csv(const ScalingReport& rep) {
    std::string out = "eps,delta,abs_error,mc_se\n";
    char buf[64];
    const auto fmt = [&buf](double x) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
        (void)ec;
        return std::string(buf, p);
    };
    for (const ScalingRung& r : rep.rungs) {
        out += fmt(r.eps);
        out += ',';
        out += fmt(r.delta);
        out += ',';
        out += fmt(r.abs_error);
        out += ',';
        out += fmt(r.mc_se);
        out += '\n';
    }
    return out;
}

} // namespace msvol
