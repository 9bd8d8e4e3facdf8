#include "msvol/blackscholes.hpp"

#include <algorithm>
#include <cmath>

namespace msvol {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void check_contract(const OptionSpec& opt, double sigma) {
    if (!(opt.spot > 0.0)) throw DataError("spot must be positive");
    if (!(opt.strike > 0.0)) throw DataError("strike must be positive");
    if (!(opt.tau >= 0.0)) throw DataError("tau must be nonnegative");
    if (!(sigma > 0.0)) throw DataError("sigma must be positive");
    if (!std::isfinite(opt.rate)) throw DataError("rate must be finite");
}

} // namespace

double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double bs_price(const OptionSpec& opt, double sigma) {
    check_contract(opt, sigma);
    if (opt.tau == 0.0) {
        const double intrinsic = opt.kind == OptionKind::Call
                                     ? opt.spot - opt.strike
                                     : opt.strike - opt.spot;
        return std::max(intrinsic, 0.0);
    }
    const double st = sigma * std::sqrt(opt.tau);
    const double d1 =
        (std::log(opt.spot / opt.strike) + (opt.rate + 0.5 * sigma * sigma) * opt.tau) / st;
    const double d2 = d1 - st;
    const double df = std::exp(-opt.rate * opt.tau);
    if (opt.kind == OptionKind::Call)
        return opt.spot * norm_cdf(d1) - opt.strike * df * norm_cdf(d2);
    return opt.strike * df * norm_cdf(-d2) - opt.spot * norm_cdf(-d1);
}

LogGreeks log_greeks(const OptionSpec& opt, double sigma) {
    check_contract(opt, sigma);
    if (opt.tau == 0.0)
        throw DataError("log_greeks undefined at tau = 0 (terminal layer)");

    const double st = sigma * std::sqrt(opt.tau);
    const double d1 =
        (std::log(opt.spot / opt.strike) + (opt.rate + 0.5 * sigma * sigma) * opt.tau) / st;
    const double d2 = d1 - st;
    const double df = std::exp(-opt.rate * opt.tau);

    LogGreeks g;
    g.d1 = d1;
    g.d2 = d2;

    // Gamma-type ladder: with G := D2 P = x n(d1)/(sigma sqrt(tau)), repeated
    // log-spot derivatives of G are G times Hermite-style polynomials in
    // w = 1 - d1/(sigma sqrt(tau)).
    const double a = 1.0 / st;
    const double w = 1.0 - a * d1;
    const double G = opt.spot * norm_pdf(d1) * a;
    const double h1 = w;
    const double h2 = w * w - a * a;
    const double h3 = w * w * w - 3.0 * a * a * w;
    const double h4 = w * w * w * w - 6.0 * a * a * w * w + 3.0 * a * a * a * a;

    const double call_price = opt.spot * norm_cdf(d1) - opt.strike * df * norm_cdf(d2);
    const double call_delta = opt.spot * norm_cdf(d1); // D1 of the call

    if (opt.kind == OptionKind::Call) {
        g.price = call_price;
        g.d(0, 0) = call_price;
        g.d(1, 0) = call_delta;
        g.d(2, 0) = call_delta + G;
    } else {
        // Parity: put = call - x + K e^{-r tau}; the b >= 1 columns coincide.
        g.price = call_price - opt.spot + opt.strike * df;
        g.d(0, 0) = g.price;
        g.d(1, 0) = call_delta - opt.spot;
        g.d(2, 0) = call_delta - opt.spot + G;
    }
    g.d(0, 1) = G;
    g.d(1, 1) = G * h1;
    g.d(2, 1) = G * h2;
    g.d(0, 2) = G * (h2 - h1);
    g.d(1, 2) = G * (h3 - h2);
    g.d(2, 2) = G * (h4 - h3);

    g.vega = opt.spot * norm_pdf(d1) * std::sqrt(opt.tau);
    g.vomma = g.vega * d1 * d2 / sigma;
    return g;
}

double implied_vol(const OptionSpec& opt, double price) {
    if (!(opt.spot > 0.0)) throw DataError("spot must be positive");
    if (!(opt.strike > 0.0)) throw DataError("strike must be positive");
    if (!(opt.tau > 0.0)) throw DataError("tau must be positive to invert a vol");
    if (!std::isfinite(price)) throw DataError("price must be finite");

    const double df = opt.strike * std::exp(-opt.rate * opt.tau);
    const double lower = opt.kind == OptionKind::Call ? std::max(opt.spot - df, 0.0)
                                                      : std::max(df - opt.spot, 0.0);
    const double upper = opt.kind == OptionKind::Call ? opt.spot : df;
    if (!(price > lower && price < upper))
        throw DataError("price outside no-arbitrage bounds; no implied vol exists");

    double lo = 1e-8, hi = 10.0;
    const double tol = 1e-12 * std::max(1.0, std::abs(price));

    auto f = [&](double s) { return bs_price(opt, s) - price; };
    double flo = f(lo);
    double fhi = f(hi);
    if (flo > 0.0 || fhi < 0.0) {
        // Inside the arbitrage bounds the price is always bracketed by the
        // vol limits; reaching here means it hugs a bound to within roundoff.
        throw DataError("price indistinguishable from a no-arbitrage bound");
    }

    double sigma = std::clamp(std::sqrt(2.0 * std::abs(std::log(opt.spot / df)) / opt.tau),
                              0.05, 2.0);
    for (int it = 0; it < 200; ++it) {
        const double fs = f(sigma);
        if (std::abs(fs) <= tol) return sigma;
        if (fs > 0.0)
            hi = sigma;
        else
            lo = sigma;
        if (hi - lo < 1e-14) return sigma;
        const double vega = log_greeks(opt, sigma).vega;
        double next = sigma - fs / vega;
        if (!(vega > 1e-300) || !(next > lo) || !(next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - sigma) < 1e-15) return next;
        sigma = next;
    }
    throw NumericError("implied vol iteration did not converge");
}

} // namespace msvol
