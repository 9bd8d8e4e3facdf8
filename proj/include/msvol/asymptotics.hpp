#pragma once

#include "msvol/blackscholes.hpp"
#include "msvol/params.hpp"

namespace msvol {

// Price decomposition: base Black-Scholes value at sigma_star plus the two
// first-order and three second-order corrections. Each field already carries
// its scale (the parameters are sized), so total is a plain sum.
struct PriceTerms {
    double p00 = 0.0;
    double p10 = 0.0;
    double p01 = 0.0;
    double p20 = 0.0;
    double p02 = 0.0;
    double p11 = 0.0;
    double total = 0.0;
};

// Implied-vol decomposition on the surface domain (tau, d) with
// d = log(K / (x e^{r tau})) the forward log-moneyness.
struct IvTerms {
    double i00 = 0.0;
    double i10 = 0.0;
    double i01 = 0.0;
    double i20 = 0.0;
    double i02 = 0.0;
    double i11 = 0.0;
    double total = 0.0;
};

PriceTerms price_terms(const OptionSpec& opt, const GroupParams& phi);

// Assembly from a caller-supplied derivative table, which must have been
// evaluated at phi.sigma_star. Lets smooth payoffs reuse the expansion: any
// European payoff with a closed-form table plugs in here.
PriceTerms price_terms_from_greeks(double tau, const LogGreeks& greeks,
                                   const GroupParams& phi);

// Same expansion in the unreduced parameterization: phi.sigma_star carries the
// averaged volatility sigma_bar and the variance-level parameter v2 (with its
// slope ratio r_v2) stays explicit instead of being absorbed. Used to verify
// that the absorption changes only higher-order content.
PriceTerms price_terms_unreduced(const OptionSpec& opt, const GroupParams& phi,
                                 double v2_eps, double r_v2);

IvTerms iv_terms(double tau, double d, const GroupParams& phi);

// The ten surface coefficients as exact polynomial expressions in the group
// parameters. Templated so the calibration can differentiate it.
template <typename Scalar>
SurfaceCoeffsT<Scalar> theta_from_phi_t(const GroupParamsT<Scalar>& p);

SurfaceCoeffs theta_from_phi(const GroupParams& p);

double surface_eval(double tau, double d, const SurfaceCoeffs& theta);

template <typename Scalar>
SurfaceCoeffsT<Scalar> theta_from_phi_t(const GroupParamsT<Scalar>& p) {
    const Scalar& sg = p.sigma_star;
    const Scalar s2 = sg * sg;
    const Scalar s3 = s2 * sg;
    const Scalar s4 = s3 * sg;
    const Scalar s5 = s4 * sg;
    const Scalar s7 = s5 * s2;
    const Scalar& V3 = p.v3_eps;
    const Scalar& V1 = p.v1_del;
    const Scalar& V0 = p.v0_del;
    const Scalar& C2 = p.c2_ed;
    const Scalar& C1 = p.c1_ed;
    const Scalar& C0 = p.c0_ed;
    const Scalar& C = p.c_ed;
    const Scalar& A2 = p.a2_eps;
    const Scalar& A1 = p.a1_eps;
    const Scalar& A0 = p.a0_eps;
    const Scalar& A = p.a_eps;
    const Scalar& B2 = p.b2_del;
    const Scalar& B1 = p.b1_del;
    const Scalar& R3 = p.r_v3;
    const Scalar& R1 = p.r_v1;
    const Scalar& R0 = p.r_v0;
    const Scalar& Ph = p.phi_eps;

    SurfaceCoeffsT<Scalar> t;
    t.k = Scalar(1.5) * V3 * V3 / s5 - A2 / s3 - A / s3 - Ph / (Scalar(2) * sg);
    t.l = sg + V3 / (Scalar(2) * sg) + Scalar(3) * V1 * V3 / s4 - V1 * R3 / s3 -
          C2 / (Scalar(2) * s2) - C / (Scalar(2) * s2) + A0 / sg +
          A1 / (Scalar(2) * sg) + A2 / (Scalar(4) * sg) - A / (Scalar(4) * sg);
    t.m = B1 / Scalar(2) + C0 / Scalar(2) + C1 / Scalar(4) + C2 / Scalar(8) -
          C / Scalar(8) + Scalar(5) * V1 * V1 / (Scalar(6) * s3) -
          V0 * V3 / (Scalar(2) * s2) + B2 / (Scalar(6) * sg) -
          Scalar(2) * V1 * R1 / (Scalar(3) * s2) + V0 * R3 / (Scalar(2) * sg) +
          V1 * R3 / (Scalar(4) * sg) + V0 + V1 / Scalar(2);
    t.n = V0 * V0 / (Scalar(6) * sg) + V0 * V1 / (Scalar(6) * sg) +
          V1 * V1 / (Scalar(6) * sg) - B2 * sg / Scalar(12) +
          Scalar(2) * V0 * R0 / Scalar(3) + V1 * R0 / Scalar(3) +
          V0 * R1 / Scalar(3) + V1 * R1 / Scalar(6);
    t.p = Scalar(-1.5) * V3 * V3 / s5 + A1 / s3 + A2 / s3 + V3 / s3;
    t.q = Scalar(-3) * V0 * V3 / s4 - Scalar(3) * V1 * V3 / s4 +
          C1 / (Scalar(2) * s2) + C2 / (Scalar(2) * s2) + V0 * R3 / s3 +
          V1 * R3 / s3 + V1 / s2;
    t.s = Scalar(-5) * V0 * V1 / (Scalar(3) * s3) -
          Scalar(5) * V1 * V1 / (Scalar(6) * s3) +
          Scalar(2) * V1 * R0 / (Scalar(3) * s2) +
          Scalar(2) * V0 * R1 / (Scalar(3) * s2) +
          Scalar(2) * V1 * R1 / (Scalar(3) * s2);
    t.u = Scalar(-3) * V3 * V3 / s7 + A2 / s5 + A / s5;
    t.v = Scalar(-6) * V1 * V3 / (s5 * sg) + C2 / (Scalar(2) * s4) +
          C / (Scalar(2) * s4) + V1 * R3 / s5;
    t.w = Scalar(-7) * V1 * V1 / (Scalar(3) * s5) + B2 / (Scalar(3) * s3) +
          Scalar(2) * V1 * R1 / (Scalar(3) * s4);
    return t;
}

} // namespace msvol
