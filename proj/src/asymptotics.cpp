#include "msvol/asymptotics.hpp"

#include <cmath>

namespace msvol {

namespace {

void check_phi(const GroupParams& p) {
    if (!(p.sigma_star > 0.0)) throw DataError("sigma_star must be positive");
    const auto v = to_vector(p);
    for (int i = 0; i < kNumGroupParams; ++i)
        if (!std::isfinite(v(i)))
            throw DataError(std::string("non-finite group parameter: ") + kGroupParamNames[i]);
}

} // namespace

// The sigma-derivative of the Black-Scholes price equals tau*sigma*D2, and its
// second sigma-derivative equals tau*D2 + tau^2 sigma^2 D2^2, so every operator
// below reduces to the closed-form D1^a D2^b ladder. T(a,b) = D1^a D2^b P.
PriceTerms price_terms_from_greeks(double tau, const LogGreeks& g,
                                   const GroupParams& phi) {
    check_phi(phi);
    if (!(tau > 0.0))
        throw DataError("price_terms undefined at tau = 0 (terminal layer)");

    const double sg = phi.sigma_star;
    const Eigen::Matrix3d& T = g.d;

    const double ts = tau * sg;         // vega factor: dsigma = tau*sigma*D2
    const double tau2 = tau * tau;

    const double V3 = phi.v3_eps, V1 = phi.v1_del, V0 = phi.v0_del;

    PriceTerms r;
    r.p00 = g.price;

    // First order, fast: tau * V (D1 D2) P.
    r.p10 = tau * V3 * T(1, 1);

    // First order, slow: tau (V1 D1 + V0) dsigma P.
    r.p01 = tau2 * sg * (V1 * T(1, 1) + V0 * T(0, 1));

    // Second order, fast: -phi/2 D2 P + tau (A2 D1^2D2 + A1 D1D2 + A0 D2 +
    // A D2^2) P + tau^2/2 V3^2 D1^2D2^2 P.
    r.p20 = -0.5 * phi.phi_eps * T(0, 1) +
            tau * (phi.a2_eps * T(2, 1) + phi.a1_eps * T(1, 1) +
                   phi.a0_eps * T(0, 1) + phi.a_eps * T(0, 2)) +
            0.5 * tau2 * V3 * V3 * T(2, 2);

    // Second order, slow: three groups sharing the moneyness operator
    // N = V1 D1 + V0, plus the B terms. dsigma^2 = tau D2 + tau^2 sigma^2 D2^2.
    const double n_on_d21 = V1 * T(2, 1) + V0 * T(1, 1);              // N D1 D2
    const double nn_d1 = V1 * V1 * T(2, 1) + 2.0 * V1 * V0 * T(1, 1) +
                         V0 * V0 * T(0, 1);                           // N^2 D2
    const double nn_d2 = V1 * V1 * T(2, 2) + 2.0 * V1 * V0 * T(1, 2) +
                         V0 * V0 * T(0, 2);                           // N^2 D2^2
    const double nr = V1 * phi.r_v1 * T(2, 1) +
                      (V1 * phi.r_v0 + V0 * phi.r_v1) * T(1, 1) +
                      V0 * phi.r_v0 * T(0, 1);                        // N (R1 D1 + R0) D2
    r.p02 = (2.0 / 3.0) * tau2 * ts * nr +
            0.5 * tau2 * ((4.0 / 3.0) * tau * nn_d1 + tau2 * sg * sg * nn_d2) +
            (tau / 3.0) * phi.b2_del * (1.5 * tau * T(0, 1) + tau2 * sg * sg * T(0, 2)) +
            0.5 * tau * phi.b1_del * ts * T(0, 1);

    // Second order, cross: V (D1 D2) against N dsigma, the C polynomial against
    // dsigma, and N against the fast-sensitivity ratio r_v3 D1 D2.
    r.p11 = tau2 * V3 * ts * (V1 * T(2, 2) + V0 * T(1, 2)) +
            0.5 * tau * ts * (phi.c2_ed * T(2, 1) + phi.c1_ed * T(1, 1) +
                              phi.c0_ed * T(0, 1) + phi.c_ed * T(0, 2)) +
            tau2 * phi.r_v3 * n_on_d21;

    r.total = r.p00 + r.p10 + r.p01 + r.p20 + r.p02 + r.p11;
    return r;
}

PriceTerms price_terms(const OptionSpec& opt, const GroupParams& phi) {
    check_phi(phi);
    return price_terms_from_greeks(opt.tau, log_greeks(opt, phi.sigma_star), phi);
}

PriceTerms price_terms_unreduced(const OptionSpec& opt, const GroupParams& phi,
                                 double v2_eps, double r_v2) {
    PriceTerms r = price_terms(opt, phi);
    if (v2_eps == 0.0 && r_v2 == 0.0) return r;

    const double sg = phi.sigma_star;
    const LogGreeks g = log_greeks(opt, sg);
    const Eigen::Matrix3d& T = g.d;
    const double tau = opt.tau, tau2 = tau * tau, ts = tau * sg;
    const double V3 = phi.v3_eps, V2 = v2_eps;
    const double V1 = phi.v1_del, V0 = phi.v0_del;

    // v2 rides along with v3 wherever the first-order fast operator appears:
    // linearly in p10, squared in p20, and against the slow operator in p11.
    r.p10 += tau * V2 * T(0, 1);
    r.p20 += 0.5 * tau2 * (2.0 * V3 * V2 * T(1, 2) + V2 * V2 * T(0, 2));
    r.p11 += tau2 * ts * V2 * (V1 * T(1, 2) + V0 * T(0, 2)) +
             tau2 * r_v2 * (V1 * T(1, 1) + V0 * T(0, 1));
    r.total = r.p00 + r.p10 + r.p01 + r.p20 + r.p02 + r.p11;
    return r;
}

IvTerms iv_terms(double tau, double d, const GroupParams& phi) {
    check_phi(phi);
    if (!(tau > 0.0)) throw DataError("iv_terms requires tau > 0");
    if (!std::isfinite(d)) throw DataError("d must be finite");

    const double sg = phi.sigma_star;
    const double s2 = sg * sg, s3 = s2 * sg, s4 = s3 * sg, s5 = s4 * sg,
                 s6 = s5 * sg, s7 = s6 * sg;
    const double tau2 = tau * tau;
    const double d2 = d * d;
    const double V3 = phi.v3_eps, V1 = phi.v1_del, V0 = phi.v0_del;
    const double R3 = phi.r_v3, R1 = phi.r_v1, R0 = phi.r_v0;

    IvTerms r;
    r.i00 = sg;
    r.i10 = V3 * (0.5 / sg + d / (tau * s3));
    r.i01 = V0 * tau + V1 * (0.5 * tau + d / s2);
    r.i20 = -phi.phi_eps / (2.0 * tau * sg) +
            V3 * V3 * (-3.0 * d2 / (tau2 * s7) + 1.5 / (tau * s5) - 1.5 * d / (tau * s5)) +
            phi.a_eps * (d2 / (tau2 * s5) - 1.0 / (tau * s3) - 0.25 / sg) +
            phi.a0_eps / sg +
            phi.a1_eps * (d / (tau * s3) + 0.5 / sg) +
            phi.a2_eps * (d2 / (tau2 * s5) - 1.0 / (tau * s3) + d / (tau * s3) + 0.25 / sg);
    r.i02 = V0 * V0 * tau2 / (6.0 * sg) +
            V0 * V1 * (-5.0 * d * tau / (3.0 * s3) + tau2 / (6.0 * sg)) +
            V1 * V1 * (-7.0 * d2 / (3.0 * s5) + 5.0 * tau / (6.0 * s3) -
                       5.0 * d * tau / (6.0 * s3) + tau2 / (6.0 * sg)) +
            V0 * R0 * (2.0 * tau2 / 3.0) +
            V0 * R1 * (tau2 / 3.0 + 2.0 * d * tau / (3.0 * s2)) +
            V1 * R0 * (tau2 / 3.0 + 2.0 * d * tau / (3.0 * s2)) +
            V1 * R1 * (tau2 / 6.0 + 2.0 * d2 / (3.0 * s4) - 2.0 * tau / (3.0 * s2) +
                       2.0 * d * tau / (3.0 * s2)) +
            phi.b2_del * (d2 / (3.0 * s3) + tau / (6.0 * sg) - tau2 * sg / 12.0) +
            phi.b1_del * 0.5 * tau;
    r.i11 = V0 * V3 * (-3.0 * d / s4 - 0.5 * tau / s2) +
            V1 * V3 * (-6.0 * d2 / (tau * s6) + 3.0 / s4 - 3.0 * d / s4) +
            V0 * R3 * (d / s3 + 0.5 * tau / sg) +
            V1 * R3 * (d2 / (tau * s5) - 1.0 / s3 + d / s3 + 0.25 * tau / sg) +
            phi.c2_ed * (tau / 8.0 + d2 / (2.0 * tau * s4) - 0.5 / s2 + 0.5 * d / s2) +
            phi.c1_ed * (tau / 4.0 + 0.5 * d / s2) +
            phi.c0_ed * 0.5 * tau +
            phi.c_ed * (-tau / 8.0 + d2 / (2.0 * tau * s4) - 0.5 / s2);
    r.total = r.i00 + r.i10 + r.i01 + r.i20 + r.i02 + r.i11;
    return r;
}

SurfaceCoeffs theta_from_phi(const GroupParams& p) {
    check_phi(p);
    return theta_from_phi_t<double>(p);
}

double surface_eval(double tau, double d, const SurfaceCoeffs& theta) {
    if (!(tau > 0.0)) throw DataError("surface_eval requires tau > 0");
    if (!std::isfinite(d)) throw DataError("d must be finite");
    const double it = 1.0 / tau;
    return (theta.k * it + theta.l + theta.m * tau + theta.n * tau * tau) +
           d * it * (theta.p + theta.q * tau + theta.s * tau * tau) +
           d * d * it * it * (theta.u + theta.v * tau + theta.w * tau * tau);
}

} // namespace msvol
