#pragma once

#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "msvol/errors.hpp"
#include "msvol/params.hpp"

namespace msvol {

// Fully concrete two-factor volatility model for the verification oracle.
// Fast factor: OU with drift (m - y)/eps and diffusion nu*sqrt(2)/sqrt(eps),
// so its invariant law is N(m, nu^2). Slow factor: affine drift, constant
// diffusion. Volatility f and the fast risk premium are bounded logistic
// shapes; the slow risk premium is a constant.
struct ModelSpec {
    double eps = 0.01;
    double delta = 0.01;
    double rate = 0.0;
    double rho_xy = 0.0;
    double rho_xz = 0.0;
    double rho_yz = 0.0;
    double m = 0.0;       // fast-factor mean
    double nu = 0.5;      // fast-factor invariant standard deviation
    double vol_low = 0.1;   // lower bound of f
    double vol_high = 0.4;  // upper bound of f
    double kappa = 1.0;     // slow-factor coupling inside f
    double lambda0 = 0.0;   // fast risk-premium amplitude
    double gamma0 = 0.0;    // slow risk premium (constant)
    double slow_drift0 = 0.0;   // c(z) = slow_drift0 + slow_drift1 * z
    double slow_drift1 = 0.0;
    double slow_diffusion = 1.0;  // g(z), constant
    double y0 = 0.0;  // current fast-factor level
    double z0 = 0.0;  // current slow-factor level

    double beta() const { return nu * std::sqrt(2.0); }
    double f(double y, double z) const {
        return vol_low + (vol_high - vol_low) / (1.0 + std::exp(-(y + kappa * z)));
    }
    double lam(double y, double /*z*/) const {
        return lambda0 / (1.0 + std::exp(-y));
    }
    double gam(double /*y*/, double /*z*/) const { return gamma0; }
    double c_slow(double z) const { return slow_drift0 + slow_drift1 * z; }
    double g_slow(double /*z*/) const { return slow_diffusion; }

    void validate() const;  // throws DataError on any violated invariant
};

ModelSpec model_from_json(const std::string& text);
std::string to_json(const ModelSpec& spec);

// Solution of nu^2 phi'' + (m - y) phi' = chi on a uniform grid, for a source
// with zero mean under N(m, nu^2); phi itself is shifted to zero mean.
struct PoissonSolution {
    Eigen::VectorXd grid;
    Eigen::VectorXd phi;
    Eigen::VectorXd phi_prime;
    double m = 0.0;
    double nu = 0.0;
    double source_mean = 0.0;  // quadrature mean of chi before centering

    double phi_at(double y) const;        // linear interpolation
    double phi_prime_at(double y) const;  // linear interpolation
};

PoissonSolution poisson_solve(const std::function<double(double)>& chi, double m,
                              double nu);

// Gaussian average of integrand against N(m, nu^2), composite Simpson over
// [m - 8 nu, m + 8 nu].
double gaussian_average(const std::function<double(double)>& integrand, double m,
                        double nu);

// Everything group_params_from_model computes, including the pre-reduction
// state and raw (unsized) coefficients for diagnostics and cross-checks.
struct ModelCoefficients {
    GroupParams params;             // reduced, sized with the model's eps/delta
    UnreducedFirstOrder unreduced;  // sigma_bar and sized v2_eps
    double sigma_bar_prime = 0.0;
    double sigma_bar_second = 0.0;
    double r_v2 = 0.0;  // sized v2 slope ratio, for the unreduced price route
    // raw coefficients before any eps/delta power is absorbed
    double v0 = 0.0, v1 = 0.0, v2 = 0.0, v3 = 0.0;
    double v0_prime = 0.0, v1_prime = 0.0, v2_prime = 0.0, v3_prime = 0.0;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a = 0.0;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0, c = 0.0;
    double b1 = 0.0, b2 = 0.0;
    double phi_at_current = 0.0;  // phi(y0, z)
};

ModelCoefficients group_params_from_model(const ModelSpec& spec, double z);

} // namespace msvol
