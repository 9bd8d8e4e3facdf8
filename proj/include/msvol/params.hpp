#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "msvol/errors.hpp"

namespace msvol {

// The 18 calibratable group parameters driving every approximation formula.
// All first- and second-order effects are absorbed into these scalars, so the
// formulas never see the underlying time scales. sigma_star is the effective
// level volatility; v3/v1/v0 carry the first-order skew and term structure;
// a*/b*/c*/phi carry the second-order corrections; r_* are the slow-factor
// sensitivity ratios (derivative ratios, not amplitudes).
template <typename Scalar>
struct GroupParamsT {
    Scalar sigma_star{};
    Scalar v3_eps{};
    Scalar v1_del{};
    Scalar v0_del{};
    Scalar c2_ed{};
    Scalar c1_ed{};
    Scalar c0_ed{};
    Scalar c_ed{};
    Scalar a2_eps{};
    Scalar a1_eps{};
    Scalar a0_eps{};
    Scalar a_eps{};
    Scalar b2_del{};
    Scalar b1_del{};
    Scalar r_v3{};
    Scalar r_v1{};
    Scalar r_v0{};
    Scalar phi_eps{};
};

using GroupParams = GroupParamsT<double>;

// The 10 surface regression coefficients multiplying the basis functions
// {1/tau, 1, tau, tau^2, d/tau, d, d*tau, d^2/tau^2, d^2/tau, d^2}.
template <typename Scalar>
struct SurfaceCoeffsT {
    Scalar k{}, l{}, m{}, n{}, p{}, q{}, s{}, u{}, v{}, w{};
};

using SurfaceCoeffs = SurfaceCoeffsT<double>;

// Pre-reduction first-order state: the averaged volatility and the fast
// drift-adjustment coefficient it absorbs.
struct UnreducedFirstOrder {
    double sigma_bar = 0.0;
    double v2 = 0.0;
};

// sigma_star = sqrt(sigma_bar^2 + 2 v2); throws if the radicand is not positive.
double reduce_params(const UnreducedFirstOrder& u);

inline constexpr int kNumGroupParams = 18;
inline constexpr int kNumSurfaceCoeffs = 10;

// Default seed for every randomized routine; never wall-clock.
inline constexpr unsigned long long kDefaultSeed = 12345;

// Canonical component order used for vectors, JSON, and norms.
extern const char* const kGroupParamNames[kNumGroupParams];
extern const char* const kSurfaceCoeffNames[kNumSurfaceCoeffs];

Eigen::Matrix<double, kNumGroupParams, 1> to_vector(const GroupParams& p);
GroupParams params_from_vector(const Eigen::Matrix<double, kNumGroupParams, 1>& v);
Eigen::Matrix<double, kNumSurfaceCoeffs, 1> to_vector(const SurfaceCoeffs& t);
SurfaceCoeffs coeffs_from_vector(const Eigen::Matrix<double, kNumSurfaceCoeffs, 1>& v);

// Strict JSON: flat object, exactly the canonical field names, unknown or
// missing fields rejected.
std::string to_json(const GroupParams& p);
std::string to_json(const SurfaceCoeffs& t);
GroupParams params_from_json(const std::string& text);
SurfaceCoeffs coeffs_from_json(const std::string& text);

// Soft asymptotic-regime check: warns when a perturbation amplitude exceeds
// half of sigma_star. The r_* ratios are excluded: they are slopes of order
// one by construction, not amplitudes.
std::vector<std::string> regime_warnings(const GroupParams& p);

} // namespace msvol
