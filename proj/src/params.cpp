#include "msvol/params.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace msvol {

namespace {

using ordered_json = nlohmann::ordered_json;

double require_number(const ordered_json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw DataError(std::string("missing field: ") + name);
    if (!it->is_number()) throw DataError(std::string("field is not a number: ") + name);
    return it->get<double>();
}

void reject_unknown(const ordered_json& j, const char* const* names, int n) {
    if (!j.is_object()) throw DataError("expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (int i = 0; i < n; ++i)
            if (it.key() == names[i]) {
                known = true;
                break;
            }
        if (!known) throw DataError("unknown field: " + it.key());
    }
}

} // namespace

const char* const kGroupParamNames[kNumGroupParams] = {
    "sigma_star", "v3_eps", "v1_del", "v0_del", "c2_ed", "c1_ed",
    "c0_ed",      "c_ed",   "a2_eps", "a1_eps", "a0_eps", "a_eps",
    "b2_del",     "b1_del", "r_v3",   "r_v1",   "r_v0",   "phi_eps"};

const char* const kSurfaceCoeffNames[kNumSurfaceCoeffs] = {
    "k", "l", "m", "n", "p", "q", "s", "u", "v", "w"};

double reduce_params(const UnreducedFirstOrder& u) {
    if (!(u.sigma_bar > 0.0)) throw DataError("sigma_bar must be positive");
    const double radicand = u.sigma_bar * u.sigma_bar + 2.0 * u.v2;
    if (!(radicand > 0.0))
        throw DataError("sigma_bar^2 + 2 v2 must be positive to reduce");
    return std::sqrt(radicand);
}

Eigen::Matrix<double, kNumGroupParams, 1> to_vector(const GroupParams& p) {
    Eigen::Matrix<double, kNumGroupParams, 1> v;
    v << p.sigma_star, p.v3_eps, p.v1_del, p.v0_del, p.c2_ed, p.c1_ed, p.c0_ed,
        p.c_ed, p.a2_eps, p.a1_eps, p.a0_eps, p.a_eps, p.b2_del, p.b1_del,
        p.r_v3, p.r_v1, p.r_v0, p.phi_eps;
    return v;
}

GroupParams params_from_vector(const Eigen::Matrix<double, kNumGroupParams, 1>& v) {
    GroupParams p;
    p.sigma_star = v(0);
    p.v3_eps = v(1);
    p.v1_del = v(2);
    p.v0_del = v(3);
    p.c2_ed = v(4);
    p.c1_ed = v(5);
    p.c0_ed = v(6);
    p.c_ed = v(7);
    p.a2_eps = v(8);
    p.a1_eps = v(9);
    p.a0_eps = v(10);
    p.a_eps = v(11);
    p.b2_del = v(12);
    p.b1_del = v(13);
    p.r_v3 = v(14);
    p.r_v1 = v(15);
    p.r_v0 = v(16);
    p.phi_eps = v(17);
    return p;
}

Eigen::Matrix<double, kNumSurfaceCoeffs, 1> to_vector(const SurfaceCoeffs& t) {
    Eigen::Matrix<double, kNumSurfaceCoeffs, 1> v;
    v << t.k, t.l, t.m, t.n, t.p, t.q, t.s, t.u, t.v, t.w;
    return v;
}

SurfaceCoeffs coeffs_from_vector(const Eigen::Matrix<double, kNumSurfaceCoeffs, 1>& v) {
    SurfaceCoeffs t;
    t.k = v(0);
    t.l = v(1);
    t.m = v(2);
    t.n = v(3);
    t.p = v(4);
    t.q = v(5);
    t.s = v(6);
    t.u = v(7);
    t.v = v(8);
    t.w = v(9);
    return t;
}

std::string to_json(const GroupParams& p) {
    ordered_json j;
    const auto v = to_vector(p);
    for (int i = 0; i < kNumGroupParams; ++i) j[kGroupParamNames[i]] = v(i);
    return j.dump(2);
}

std::string to_json(const SurfaceCoeffs& t) {
    ordered_json j;
    const auto v = to_vector(t);
    for (int i = 0; i < kNumSurfaceCoeffs; ++i) j[kSurfaceCoeffNames[i]] = v(i);
    return j.dump(2);
}

GroupParams params_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("JSON parse error: ") + e.what());
    }
    reject_unknown(j, kGroupParamNames, kNumGroupParams);
    Eigen::Matrix<double, kNumGroupParams, 1> v;
    for (int i = 0; i < kNumGroupParams; ++i) v(i) = require_number(j, kGroupParamNames[i]);
    GroupParams p = params_from_vector(v);
    if (!(p.sigma_star > 0.0)) throw DataError("sigma_star must be positive");
    for (int i = 0; i < kNumGroupParams; ++i)
        if (!std::isfinite(v(i)))
            throw DataError(std::string("non-finite field: ") + kGroupParamNames[i]);
    return p;
}

SurfaceCoeffs coeffs_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("JSON parse error: ") + e.what());
    }
    reject_unknown(j, kSurfaceCoeffNames, kNumSurfaceCoeffs);
    Eigen::Matrix<double, kNumSurfaceCoeffs, 1> v;
    for (int i = 0; i < kNumSurfaceCoeffs; ++i)
        v(i) = require_number(j, kSurfaceCoeffNames[i]);
    for (int i = 0; i < kNumSurfaceCoeffs; ++i)
        if (!std::isfinite(v(i)))
            throw DataError(std::string("non-finite field: ") + kSurfaceCoeffNames[i]);
    return coeffs_from_vector(v);
}

std::vector<std::string> regime_warnings(const GroupParams& p) {
    if (!(p.sigma_star > 0.0)) throw DataError("sigma_star must be positive");
    // Amplitude parameters only; indices into the canonical order skip
    // sigma_star (0) and the ratio fields r_v3/r_v1/r_v0 (14..16).
    static constexpr int kAmplitudeIdx[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 17};
    const auto v = to_vector(p);
    std::vector<std::string> warnings;
    for (int i : kAmplitudeIdx) {
        if (std::abs(v(i)) >= 0.5 * p.sigma_star)
            warnings.push_back(std::string(kGroupParamNames[i]) +
                               " exceeds half of sigma_star; outside the asymptotic regime");
    }
    return warnings;
}

} // namespace msvol
