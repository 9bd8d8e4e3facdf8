#include "msvol/model.hpp"

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

namespace msvol {

namespace {

// 2^15 + 1 nodes over +-8 standard deviations; odd count for Simpson rules.
constexpr int kNodes = 32769;
constexpr double kHalfWidthSd = 8.0;

double normal_pdf(double y, double m, double nu) {
    const double t = (y - m) / nu;
    return std::exp(-0.5 * t * t) / (nu * std::sqrt(2.0 * std::acos(-1.0)));
}

Eigen::VectorXd make_grid(double m, double nu) {
    Eigen::VectorXd g(kNodes);
    const double lo = m - kHalfWidthSd * nu;
    const double h = 2.0 * kHalfWidthSd * nu / (kNodes - 1);
    for (int i = 0; i < kNodes; ++i) g(i) = lo + h * i;
    return g;
}

// Composite Simpson over sampled values on a uniform odd-count grid.
double simpson_sampled(const Eigen::VectorXd& vals, double h) {
    double acc = vals(0) + vals(vals.size() - 1);
    for (int i = 1; i + 1 < vals.size(); i += 2) acc += 4.0 * vals(i);
    for (int i = 2; i + 1 < vals.size(); i += 2) acc += 2.0 * vals(i);
    return acc * h / 3.0;
}

// Per-interval Simpson increments using midpoint evaluations of a callable.
Eigen::VectorXd interval_integrals(const std::function<double(double)>& g,
                                   const Eigen::VectorXd& grid) {
    const int n = static_cast<int>(grid.size());
    const double h = grid(1) - grid(0);
    Eigen::VectorXd inc(n - 1);
    double left = g(grid(0));
    for (int i = 0; i + 1 < n; ++i) {
        const double mid = g(grid(i) + 0.5 * h);
        const double right = g(grid(i + 1));
        inc(i) = (h / 6.0) * (left + 4.0 * mid + right);
        left = right;
    }
    return inc;
}

// Cumulative integral of sampled values; parabola through three neighboring
// nodes integrated over each interval.
Eigen::VectorXd cumulative_sampled(const Eigen::VectorXd& vals, double h) {
    const int n = static_cast<int>(vals.size());
    Eigen::VectorXd cum(n);
    cum(0) = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        double piece;
        if (i + 2 < n)
            piece = (h / 12.0) * (5.0 * vals(i) + 8.0 * vals(i + 1) - vals(i + 2));
        else
            piece = (h / 12.0) * (-vals(i - 1) + 8.0 * vals(i) + 5.0 * vals(i + 1));
        cum(i + 1) = cum(i) + piece;
    }
    return cum;
}

// Four-point Lagrange interpolation on a uniform grid.
double cubic_interp(const Eigen::VectorXd& grid, const Eigen::VectorXd& vals,
                    double y) {
    const int n = static_cast<int>(grid.size());
    const double h = grid(1) - grid(0);
    double t = (y - grid(0)) / h;
    int i = static_cast<int>(std::floor(t));
    i = std::max(1, std::min(i, n - 3));
    const double u = t - i;
    const double f0 = vals(i - 1), f1 = vals(i), f2 = vals(i + 1), f3 = vals(i + 2);
    return f0 * (-(u) * (u - 1.0) * (u - 2.0) / 6.0) +
           f1 * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0) +
           f2 * (-(u + 1.0) * u * (u - 2.0) / 2.0) +
           f3 * ((u + 1.0) * u * (u - 1.0) / 6.0);
}

} // namespace

double gaussian_average(const std::function<double(double)>& integrand, double m,
                        double nu) {
    const Eigen::VectorXd grid = make_grid(m, nu);
    const auto weighted = [&](double y) { return integrand(y) * normal_pdf(y, m, nu); };
    const Eigen::VectorXd inc = interval_integrals(weighted, grid);
    return inc.sum();
}

double PoissonSolution::phi_at(double y) const { return cubic_interp(grid, phi, y); }

double PoissonSolution::phi_prime_at(double y) const {
    return cubic_interp(grid, phi_prime, y);
}

PoissonSolution poisson_solve(const std::function<double(double)>& chi, double m,
                              double nu) {
    if (!(nu > 0.0)) throw DataError("poisson_solve requires nu > 0");

    PoissonSolution sol;
    sol.m = m;
    sol.nu = nu;
    sol.grid = make_grid(m, nu);
    const double h = sol.grid(1) - sol.grid(0);
    const double beta2 = 2.0 * nu * nu;

    sol.source_mean = gaussian_average(chi, m, nu);
    if (!std::isfinite(sol.source_mean))
        throw NumericError("poisson source average did not evaluate to a finite value");
    const auto weighted = [&](double y) {
        return (chi(y) - sol.source_mean) * normal_pdf(y, m, nu);
    };
    const Eigen::VectorXd inc = interval_integrals(weighted, sol.grid);

    // Accumulate toward the mean from whichever tail is nearer, so the
    // division by the Gaussian density never amplifies cancellation error:
    // left of the mean use the integral from -inf, right of it use minus the
    // integral to +inf (they agree because the source is centered).
    const int n = kNodes;
    Eigen::VectorXd cum(n);
    cum(0) = 0.0;
    for (int i = 1; i < n; ++i) cum(i) = cum(i - 1) + inc(i - 1);
    {
        Eigen::VectorXd back(n);
        back(n - 1) = 0.0;
        for (int i = n - 2; i >= 0; --i) back(i) = back(i + 1) + inc(i);
        for (int i = 0; i < n; ++i)
            if (sol.grid(i) > m) cum(i) = -back(i);
    }

    sol.phi_prime.resize(n);
    for (int i = 0; i < n; ++i)
        sol.phi_prime(i) = 2.0 * cum(i) / (beta2 * normal_pdf(sol.grid(i), m, nu));

    sol.phi = cumulative_sampled(sol.phi_prime, h);
    Eigen::VectorXd weighted_phi(n);
    for (int i = 0; i < n; ++i)
        weighted_phi(i) = sol.phi(i) * normal_pdf(sol.grid(i), m, nu);
    sol.phi.array() -= simpson_sampled(weighted_phi, h);
    return sol;
}

void ModelSpec::validate() const {
    auto req = [](bool ok, const char* what) {
        if (!ok) throw DataError(std::string("model spec: ") + what);
    };
    const double vals[] = {eps,     delta,   rate,    rho_xy,      rho_xz,
                           rho_yz,  m,       nu,      vol_low,     vol_high,
                           kappa,   lambda0, gamma0,  slow_drift0, slow_drift1,
                           slow_diffusion,   y0,      z0};
    for (double v : vals) req(std::isfinite(v), "all fields must be finite");
    req(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    req(delta >= 0.0 && delta <= 1.0, "delta must lie in [0, 1]");
    req(rate >= 0.0, "rate must be nonnegative");
    req(std::abs(rho_xy) < 1.0 && std::abs(rho_xz) < 1.0 && std::abs(rho_yz) < 1.0,
        "pairwise correlations must have magnitude below 1");
    const double psd = 1.0 + 2.0 * rho_xy * rho_xz * rho_yz - rho_xy * rho_xy -
                       rho_xz * rho_xz - rho_yz * rho_yz;
    req(psd >= 0.0, "correlation matrix is not positive semidefinite");
    req(nu > 0.0, "nu must be positive");
    req(vol_low > 0.0 && vol_high >= vol_low,
        "volatility bounds need 0 < vol_low <= vol_high");
    req(slow_diffusion >= 0.0, "slow_diffusion must be nonnegative");
}

namespace {

const char* const kModelFields[] = {
    "eps",     "delta",   "rate",    "rho_xy",      "rho_xz",
    "rho_yz",  "m",       "nu",      "vol_low",     "vol_high",
    "kappa",   "lambda0", "gamma0",  "slow_drift0", "slow_drift1",
    "slow_diffusion",     "y0",      "z0"};

double* model_field(ModelSpec& s, int i) {
    double* ptr[] = {&s.eps,     &s.delta,   &s.rate,    &s.rho_xy,      &s.rho_xz,
                     &s.rho_yz,  &s.m,       &s.nu,      &s.vol_low,     &s.vol_high,
                     &s.kappa,   &s.lambda0, &s.gamma0,  &s.slow_drift0, &s.slow_drift1,
                     &s.slow_diffusion,      &s.y0,      &s.z0};
    return ptr[i];
}

} // namespace

ModelSpec model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model json parse failure: ") + e.what());
    }
    if (!j.is_object()) throw DataError("model json must be an object");
    constexpr int nf = static_cast<int>(std::size(kModelFields));
    for (const auto& [key, val] : j.items()) {
        bool known = false;
        for (int i = 0; i < nf; ++i)
            if (key == kModelFields[i]) known = true;
        if (!known) throw DataError("model json: unknown field: " + key);
        (void)val;
    }
    ModelSpec s;
    for (int i = 0; i < nf; ++i) {
        if (!j.contains(kModelFields[i]))
            throw DataError(std::string("model json: missing field: ") + kModelFields[i]);
        const auto& v = j.at(kModelFields[i]);
        if (!v.is_number())
            throw DataError(std::string("model json: field is not a number: ") +
                            kModelFields[i]);
        *model_field(s, i) = v.get<double>();
    }
    s.validate();
    return s;
}

std::string to_json(const ModelSpec& spec) {
    ModelSpec copy = spec;
    nlohmann::ordered_json j;
    constexpr int nf = static_cast<int>(std::size(kModelFields));
    for (int i = 0; i < nf; ++i) j[kModelFields[i]] = *model_field(copy, i);
    return j.dump(2);
}

namespace {

struct LevelZ {
    // all y-dependent state of the model frozen at one slow-factor level
    const ModelSpec* spec;
    double z;
    Eigen::VectorXd grid;
    double h;
    PoissonSolution phi;
    double sigma_bar;

    double bracket(const std::function<double(double, int)>& vals) const {
        Eigen::VectorXd w(grid.size());
        for (int i = 0; i < grid.size(); ++i)
            w(i) = vals(grid(i), i) * normal_pdf(grid(i), spec->m, spec->nu);
        return simpson_sampled(w, h);
    }
};

LevelZ solve_level(const ModelSpec& spec, double z) {
    LevelZ lv;
    lv.spec = &spec;
    lv.z = z;
    lv.phi = poisson_solve([&](double y) { return spec.f(y, z) * spec.f(y, z); },
                           spec.m, spec.nu);
    // poisson_solve centers the source itself, so its recorded mean is <f^2>
    lv.sigma_bar = std::sqrt(lv.phi.source_mean);
    lv.grid = lv.phi.grid;
    lv.h = lv.grid(1) - lv.grid(0);
    return lv;
}

double v3_of(const LevelZ& lv) {
    const ModelSpec& s = *lv.spec;
    const double b = s.beta();
    return -0.5 * s.rho_xy *
           lv.bracket([&](double y, int i) { return b * s.f(y, lv.z) * lv.phi.phi_prime(i); });
}

double v2_of(const LevelZ& lv) {
    const ModelSpec& s = *lv.spec;
    const double b = s.beta();
    return 0.5 *
           lv.bracket([&](double y, int i) { return b * s.lam(y, lv.z) * lv.phi.phi_prime(i); });
}

} // namespace

ModelCoefficients group_params_from_model(const ModelSpec& spec, double z) {
    spec.validate();
    ModelCoefficients out;
    const double se = std::sqrt(spec.eps);
    const double sd = std::sqrt(spec.delta);
    const double b = spec.beta();
    const double g = spec.g_slow(z);

    const LevelZ lv = solve_level(spec, z);
    out.phi_at_current = lv.phi.phi_at(spec.y0);

    // slow-factor slopes of the averaged volatility and of <f>; first
    // derivatives at step 1e-4, the second derivative at 1e-3 because it
    // amplifies quadrature noise by 4/h^2
    const double h1 = 1e-4, h2 = 1e-3;
    const auto sigma_bar_at = [&](double zz) {
        return std::sqrt(gaussian_average(
            [&](double y) { return spec.f(y, zz) * spec.f(y, zz); }, spec.m, spec.nu));
    };
    const auto mean_f_at = [&](double zz) {
        return gaussian_average([&](double y) { return spec.f(y, zz); }, spec.m, spec.nu);
    };
    const auto mean_gam_at = [&](double zz) {
        return gaussian_average([&](double y) { return spec.gam(y, zz); }, spec.m, spec.nu);
    };
    const double sb = lv.sigma_bar;
    const double sbp = (sigma_bar_at(z + h1) - sigma_bar_at(z - h1)) / (2.0 * h1);
    const double sbpp =
        (sigma_bar_at(z + h2) - 2.0 * sb + sigma_bar_at(z - h2)) / (h2 * h2);
    const double mean_f = mean_f_at(z);
    const double mean_f_p = (mean_f_at(z + h1) - mean_f_at(z - h1)) / (2.0 * h1);
    const double mean_gam = mean_gam_at(z);
    const double mean_gam_p = (mean_gam_at(z + h1) - mean_gam_at(z - h1)) / (2.0 * h1);
    out.sigma_bar_prime = sbp;
    out.sigma_bar_second = sbpp;

    // first-order coefficients and their slow-factor slopes
    out.v3 = v3_of(lv);
    out.v2 = v2_of(lv);
    out.v1 = 0.5 * spec.rho_xz * sbp * g * mean_f;
    out.v0 = -0.5 * sbp * g * mean_gam;
    {
        const LevelZ up = solve_level(spec, z + h1);
        const LevelZ dn = solve_level(spec, z - h1);
        out.v3_prime = (v3_of(up) - v3_of(dn)) / (2.0 * h1);
        out.v2_prime = (v2_of(up) - v2_of(dn)) / (2.0 * h1);
    }
    // product rule, g constant in z: avoids nesting finite differences
    out.v1_prime = 0.5 * spec.rho_xz * g * (sbpp * mean_f + sbp * mean_f_p);
    out.v0_prime = -0.5 * g * (sbpp * mean_gam + sbp * mean_gam_p);

    // second layer of Poisson solves feeding the second-order brackets
    const PoissonSolution psi1 = poisson_solve(
        [&](double y) { return b * spec.f(y, z) * lv.phi.phi_prime_at(y); }, spec.m,
        spec.nu);
    const PoissonSolution psi2 = poisson_solve(
        [&](double y) { return b * spec.lam(y, z) * lv.phi.phi_prime_at(y); }, spec.m,
        spec.nu);
    const PoissonSolution psi3 =
        poisson_solve([&](double y) { return spec.f(y, z); }, spec.m, spec.nu);
    const PoissonSolution psi4 =
        poisson_solve([&](double y) { return spec.gam(y, z); }, spec.m, spec.nu);

    const auto br = [&](const PoissonSolution& p, bool with_f) {
        return lv.bracket([&](double y, int i) {
            const double lead = with_f ? spec.f(y, z) : spec.lam(y, z);
            return b * lead * p.phi_prime(i);
        });
    };
    out.a2 = 0.5 * spec.rho_xy * spec.rho_xy * br(psi1, true);
    out.a1 = -0.5 * spec.rho_xy * (br(psi1, false) + br(psi2, true));
    out.a0 = 0.5 * br(psi2, false);
    {
        const double phi_f2 = lv.bracket([&](double y, int i) {
            return lv.phi.phi(i) * spec.f(y, z) * spec.f(y, z);
        });
        const double phi_mean = lv.bracket([&](double, int i) { return lv.phi.phi(i); });
        out.a = -0.25 * (phi_f2 - phi_mean * (sb * sb));
    }

    out.c2 = -spec.rho_xy * spec.rho_xz * sbp * g * br(psi3, true);
    out.c1 = sbp * g * (spec.rho_xz * br(psi3, false) + spec.rho_xy * br(psi4, true));
    out.c0 = -sbp * g * br(psi4, false);
    out.c = -0.5 * spec.rho_yz * sbp * g *
            lv.bracket([&](double, int i) { return b * lv.phi.phi_prime(i); });

    out.b2 = 0.5 * g * g * sbp * sbp;
    out.b1 = 0.5 * g * g * sbpp + spec.c_slow(z) * sbp;

    // absorb the half-integer scale powers
    GroupParams& p = out.params;
    out.unreduced.sigma_bar = sb;
    out.unreduced.v2 = se * out.v2;
    p.sigma_star = reduce_params(out.unreduced);
    p.v3_eps = se * out.v3;
    p.v1_del = sd * out.v1;
    p.v0_del = sd * out.v0;
    p.c2_ed = se * sd * out.c2;
    p.c1_ed = se * sd * out.c1;
    p.c0_ed = se * sd * out.c0;
    p.c_ed = se * sd * out.c;
    p.a2_eps = spec.eps * out.a2;
    p.a1_eps = spec.eps * out.a1;
    p.a0_eps = spec.eps * out.a0;
    p.a_eps = spec.eps * out.a;
    p.b2_del = spec.delta * out.b2;
    p.b1_del = spec.delta * out.b1;
    // the slope ratios are 0/0 in models where f ignores z; define them as 0
    const auto ratio = [&](double num) { return std::abs(sbp) > 1e-12 ? num / sbp : 0.0; };
    p.r_v3 = ratio(se * out.v3_prime);
    p.r_v1 = ratio(sd * out.v1_prime);
    p.r_v0 = ratio(sd * out.v0_prime);
    p.phi_eps = spec.eps * out.phi_at_current;
    out.r_v2 = ratio(se * out.v2_prime);
    return out;
}

} // namespace msvol
