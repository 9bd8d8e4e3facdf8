#include "oracles.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace msvol::oracle {

namespace {

double normal_pdf(double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::acos(-1.0));
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

} // namespace

double norm_cdf_quad(double x) {
    // integrate the density from 0 outward; never from the far tail, where
    // the integrand is zero for most of the range
    if (x >= 0.0) {
        if (x > 40.0) return 1.0;
        return 0.5 + integrate(normal_pdf, 0.0, x, 1e-16);
    }
    if (x < -40.0) return 0.0;
    return 0.5 - integrate(normal_pdf, x, 0.0, 1e-16);
}

double bs_price_quad(double tau, double spot, double strike, double rate,
                     double sigma, OptionKind kind) {
    const double st = sigma * std::sqrt(tau);
    const double d1 =
        (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * tau) / st;
    const double d2 = d1 - st;
    const double df = std::exp(-rate * tau);
    if (kind == OptionKind::Call)
        return spot * norm_cdf_quad(d1) - strike * df * norm_cdf_quad(d2);
    return strike * df * norm_cdf_quad(-d2) - spot * norm_cdf_quad(-d1);
}

long double bs_price_ld(long double tau, long double spot, long double strike,
                        long double rate, long double sigma, bool call) {
    const long double st = sigma * sqrtl(tau);
    const long double d1 =
        (logl(spot / strike) + (rate + 0.5L * sigma * sigma) * tau) / st;
    const long double d2 = d1 - st;
    const long double df = expl(-rate * tau);
    const auto cdf = [](long double x) { return 0.5L * erfcl(-x / sqrtl(2.0L)); };
    if (call) return spot * cdf(d1) - strike * df * cdf(d2);
    return strike * df * cdf(-d2) - spot * cdf(-d1);
}

namespace {

using Fld = std::function<long double(long double)>;

// Richardson-extrapolated central differences for derivative orders 1..6.
// The steps grow with the order: the n-th difference divides rounding noise
// by h^n, so a flat 1e-4 step would be pure noise by the sixth derivative.
long double central_diff(const Fld& f, long double f0, int order,
                         long double h) {
    switch (order) {
        case 1: return (f(h) - f(-h)) / (2.0L * h);
        case 2: return (f(h) - 2.0L * f0 + f(-h)) / (h * h);
        case 3:
            return (f(2.0L * h) - 2.0L * f(h) + 2.0L * f(-h) - f(-2.0L * h)) /
                   (2.0L * h * h * h);
        case 4:
            return (f(2.0L * h) - 4.0L * f(h) + 6.0L * f0 - 4.0L * f(-h) +
                    f(-2.0L * h)) /
                   (h * h * h * h);
        case 5:
            return (f(3.0L * h) - 4.0L * f(2.0L * h) + 5.0L * f(h) -
                    5.0L * f(-h) + 4.0L * f(-2.0L * h) - f(-3.0L * h)) /
                   (2.0L * h * h * h * h * h);
        default:
            return (f(3.0L * h) - 6.0L * f(2.0L * h) + 15.0L * f(h) -
                    20.0L * f0 + 15.0L * f(-h) - 6.0L * f(-2.0L * h) +
                    f(-3.0L * h)) /
                   (h * h * h * h * h * h);
    }
}

long double richardson(const Fld& f, long double f0, int order, long double h) {
    const long double coarse = central_diff(f, f0, order, h);
    const long double fine = central_diff(f, f0, order, h * 0.5L);
    return (4.0L * fine - coarse) / 3.0L;
}

} // namespace

Eigen::Matrix3d fd_log_greeks(double tau, double spot, double strike,
                              double rate, double sigma, OptionKind kind) {
    const bool call = kind == OptionKind::Call;
    const long double s0 = logl(static_cast<long double>(spot));
    const Fld f = [&](long double ds) {
        return bs_price_ld(tau, expl(s0 + ds), strike, rate, sigma, call);
    };
    const long double f0 = f(0.0L);
    long double dn[7];
    dn[0] = f0;
    const long double steps[7] = {0.0L, 1e-4L, 1e-4L, 1e-3L, 1e-3L, 4e-3L, 4e-3L};
    for (int n = 1; n <= 6; ++n) dn[n] = richardson(f, f0, n, steps[n]);

    Eigen::Matrix3d d;
    d(0, 0) = static_cast<double>(dn[0]);
    d(1, 0) = static_cast<double>(dn[1]);
    d(2, 0) = static_cast<double>(dn[2]);
    d(0, 1) = static_cast<double>(dn[2] - dn[1]);
    d(1, 1) = static_cast<double>(dn[3] - dn[2]);
    d(2, 1) = static_cast<double>(dn[4] - dn[3]);
    d(0, 2) = static_cast<double>(dn[4] - 2.0L * dn[3] + dn[2]);
    d(1, 2) = static_cast<double>(dn[5] - 2.0L * dn[4] + dn[3]);
    d(2, 2) = static_cast<double>(dn[6] - 2.0L * dn[5] + dn[4]);
    return d;
}

double fd_vega(double tau, double spot, double strike, double rate,
               double sigma, OptionKind kind) {
    const bool call = kind == OptionKind::Call;
    const Fld f = [&](long double dv) {
        return bs_price_ld(tau, spot, strike, rate, sigma + dv, call);
    };
    return static_cast<double>(richardson(f, f(0.0L), 1, 2e-3L));
}

double fd_vomma(double tau, double spot, double strike, double rate,
                double sigma, OptionKind kind) {
    const bool call = kind == OptionKind::Call;
    const Fld f = [&](long double dv) {
        return bs_price_ld(tau, spot, strike, rate, sigma + dv, call);
    };
    const long double f0 = f(0.0L);
    // two Richardson levels: the plain second difference leaves an h^4 term
    // too large at steps big enough to beat rounding noise
    const long double h = 8e-3L;
    const long double d1 = central_diff(f, f0, 2, h);
    const long double d2 = central_diff(f, f0, 2, h * 0.5L);
    const long double d4 = central_diff(f, f0, 2, h * 0.25L);
    const long double r1 = (4.0L * d2 - d1) / 3.0L;
    const long double r2 = (4.0L * d4 - d2) / 3.0L;
    return static_cast<double>((16.0L * r2 - r1) / 15.0L);
}

GaussHermite GaussHermite::make(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(0.5 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        gh.weights(i) = v0 * v0;  // normalized: weights sum to one
    }
    return gh;
}

double GaussHermite::average(const std::function<double(double)>& f, double m,
                             double nu) const {
    const double root2nu = std::sqrt(2.0) * nu;
    double acc = 0.0;
    for (int i = 0; i < nodes.size(); ++i)
        acc += weights(i) * f(m + root2nu * nodes(i));
    return acc;
}

namespace {

double lagrange4(const std::vector<double>& y, const std::vector<double>& v,
                 double yy) {
    const int n = static_cast<int>(y.size());
    const double h = y[1] - y[0];
    int i0 = static_cast<int>(std::floor((yy - y[0]) / h)) - 1;
    if (i0 < 0) i0 = 0;
    if (i0 > n - 4) i0 = n - 4;
    double out = 0.0;
    for (int j = 0; j < 4; ++j) {
        double term = v[i0 + j];
        for (int k = 0; k < 4; ++k) {
            if (k == j) continue;
            term *= (yy - y[i0 + k]) / (y[i0 + j] - y[i0 + k]);
        }
        out += term;
    }
    return out;
}

} // namespace

double OdePoisson::at(double yy) const { return lagrange4(y, u, yy); }
double OdePoisson::prime_at(double yy) const { return lagrange4(y, du, yy); }

OdePoisson ode_poisson(const std::function<double(double)>& chi, double m,
                       double nu, int steps_per_side) {
    // domain wider than the library's so Gauss-Hermite nodes stay interior
    const double half = 12.0 * nu;
    static const GaussHermite gh = GaussHermite::make(256);
    const double chi_mean = gh.average(chi, m, nu);
    const auto src = [&](double y) { return chi(y) - chi_mean; };
    const double nu2 = nu * nu;

    // first-order system u' = v, v' = (s - (m - y) v) / nu^2 marched by RK4
    const auto march = [&](double y_start, double h, int steps,
                           std::vector<double>& ys, std::vector<double>& us,
                           std::vector<double>& vs) {
        double y = y_start;
        double v = src(y) / (m - y);  // leading tail asymptotics
        double u = 0.0;
        ys.push_back(y);
        us.push_back(u);
        vs.push_back(v);
        const auto dv = [&](double yy, double vv) {
            return (src(yy) - (m - yy) * vv) / nu2;
        };
        for (int i = 0; i < steps; ++i) {
            const double k1u = v, k1v = dv(y, v);
            const double k2u = v + 0.5 * h * k1v, k2v = dv(y + 0.5 * h, v + 0.5 * h * k1v);
            const double k3u = v + 0.5 * h * k2v, k3v = dv(y + 0.5 * h, v + 0.5 * h * k2v);
            const double k4u = v + h * k3v, k4v = dv(y + h, v + h * k3v);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            y = y_start + (i + 1) * h;
            ys.push_back(y);
            us.push_back(u);
            vs.push_back(v);
        }
    };

    const double h = half / steps_per_side;
    std::vector<double> yl, ul, vl, yr, ur, vr;
    march(m - half, h, steps_per_side, yl, ul, vl);
    march(m + half, -h, steps_per_side, yr, ur, vr);

    // glue the right-side branch so u is continuous at the mean
    const double shift = ul.back() - ur.back();
    OdePoisson sol;
    sol.y = yl;
    sol.u = ul;
    sol.du = vl;
    for (int i = static_cast<int>(yr.size()) - 2; i >= 0; --i) {
        sol.y.push_back(yr[i]);
        sol.u.push_back(ur[i] + shift);
        sol.du.push_back(vr[i]);
    }
    const double u_mean =
        gh.average([&](double yy) { return sol.at(yy); }, m, nu);
    for (double& uu : sol.u) uu -= u_mean;
    return sol;
}

GroupParams group_params_oracle(const ModelSpec& spec, double z) {
    static const GaussHermite gh = GaussHermite::make(128);
    const double m = spec.m, nu = spec.nu;
    const double se = std::sqrt(spec.eps);
    const double sd = std::sqrt(spec.delta);
    const double b = spec.beta();
    const double g = spec.g_slow(z);

    const auto avg = [&](const std::function<double(double)>& f) {
        return gh.average(f, m, nu);
    };
    const auto sigma_bar_at = [&](double zz) {
        return std::sqrt(gh.average(
            [&](double y) { return spec.f(y, zz) * spec.f(y, zz); }, m, nu));
    };
    const auto mean_f_at = [&](double zz) {
        return gh.average([&](double y) { return spec.f(y, zz); }, m, nu);
    };
    const auto mean_gam_at = [&](double zz) {
        return gh.average([&](double y) { return spec.gam(y, zz); }, m, nu);
    };
    const auto phi_at_level = [&](double zz) {
        return ode_poisson(
            [&](double y) { return spec.f(y, zz) * spec.f(y, zz); }, m, nu);
    };
    const auto v3_at = [&](const OdePoisson& p, double zz) {
        return -0.5 * spec.rho_xy * avg([&](double y) {
                   return b * spec.f(y, zz) * p.prime_at(y);
               });
    };
    const auto v2_at = [&](const OdePoisson& p, double zz) {
        return 0.5 * avg([&](double y) {
                   return b * spec.lam(y, zz) * p.prime_at(y);
               });
    };

    const OdePoisson phi = phi_at_level(z);
    const double sb = sigma_bar_at(z);
    const double h1 = 1e-4, h2 = 1e-3;  // mirrors the library's stencils
    const double sbp = (sigma_bar_at(z + h1) - sigma_bar_at(z - h1)) / (2.0 * h1);
    const double sbpp =
        (sigma_bar_at(z + h2) - 2.0 * sb + sigma_bar_at(z - h2)) / (h2 * h2);
    const double mean_f = mean_f_at(z);
    const double mean_f_p = (mean_f_at(z + h1) - mean_f_at(z - h1)) / (2.0 * h1);
    const double mean_gam = mean_gam_at(z);

    const double v3 = v3_at(phi, z);
    const double v2 = v2_at(phi, z);
    const double v1 = 0.5 * spec.rho_xz * sbp * g * mean_f;
    const double v0 = -0.5 * sbp * g * mean_gam;
    const OdePoisson phi_up = phi_at_level(z + h1);
    const OdePoisson phi_dn = phi_at_level(z - h1);
    const double v3p = (v3_at(phi_up, z + h1) - v3_at(phi_dn, z - h1)) / (2.0 * h1);
    const double v1p = 0.5 * spec.rho_xz * g * (sbpp * mean_f + sbp * mean_f_p);
    const double mean_gam_p =
        (mean_gam_at(z + h1) - mean_gam_at(z - h1)) / (2.0 * h1);
    const double v0p = -0.5 * g * (sbpp * mean_gam + sbp * mean_gam_p);

    const OdePoisson psi1 = ode_poisson(
        [&](double y) { return b * spec.f(y, z) * phi.prime_at(y); }, m, nu);
    const OdePoisson psi2 = ode_poisson(
        [&](double y) { return b * spec.lam(y, z) * phi.prime_at(y); }, m, nu);
    const OdePoisson psi3 =
        ode_poisson([&](double y) { return spec.f(y, z); }, m, nu);
    const OdePoisson psi4 =
        ode_poisson([&](double y) { return spec.gam(y, z); }, m, nu);
    const auto br = [&](const OdePoisson& p, bool with_f) {
        return avg([&](double y) {
            const double lead = with_f ? spec.f(y, z) : spec.lam(y, z);
            return b * lead * p.prime_at(y);
        });
    };

    const double a2 = 0.5 * spec.rho_xy * spec.rho_xy * br(psi1, true);
    const double a1 = -0.5 * spec.rho_xy * (br(psi1, false) + br(psi2, true));
    const double a0 = 0.5 * br(psi2, false);
    const double phi_f2 = avg(
        [&](double y) { return phi.at(y) * spec.f(y, z) * spec.f(y, z); });
    const double phi_mean = avg([&](double y) { return phi.at(y); });
    const double a = -0.25 * (phi_f2 - phi_mean * sb * sb);

    const double c2 = -spec.rho_xy * spec.rho_xz * sbp * g * br(psi3, true);
    const double c1 =
        sbp * g * (spec.rho_xz * br(psi3, false) + spec.rho_xy * br(psi4, true));
    const double c0 = -sbp * g * br(psi4, false);
    const double cc = -0.5 * spec.rho_yz * sbp * g *
                      avg([&](double y) { return b * phi.prime_at(y); });

    const double b2 = 0.5 * g * g * sbp * sbp;
    const double b1 = 0.5 * g * g * sbpp + spec.c_slow(z) * sbp;

    GroupParams p;
    p.sigma_star = std::sqrt(sb * sb + 2.0 * se * v2);
    p.v3_eps = se * v3;
    p.v1_del = sd * v1;
    p.v0_del = sd * v0;
    p.c2_ed = se * sd * c2;
    p.c1_ed = se * sd * c1;
    p.c0_ed = se * sd * c0;
    p.c_ed = se * sd * cc;
    p.a2_eps = spec.eps * a2;
    p.a1_eps = spec.eps * a1;
    p.a0_eps = spec.eps * a0;
    p.a_eps = spec.eps * a;
    p.b2_del = spec.delta * b2;
    p.b1_del = spec.delta * b1;
    const auto ratio = [&](double num) {
        return std::abs(sbp) > 1e-12 ? num / sbp : 0.0;
    };
    p.r_v3 = ratio(se * v3p);
    p.r_v1 = ratio(sd * v1p);
    p.r_v0 = ratio(sd * v0p);
    p.phi_eps = spec.eps * phi.at(spec.y0);
    return p;
}

SurfaceCoeffs theta_from_phi_ld(const GroupParams& phi) {
    // transcribed term by term from the displayed coefficient equations, kept
    // deliberately separate from the templated library implementation
    const long double sg = phi.sigma_star;
    const long double V3 = phi.v3_eps, V1 = phi.v1_del, V0 = phi.v0_del;
    const long double C2 = phi.c2_ed, C1 = phi.c1_ed, C0 = phi.c0_ed,
                      C = phi.c_ed;
    const long double A2 = phi.a2_eps, A1 = phi.a1_eps, A0 = phi.a0_eps,
                      A = phi.a_eps;
    const long double B2 = phi.b2_del, B1 = phi.b1_del;
    const long double R3 = phi.r_v3, R1 = phi.r_v1, R0 = phi.r_v0;
    const long double Ph = phi.phi_eps;
    const auto pw = [&](int n) {
        long double r = 1.0L;
        for (int i = 0; i < n; ++i) r *= sg;
        return r;
    };

    SurfaceCoeffs t;
    t.k = static_cast<double>(3.0L * V3 * V3 / (2.0L * pw(5)) - A2 / pw(3) -
                              A / pw(3) - Ph / (2.0L * sg));
    t.l = static_cast<double>(
        3.0L * V1 * V3 / pw(4) - C2 / (2.0L * pw(2)) - C / (2.0L * pw(2)) +
        A0 / sg + A1 / (2.0L * sg) + A2 / (4.0L * sg) - A / (4.0L * sg) -
        V1 * R3 / pw(3) + sg + V3 / (2.0L * sg));
    t.m = static_cast<double>(
        B1 / 2.0L + C0 / 2.0L + C1 / 4.0L + C2 / 8.0L - C / 8.0L +
        5.0L * V1 * V1 / (6.0L * pw(3)) - V0 * V3 / (2.0L * pw(2)) +
        B2 / (6.0L * sg) - 2.0L * V1 * R1 / (3.0L * pw(2)) +
        V0 * R3 / (2.0L * sg) + V1 * R3 / (4.0L * sg) + V0 + V1 / 2.0L);
    t.n = static_cast<double>(
        V0 * V0 / (6.0L * sg) + V0 * V1 / (6.0L * sg) + V1 * V1 / (6.0L * sg) -
        B2 * sg / 12.0L + 2.0L * V0 * R0 / 3.0L + R0 * V1 / 3.0L +
        V0 * R1 / 3.0L + V1 * R1 / 6.0L);
    t.p = static_cast<double>(-3.0L * V3 * V3 / (2.0L * pw(5)) + A1 / pw(3) +
                              A2 / pw(3) + V3 / pw(3));
    t.q = static_cast<double>(-3.0L * V0 * V3 / pw(4) - 3.0L * V1 * V3 / pw(4) +
                              C1 / (2.0L * pw(2)) + C2 / (2.0L * pw(2)) +
                              V0 * R3 / pw(3) + V1 * R3 / pw(3) + V1 / pw(2));
    t.s = static_cast<double>(-5.0L * V0 * V1 / (3.0L * pw(3)) -
                              5.0L * V1 * V1 / (6.0L * pw(3)) +
                              2.0L * R0 * V1 / (3.0L * pw(2)) +
                              2.0L * V0 * R1 / (3.0L * pw(2)) +
                              2.0L * V1 * R1 / (3.0L * pw(2)));
    t.u = static_cast<double>(-3.0L * V3 * V3 / pw(7) + A2 / pw(5) + A / pw(5));
    t.v = static_cast<double>(-6.0L * V1 * V3 / pw(6) + C2 / (2.0L * pw(4)) +
                              C / (2.0L * pw(4)) + V1 * R3 / pw(5));
    t.w = static_cast<double>(-7.0L * V1 * V1 / (3.0L * pw(5)) +
                              B2 / (3.0L * pw(3)) +
                              2.0L * V1 * R1 / (3.0L * pw(4)));
    return t;
}

double surface_iv_ld(const SurfaceCoeffs& theta, double tau, double d) {
    const long double t = tau, dd = d;
    const long double lvl = theta.k / t + theta.l + theta.m * t +
                            theta.n * t * t;
    const long double skew =
        dd / t * (theta.p + theta.q * t + theta.s * t * t);
    const long double curv =
        dd * dd / (t * t) * (theta.u + theta.v * t + theta.w * t * t);
    return static_cast<double>(lvl + skew + curv);
}

Eigen::VectorXd theta_standard_errors(const std::vector<PreparedQuote>& quotes,
                                      double noise_sd) {
    const int n = static_cast<int>(quotes.size());
    Eigen::MatrixXd X(n, kNumSurfaceCoeffs);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        X.row(i) = surface_basis(quotes[i].tau, quotes[i].d).transpose();
        w(i) = quotes[i].weight;
    }
    // sandwich form: theta-hat = (X'WX)^{-1} X'W y with iid noise on y
    const Eigen::MatrixXd M = X.transpose() * w.asDiagonal() * X;
    const Eigen::MatrixXd Minv = M.fullPivLu().inverse();
    const Eigen::MatrixXd S =
        Minv * X.transpose() * w.cwiseProduct(w).asDiagonal() * X * Minv;
    return noise_sd * S.diagonal().cwiseSqrt();
}

} // namespace msvol::oracle
