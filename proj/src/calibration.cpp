#include "msvol/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "msvol/dual.hpp"
#include "msvol/rng.hpp"

namespace msvol {

namespace {

using Vec18 = Eigen::Matrix<double, kNumGroupParams, 1>;
using Vec10 = Eigen::Matrix<double, kNumSurfaceCoeffs, 1>;
using Mat10x18 = Eigen::Matrix<double, kNumSurfaceCoeffs, kNumGroupParams>;

const char* const kBasisNames[kNumSurfaceCoeffs] = {
    "1/tau", "1", "tau", "tau^2", "d/tau", "d", "d*tau", "d^2/tau^2", "d^2/tau", "d^2"};

} // namespace

PreparedChain prepare_quotes(const std::vector<OptionQuote>& raw,
                             const PrepareOptions& options) {
    PreparedChain out;
    for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
        const OptionQuote& q = raw[i];
        auto drop = [&](const std::string& reason) {
            out.dropped.push_back({i, reason});
        };
        if (!(q.expiry_years > 0.0) || !(q.strike > 0.0) || !(q.spot > 0.0)) {
            drop("non-positive expiry, strike, or spot");
            continue;
        }
        if (!std::isfinite(q.rate) || !(q.weight >= 0.0)) {
            drop("non-finite rate or negative weight");
            continue;
        }
        if (!q.iv && !q.price) {
            drop("neither iv nor price given");
            continue;
        }
        if (q.expiry_years < options.min_tau) {
            drop("expiry below minimum time to maturity");
            continue;
        }
        double iv = 0.0;
        if (q.iv) {
            if (!(*q.iv > 0.0) || !std::isfinite(*q.iv)) {
                drop("non-positive iv");
                continue;
            }
            iv = *q.iv;
        } else {
            const OptionSpec spec{q.expiry_years, q.spot, q.strike, q.rate, q.kind};
            try {
                iv = implied_vol(spec, *q.price);
            } catch (const Error& e) {
                drop(std::string("price not invertible: ") + e.what());
                continue;
            }
        }
        PreparedQuote p;
        p.tau = q.expiry_years;
        p.d = std::log(q.strike / (q.spot * std::exp(q.rate * q.expiry_years)));
        p.iv = iv;
        p.source = i;
        p.weight = q.weight;
        if (options.weighting == Weighting::Vega) {
            const OptionSpec spec{q.expiry_years, q.spot, q.strike, q.rate, q.kind};
            p.weight *= log_greeks(spec, iv).vega;
        }
        out.quotes.push_back(p);
    }
    if (out.quotes.empty())
        throw DataError("no usable quotes after preparation; calibration impossible");
    return out;
}

Eigen::Matrix<double, kNumSurfaceCoeffs, 1> surface_basis(double tau, double d) {
    if (!(tau > 0.0)) throw DataError("surface basis requires tau > 0");
    Vec10 b;
    const double it = 1.0 / tau;
    b << it, 1.0, tau, tau * tau, d * it, d, d * tau, d * d * it * it, d * d * it,
        d * d;
    return b;
}

ThetaFit fit_theta(const std::vector<PreparedQuote>& quotes,
                   const FitThetaOptions& options) {
    const int n = static_cast<int>(quotes.size());
    if (n == 0) throw DataError("cannot fit surface coefficients to an empty set");

    ThetaFit fit;
    {
        std::set<double> taus, ds;
        for (const auto& q : quotes) {
            taus.insert(q.tau);
            ds.insert(q.d);
        }
        if (n < 10 || taus.size() < 2 || ds.size() < 3)
            fit.warnings.push_back(
                "thin chain: need >= 10 quotes over >= 2 expiries and >= 3 strikes "
                "for a well-posed fit");
    }

    Eigen::MatrixXd X(n, kNumSurfaceCoeffs);
    Eigen::VectorXd y(n), sw(n);
    for (int i = 0; i < n; ++i) {
        X.row(i) = surface_basis(quotes[i].tau, quotes[i].d).transpose();
        y(i) = quotes[i].iv;
        sw(i) = std::sqrt(quotes[i].weight);
    }
    const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    const Eigen::VectorXd yw = sw.asDiagonal() * y;

    // Full V so that designs with fewer rows than coefficients still expose
    // their missing directions (thin SVD would only report min(n, 10) values).
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xw, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    auto sval = [&](int j) { return j < sv.size() ? sv(j) : 0.0; };
    const double smax = sval(0);
    const double smin = sval(kNumSurfaceCoeffs - 1);
    fit.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

    if (fit.condition > options.condition_limit && options.ridge == 0.0) {
        std::ostringstream msg;
        msg << "rank-deficient surface design (condition " << fit.condition
            << "); deficient directions:";
        const Eigen::MatrixXd& V = svd.matrixV();
        for (int j = 0; j < kNumSurfaceCoeffs; ++j) {
            if (sval(j) > smax / options.condition_limit) continue;
            msg << " [";
            bool first = true;
            for (int r = 0; r < kNumSurfaceCoeffs; ++r) {
                if (std::abs(V(r, j)) < 0.25) continue;
                if (!first) msg << ", ";
                msg << kBasisNames[r];
                first = false;
            }
            msg << "]";
        }
        throw DataError(msg.str());
    }

    Vec10 theta;
    if (options.ridge > 0.0) {
        const Eigen::MatrixXd H =
            Xw.transpose() * Xw +
            options.ridge * Eigen::MatrixXd::Identity(kNumSurfaceCoeffs, kNumSurfaceCoeffs);
        theta = H.ldlt().solve(Xw.transpose() * yw);
    } else {
        theta = Xw.colPivHouseholderQr().solve(yw);
    }

    fit.theta = coeffs_from_vector(theta);
    fit.residuals = X * theta - y;
    fit.rmse = std::sqrt(fit.residuals.squaredNorm() / n);
    return fit;
}

namespace {

// Stage-2 working state: t(0) = log sigma_star keeps positivity; the other 17
// coordinates are the raw parameters.
Vec18 phi_of_t(const Vec18& t) {
    Vec18 phi = t;
    phi(0) = std::exp(t(0));
    return phi;
}

struct ThetaJac {
    Vec10 value;
    Mat10x18 jac;  // with respect to the raw parameter vector
};

ThetaJac theta_with_jacobian(const Vec18& phi) {
    using D = Dual<kNumGroupParams>;
    Eigen::Matrix<D, kNumGroupParams, 1> seeded;
    for (int i = 0; i < kNumGroupParams; ++i) seeded(i) = D::seed(phi(i), i);
    GroupParamsT<D> p;
    p.sigma_star = seeded(0);
    p.v3_eps = seeded(1);
    p.v1_del = seeded(2);
    p.v0_del = seeded(3);
    p.c2_ed = seeded(4);
    p.c1_ed = seeded(5);
    p.c0_ed = seeded(6);
    p.c_ed = seeded(7);
    p.a2_eps = seeded(8);
    p.a1_eps = seeded(9);
    p.a0_eps = seeded(10);
    p.a_eps = seeded(11);
    p.b2_del = seeded(12);
    p.b1_del = seeded(13);
    p.r_v3 = seeded(14);
    p.r_v1 = seeded(15);
    p.r_v0 = seeded(16);
    p.phi_eps = seeded(17);
    const SurfaceCoeffsT<D> th = theta_from_phi_t<D>(p);
    const D* rows[kNumSurfaceCoeffs] = {&th.k, &th.l, &th.m, &th.n, &th.p,
                                        &th.q, &th.s, &th.u, &th.v, &th.w};
    ThetaJac out;
    for (int i = 0; i < kNumSurfaceCoeffs; ++i) {
        out.value(i) = rows[i]->v;
        out.jac.row(i) = rows[i]->g.transpose();
    }
    return out;
}

struct PenaltyEval {
    Eigen::VectorXd r;   // 28 rows: scaled phi, then sqrt(mu) * constraint gap
    Eigen::MatrixXd J;   // 28 x 18, with respect to t
    double cost = 0.0;
};

PenaltyEval eval_penalty(const Vec18& t, const Vec10& target, double mu,
                         const Vec18& inv_scale) {
    const Vec18 phi = phi_of_t(t);
    const ThetaJac th = theta_with_jacobian(phi);

    // d phi / d t is the identity except d phi0 / d t0 = phi0.
    Vec18 dphi_dt = Vec18::Ones();
    dphi_dt(0) = phi(0);

    PenaltyEval e;
    const int rows = kNumGroupParams + kNumSurfaceCoeffs;
    e.r.resize(rows);
    e.J.setZero(rows, kNumGroupParams);
    for (int i = 0; i < kNumGroupParams; ++i) {
        e.r(i) = phi(i) * inv_scale(i);
        e.J(i, i) = dphi_dt(i) * inv_scale(i);
    }
    const double smu = std::sqrt(mu);
    for (int i = 0; i < kNumSurfaceCoeffs; ++i) {
        e.r(kNumGroupParams + i) = smu * (th.value(i) - target(i));
        e.J.row(kNumGroupParams + i) =
            smu * (th.jac.row(i).array() * dphi_dt.transpose().array()).matrix();
    }
    e.cost = 0.5 * e.r.squaredNorm();
    return e;
}

// Levenberg-Marquardt on the stacked penalty residual.
void lm_minimize(Vec18& t, const Vec10& target, double mu, const Vec18& inv_scale) {
    double lambda = 1e-3;
    PenaltyEval e = eval_penalty(t, target, mu, inv_scale);
    for (int iter = 0; iter < 80; ++iter) {
        const Eigen::VectorXd g = e.J.transpose() * e.r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
        const Eigen::MatrixXd H = e.J.transpose() * e.J;
        bool accepted = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd Hl = H;
            for (int i = 0; i < kNumGroupParams; ++i)
                Hl(i, i) += lambda * std::max(H(i, i), 1e-12);
            const Vec18 dx = Hl.ldlt().solve(-g);
            const Vec18 t_try = t + dx;
            if (std::abs(t_try(0)) < 50.0) {  // keep exp(t0) representable
                PenaltyEval e_try = eval_penalty(t_try, target, mu, inv_scale);
                if (e_try.cost < e.cost) {
                    t = t_try;
                    e = std::move(e_try);
                    lambda = std::max(lambda / 3.0, 1e-12);
                    accepted = true;
                    if (dx.norm() < 1e-15) return;
                    break;
                }
            }
            lambda *= 3.0;
            if (lambda > 1e14) return;
        }
        if (!accepted) return;
    }
}

// Exact-constraint polish: minimal-norm Newton steps onto the coefficient
// manifold, keeping sigma_star positive.
void project_to_constraint(Vec18& phi, const Vec10& target) {
    for (int iter = 0; iter < 20; ++iter) {
        const ThetaJac th = theta_with_jacobian(phi);
        const Vec10 gap = th.value - target;
        if (gap.lpNorm<Eigen::Infinity>() < 1e-13) return;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(th.jac);
        Vec18 step = cod.solve(-gap);
        double scale = 1.0;
        while (phi(0) + scale * step(0) <= 1e-8 && scale > 1e-6) scale *= 0.5;
        phi += scale * step;
    }
}

// Slide along the coefficient manifold toward the minimum-norm point. The
// penalty stage lands somewhere feasible but starts at different spots settle
// on different points of the eight-dimensional solution set; this removes the
// start dependence. Each step solves the linearized problem
//   min ||S (phi + step)||^2  subject to  J step = -gap,  S = diag(inv_scale)
// and re-projects, so the fixed point satisfies the stationarity condition
// S^2 phi in range(J^T).
void refine_minimum_norm(Vec18& phi, const Vec10& target, const Vec18& inv_scale) {
    auto scaled_norm2 = [&](const Vec18& x) {
        return (x.array() * inv_scale.array()).matrix().squaredNorm();
    };
    double merit = scaled_norm2(phi);
    for (int iter = 0; iter < 120; ++iter) {
        const ThetaJac th = theta_with_jacobian(phi);
        const Vec10 gap = th.value - target;
        // Work in u = S * step so the objective is plain Euclidean there.
        Mat10x18 A = th.jac;
        for (int j = 0; j < kNumGroupParams; ++j) A.col(j) /= inv_scale(j);
        const Vec18 psi = (phi.array() * inv_scale.array()).matrix();
        const Vec10 rhs = A * psi - gap;
        const Vec10 mult = (A * A.transpose()).ldlt().solve(rhs);
        const Vec18 u = A.transpose() * mult - psi;
        const Vec18 step = (u.array() / inv_scale.array()).matrix();
        if (step.norm() < 1e-13 * std::max(1.0, phi.norm())) break;
        double alpha = 1.0;
        bool moved = false;
        for (int tries = 0; tries < 30 && !moved; ++tries) {
            Vec18 trial = phi + alpha * step;
            if (trial(0) > 1e-8) {
                project_to_constraint(trial, target);
                const ThetaJac tht = theta_with_jacobian(trial);
                const double resid = (tht.value - target).lpNorm<Eigen::Infinity>();
                const double m = scaled_norm2(trial);
                if (resid <= 1e-10 && m <= merit * (1.0 - 1e-14)) {
                    phi = trial;
                    merit = m;
                    moved = true;
                }
            }
            alpha *= 0.5;
        }
        if (!moved) break;
    }
}

} // namespace

RecoverResult recover_phi(const SurfaceCoeffs& theta, const RecoverOptions& options) {
    const Vec10 target = to_vector(theta);
    for (int i = 0; i < kNumSurfaceCoeffs; ++i)
        if (!std::isfinite(target(i)))
            throw DataError("non-finite surface coefficient in recovery target");
    if (options.starts < 1) throw DataError("need at least one start");

    Vec18 inv_scale = Vec18::Ones();
    if (options.scaling.size() != 0) {
        if (options.scaling.size() != kNumGroupParams)
            throw DataError("scaling vector must have one entry per parameter");
        for (int i = 0; i < kNumGroupParams; ++i) {
            if (!(options.scaling(i) > 0.0))
                throw DataError("scaling entries must be positive");
            inv_scale(i) = 1.0 / options.scaling(i);
        }
    }

    const double sigma_seed = std::max(theta.l, 1e-3);

    struct Candidate {
        Vec18 phi;
        double objective = 0.0;
        double resid = 0.0;
        int start = -1;
    };
    std::optional<Candidate> best;

    for (int start = 0; start < options.starts; ++start) {
        Vec18 t = Vec18::Zero();
        t(0) = std::log(sigma_seed);
        if (start > 0) {
            auto rng = stream_rng(options.seed, static_cast<std::uint64_t>(start));
            t(0) += 0.25 * normal_draw(rng);
            const double spread = 0.05 * std::max(sigma_seed, 0.05);
            for (int i = 1; i < kNumGroupParams; ++i) t(i) = spread * normal_draw(rng);
        }

        for (double mu = 1e2; mu <= 1e10 + 1.0; mu *= 10.0)
            lm_minimize(t, target, mu, inv_scale);

        Vec18 phi = phi_of_t(t);
        project_to_constraint(phi, target);
        refine_minimum_norm(phi, target, inv_scale);

        const ThetaJac th = theta_with_jacobian(phi);
        Candidate c;
        c.phi = phi;
        c.resid = (th.value - target).lpNorm<Eigen::Infinity>();
        c.objective = (phi.array() * inv_scale.array()).matrix().squaredNorm();
        c.start = start;

        const bool c_feasible = c.resid <= options.feasibility_tol;
        if (!best) {
            best = c;
            continue;
        }
        const bool b_feasible = best->resid <= options.feasibility_tol;
        if (c_feasible != b_feasible) {
            if (c_feasible) best = c;
            continue;
        }
        if (!c_feasible) {
            if (c.resid < best->resid) best = c;
            continue;
        }
        if (c.objective < best->objective - 1e-12) best = c;
        // ties keep the earlier start
    }

    if (!(best->resid <= options.feasibility_tol)) {
        std::ostringstream msg;
        msg << "no feasible parameter set found; best constraint residual "
            << best->resid;
        throw NumericError(msg.str());
    }

    RecoverResult out;
    out.phi = params_from_vector(best->phi);
    out.norm2 = best->phi.squaredNorm();
    out.constraint_residual = best->resid;
    out.winning_start = best->start;
    return out;
}

FitReport calibrate(const std::vector<OptionQuote>& raw, const CalibrateOptions& options) {
    const PreparedChain prepared = prepare_quotes(raw, options.prepare);
    const ThetaFit stage1 = fit_theta(prepared.quotes, options.fit);
    const RecoverResult stage2 = recover_phi(stage1.theta, options.recover);

    FitReport report;
    report.theta = stage1.theta;
    report.phi = stage2.phi;
    report.condition_number = stage1.condition;
    report.constraint_residual = stage2.constraint_residual;
    report.phi_norm2 = stage2.norm2;
    report.warnings = stage1.warnings;
    for (const auto& w : regime_warnings(stage2.phi)) report.warnings.push_back(w);
    report.dropped = prepared.dropped;
    report.weighting = options.prepare.weighting;
    report.min_tau = options.prepare.min_tau;
    report.ridge = options.fit.ridge;
    report.seed = options.recover.seed;
    report.starts = options.recover.starts;

    std::map<int, std::pair<double, int>> sse_by_dtm;
    double sse = 0.0;
    for (std::size_t i = 0; i < prepared.quotes.size(); ++i) {
        const PreparedQuote& q = prepared.quotes[i];
        QuoteFit f;
        f.dtm = static_cast<int>(std::lround(q.tau * 365.0));
        f.tau = q.tau;
        f.d = q.d;
        f.market_iv = q.iv;
        f.model_iv = surface_eval(q.tau, q.d, stage1.theta);
        f.residual = stage1.residuals(static_cast<Eigen::Index>(i));
        f.weight = q.weight;
        report.quotes.push_back(f);
        sse += f.residual * f.residual;
        auto& acc = sse_by_dtm[f.dtm];
        acc.first += f.residual * f.residual;
        acc.second += 1;
    }
    report.rmse_total = std::sqrt(sse / static_cast<double>(report.quotes.size()));
    for (const auto& [dtm, acc] : sse_by_dtm)
        report.rmse_by_expiry[dtm] = std::sqrt(acc.first / acc.second);
    return report;
}

std::string to_json(const FitReport& report) {
    using ordered_json = nlohmann::ordered_json;
    ordered_json j;
    {
        ordered_json th;
        const auto v = to_vector(report.theta);
        for (int i = 0; i < kNumSurfaceCoeffs; ++i) th[kSurfaceCoeffNames[i]] = v(i);
        j["theta"] = th;
    }
    {
        ordered_json ph;
        const auto v = to_vector(report.phi);
        for (int i = 0; i < kNumGroupParams; ++i) ph[kGroupParamNames[i]] = v(i);
        j["phi"] = ph;
    }
    j["rmse_total"] = report.rmse_total;
    {
        ordered_json by;
        for (const auto& [dtm, rmse] : report.rmse_by_expiry)
            by[std::to_string(dtm)] = rmse;
        j["rmse_by_expiry"] = by;
    }
    j["phi_norm2"] = report.phi_norm2;
    j["constraint_residual"] = report.constraint_residual;
    j["condition_number"] = report.condition_number;
    {
        ordered_json rows = ordered_json::array();
        for (const auto& q : report.quotes) {
            ordered_json row;
            row["dtm"] = q.dtm;
            row["tau"] = q.tau;
            row["d"] = q.d;
            row["market_iv"] = q.market_iv;
            row["model_iv"] = q.model_iv;
            row["residual"] = q.residual;
            row["weight"] = q.weight;
            rows.push_back(row);
        }
        j["quotes"] = rows;
    }
    {
        ordered_json rows = ordered_json::array();
        for (const auto& d : report.dropped) {
            ordered_json row;
            row["index"] = d.index;
            row["reason"] = d.reason;
            rows.push_back(row);
        }
        j["dropped"] = rows;
    }
    j["warnings"] = report.warnings;
    {
        ordered_json meta;
        meta["weighting"] = report.weighting == Weighting::Vega ? "vega" : "uniform";
        meta["min_tau_years"] = report.min_tau;
        meta["ridge"] = report.ridge;
        meta["seed"] = report.seed;
        meta["starts"] = report.starts;
        j["metadata"] = meta;
    }
    return j.dump(2);
}

std::vector<int> report_dtms(const FitReport& report) {
    std::vector<int> out;
    for (const auto& [dtm, rmse] : report.rmse_by_expiry) out.push_back(dtm);
    return out;
}

std::string per_expiry_csv(const FitReport& report, int dtm) {
    std::vector<const QuoteFit*> rows;
    for (const auto& q : report.quotes)
        if (q.dtm == dtm) rows.push_back(&q);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const QuoteFit* a, const QuoteFit* b) { return a->d < b->d; });
    std::string out = "d,market_iv,model_iv,residual\n";
    for (const QuoteFit* q : rows) {
        char buf[160];
        auto fmt = [&buf](double x) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
            (void)ec;
            return std::string(buf, p);
        };
        out += fmt(q->d);
        out += ',';
        out += fmt(q->market_iv);
        out += ',';
        out += fmt(q->model_iv);
        out += ',';
        out += fmt(q->residual);
        out += '\n';
    }
    return out;
}

} // namespace msvol
