// Maintenance tool: recomputes every golden record from its documented
// oracle and rewrites tests/golden/v1, plus the synthetic chain fixture in
// data/. Run manually after a deliberate change; CI never runs this.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "msvol/asymptotics.hpp"
#include "msvol/calibration.hpp"
#include "msvol/chain_io.hpp"
#include "msvol/experiment.hpp"
#include "msvol/golden.hpp"
#include "msvol/model.hpp"
#include "msvol/montecarlo.hpp"
#include "oracles.hpp"

using namespace msvol;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string out_dir;

void emit(const std::string& name, const std::string& input_desc,
          std::vector<std::string> labels, std::vector<double> values,
          double tol, const std::string& oracle) {
    GoldenRecord rec;
    rec.name = name;
    rec.digest = golden_digest(input_desc);
    rec.labels = std::move(labels);
    rec.values = std::move(values);
    rec.tolerance = tol;
    rec.oracle = oracle;
    save_golden(out_dir, rec);
    std::printf("wrote %-28s  %zu value(s)  tol %.1e\n", name.c_str(),
                rec.values.size(), tol);
}

// Synthetic chain: the full expiry/moneyness grid priced exactly on the
// surface implied by the 2006 parameter set.
ChainFile synthetic_chain(const SurfaceCoeffs& theta) {
    ChainFile chain;
    chain.comments = {"# synthetic chain generated from the 2006 parameter set",
                      "# spot=100 rate=0.02, iv taken exactly from the surface"};
    const double spot = 100.0, rate = 0.02;
    const int dtms[] = {30, 60, 90, 180, 270, 365, 540, 730};
    for (int dtm : dtms) {
        const double tau = dtm / 365.0;
        for (int i = -6; i <= 6; ++i) {
            const double d = 0.025 * i;
            OptionQuote q;
            q.expiry_years = tau;
            q.strike = spot * std::exp(rate * tau) * std::exp(d);
            q.spot = spot;
            q.rate = rate;
            q.kind = i < 0 ? OptionKind::Put : OptionKind::Call;
            q.iv = surface_eval(tau, d, theta);
            q.weight = 1.0;
            chain.quotes.push_back(q);
        }
    }
    return chain;
}

// Term-by-term expansion assembly on the oracle greek table; written straight
// from the operator definitions, separate from the library implementation.
std::vector<double> oracle_price_terms(double tau, double spot, double strike,
                                       double rate, const GroupParams& p) {
    const double s = p.sigma_star;
    const Eigen::Matrix3d T =
        oracle::fd_log_greeks(tau, spot, strike, rate, s, OptionKind::Call);
    const double price = oracle::bs_price_quad(tau, spot, strike, rate, s,
                                               OptionKind::Call);
    const double V3 = p.v3_eps, V1 = p.v1_del, V0 = p.v0_del;
    const double R3 = p.r_v3, R1 = p.r_v1, R0 = p.r_v0;
    const double t2 = tau * tau, t3 = t2 * tau;

    const double p00 = price;
    const double p10 = tau * V3 * T(1, 1);
    const double p01 = t2 * s * (V1 * T(1, 1) + V0 * T(0, 1));
    const double p20 = -0.5 * p.phi_eps * T(0, 1) +
                       tau * (p.a2_eps * T(2, 1) + p.a1_eps * T(1, 1) +
                              p.a0_eps * T(0, 1) + p.a_eps * T(0, 2)) +
                       0.5 * t2 * V3 * V3 * T(2, 2);
    const double p02 =
        (2.0 / 3.0) * t3 * s *
            (V1 * R1 * T(2, 1) + (V1 * R0 + V0 * R1) * T(1, 1) +
             V0 * R0 * T(0, 1)) +
        0.5 * t2 *
            ((4.0 / 3.0) * tau *
                 (V1 * V1 * T(2, 1) + 2.0 * V1 * V0 * T(1, 1) +
                  V0 * V0 * T(0, 1)) +
             t2 * s * s *
                 (V1 * V1 * T(2, 2) + 2.0 * V1 * V0 * T(1, 2) +
                  V0 * V0 * T(0, 2))) +
        (tau / 3.0) * p.b2_del * (1.5 * tau * T(0, 1) + t2 * s * s * T(0, 2)) +
        0.5 * t2 * s * p.b1_del * T(0, 1);
    const double p11 =
        t3 * s * V3 * (V1 * T(2, 2) + V0 * T(1, 2)) +
        0.5 * t2 * s *
            (p.c2_ed * T(2, 1) + p.c1_ed * T(1, 1) + p.c0_ed * T(0, 1) +
             p.c_ed * T(0, 2)) +
        t2 * R3 * (V1 * T(2, 1) + V0 * T(1, 1));
    return {p00, p10, p01, p20, p02, p11};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regenerate golden records from their documented oracles"};
    std::string data_dir = "data";
    out_dir = "tests/golden/v1";
    bool skip_mc = false;
    app.add_option("--out", out_dir, "golden directory to write");
    app.add_option("--data", data_dir, "data directory (read + chain rewrite)");
    app.add_flag("--skip-mc", skip_mc,
                 "skip the Monte-Carlo based records (quick partial regen)");
    CLI11_PARSE(app, argc, argv);

    try {
        const GroupParams phi06 = params_from_json(slurp(data_dir + "/params_2006.json"));
        const GroupParams phi10 = params_from_json(slurp(data_dir + "/params_2010.json"));
        const ModelSpec ref = model_from_json(slurp(data_dir + "/model_reference.json"));

        // pricing kernel
        emit("bs_call_atm", "tau=1,spot=100,strike=100,rate=0,sigma=0.2,kind=C",
             {"price"},
             {oracle::bs_price_quad(1.0, 100, 100, 0.0, 0.2, OptionKind::Call)},
             1e-12, "normal-CDF adaptive-Simpson quadrature pricer");

        {
            const Eigen::Matrix3d T =
                oracle::fd_log_greeks(1.0, 100, 100, 0.0, 0.2, OptionKind::Call);
            std::vector<std::string> labels;
            std::vector<double> vals;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    labels.push_back("d" + std::to_string(a) + std::to_string(b));
                    vals.push_back(T(a, b));
                }
            emit("log_greeks_atm", "tau=1,spot=100,strike=100,rate=0,sigma=0.2,kind=C",
                 labels, vals, 5.0,
                 "Richardson central differences of the long-double pricer in "
                 "log-spot; absolute tolerance sized for the sixth-derivative "
                 "noise floor, finer relative checks live in the unit tests");
        }

        {
            // five forward-map pairs across moneyness for the inversion check
            const double taus = 0.75, rate = 0.01;
            const double spots[5] = {80, 100, 120, 100, 80};
            const double sigmas[5] = {0.15, 0.2, 0.25, 0.3, 0.35};
            std::vector<std::string> labels;
            std::vector<double> vals;
            for (int i = 0; i < 5; ++i) {
                labels.push_back("price_" + std::to_string(i));
                vals.push_back(oracle::bs_price_quad(taus, spots[i], 100.0, rate,
                                                     sigmas[i], OptionKind::Call));
            }
            emit("implied_vol_pairs",
                 "tau=0.75,strike=100,rate=0.01,spots=80/100/120/100/80,"
                 "sigmas=0.15/0.2/0.25/0.3/0.35,kind=C",
                 labels, vals, 1e-12, "quadrature pricer forward map");
        }

        emit("sigma_star_shift", "sigma_bar=0.2,v2=0.002", {"sigma_star"},
             {std::sqrt(0.044)}, 1e-15, "direct arithmetic sqrt(0.2^2+2*0.002)");

        emit("log_moneyness_90", "strike=90,spot=100,rate=0,tau=1", {"d"},
             {std::log(0.9)}, 1e-15, "direct arithmetic log(90/100)");

        emit("price_terms_2006_atm",
             "tau=0.5,spot=100,strike=100,rate=0.02,phi=2006",
             {"p00", "p10", "p01", "p20", "p02", "p11"},
             oracle_price_terms(0.5, 100, 100, 0.02, phi06), 1e-5,
             "term-by-term operator assembly on the finite-difference greek "
             "table with the quadrature pricer at the base");

        {
            const SurfaceCoeffs th = oracle::theta_from_phi_ld(phi06);
            const auto v = to_vector(th);
            std::vector<std::string> labels(kSurfaceCoeffNames,
                                            kSurfaceCoeffNames + 10);
            std::vector<double> vals(v.data(), v.data() + 10);
            emit("theta_from_phi_2006", "phi=2006", labels, vals, 1e-14,
                 "long-double transcription of the ten coefficient equations");
            emit("surface_eval_point", "phi=2006,tau=0.5,d=0.1", {"iv"},
                 {oracle::surface_iv_ld(th, 0.5, 0.1)}, 1e-14,
                 "long-double basis polynomial on the transcribed coefficients");
        }

        emit("surface_iv_2010_point", "phi=2010,tau=0.25,d=-0.05", {"iv"},
             {oracle::surface_iv_ld(oracle::theta_from_phi_ld(phi10), 0.25, -0.05)},
             1e-14,
             "long-double coefficient transcription + basis polynomial");

        // fast-factor Poisson solves
        emit("poisson_quadratic", "m=0,nu=0.5,chi=y^2-nu^2",
             {"phi_-0.7", "phi_0.3", "dphi_0.5"},
             {0.5 * (0.25 - 0.49), 0.5 * (0.25 - 0.09), -0.5}, 1e-10,
             "closed form phi=(nu^2-y^2)/2 for the quadratic source");

        {
            auto sol = oracle::ode_poisson(
                [&](double y) { return ref.f(y, 0.0) * ref.f(y, 0.0); }, ref.m,
                ref.nu);
            std::vector<std::string> labels;
            std::vector<double> vals;
            for (double y = -3.0; y <= 3.01; y += 0.75) {
                labels.push_back("phi_" + std::to_string(y));
                vals.push_back(sol.at(y));
            }
            for (double y = -3.0; y <= 3.01; y += 0.75) {
                labels.push_back("dphi_" + std::to_string(y));
                vals.push_back(sol.prime_at(y));
            }
            emit("poisson_logistic_phi",
                 "model=reference,z=0,source=f^2,span=6sigma", labels, vals, 1e-6,
                 "two-sided RK4 marching solve; compared inside +-6 sigma where "
                 "the library grid truncation is negligible");
        }

        {
            const GroupParams orc = oracle::group_params_oracle(ref, ref.z0);
            const GroupParams lib = group_params_from_model(ref, ref.z0).params;
            const auto va = to_vector(orc), vb = to_vector(lib);
            double worst = 0.0;
            for (int i = 0; i < kNumGroupParams; ++i)
                worst = std::max(worst, std::abs(va(i) - vb(i)));
            if (worst > 1e-8) {
                std::fprintf(stderr,
                             "route disagreement %.3e on group params; refusing "
                             "to freeze\n", worst);
                return 4;
            }
            std::printf("group-params route agreement: %.3e\n", worst);
            std::vector<std::string> labels(kGroupParamNames,
                                            kGroupParamNames + kNumGroupParams);
            std::vector<double> vals(va.data(), va.data() + kNumGroupParams);
            emit("group_params_reference", "model=reference,z=0", labels, vals,
                 1e-8,
                 "Gauss-Hermite quadrature + RK4 Poisson solve, cross-checked "
                 "against the grid-quadrature route at regen time");
        }

        // calibration fixtures
        const SurfaceCoeffs theta06 = theta_from_phi(phi06);
        const ChainFile chain = synthetic_chain(theta06);
        const std::string chain_path = data_dir + "/chain_synthetic_2006.csv";
        save_chain(chain, chain_path);
        std::printf("wrote %s (%zu quotes)\n", chain_path.c_str(),
                    chain.quotes.size());
        const std::string chain_text = serialize_chain(chain);

        {
            const PreparedChain prep = prepare_quotes(chain.quotes);
            const ThetaFit fit = fit_theta(prep.quotes);
            const auto v = to_vector(fit.theta);
            std::vector<std::string> labels(kSurfaceCoeffNames,
                                            kSurfaceCoeffNames + 10);
            emit("calibration_round_trip_2006", chain_text, labels,
                 {v.data(), v.data() + 10}, 1e-10,
                 "stage-1 least squares on the exactly-on-surface chain");
        }

        {
            // canonical grid, uniform weights: per-coefficient standard errors
            std::vector<PreparedQuote> grid;
            const int dtms[] = {30, 60, 90, 180, 270, 365, 540, 730};
            for (int dtm : dtms)
                for (int i = -6; i <= 6; ++i)
                    grid.push_back({dtm / 365.0, 0.025 * i, 0.2, 1.0, 0});
            const Eigen::VectorXd se = oracle::theta_standard_errors(grid, 0.002);
            std::vector<std::string> labels;
            for (int i = 0; i < 10; ++i)
                labels.push_back(std::string("se_") + kSurfaceCoeffNames[i]);
            emit("theta_noise_se", "grid=canonical,noise_sd=0.002", labels,
                 {se.data(), se.data() + 10}, 1e-10,
                 "least-squares covariance sd*sqrt(diag((X'WX)^{-1} X'W^2X (X'WX)^{-1}))");
        }

        {
            double lo = 1e300, hi = -1e300;
            for (int seed = 1; seed <= 50; ++seed) {
                RecoverOptions opt;
                opt.starts = 8;
                opt.seed = seed;
                const RecoverResult res = recover_phi(theta06, opt);
                if (res.constraint_residual > 1e-8) {
                    std::fprintf(stderr, "seed %d infeasible (%.3e)\n", seed,
                                 res.constraint_residual);
                    return 4;
                }
                lo = std::min(lo, res.norm2);
                hi = std::max(hi, res.norm2);
            }
            emit("recover_norm_spread_50", "theta=from-2006-phi,seeds=1..50,starts=8",
                 {"norm2_min", "norm2_max", "spread"}, {lo, hi, hi - lo}, 1e-8,
                 "minimal-norm recovery run from 50 seeds; spread bounds the "
                 "solution-manifold wander");
        }

        {
            const PriceTerms t =
                price_terms({0.5, 100, 100, 0.02, OptionKind::Call}, phi06);
            emit("cli_price_breakdown", "tau=0.5,spot=100,strike=100,rate=0.02,phi=2006",
                 {"p00", "p10", "p01", "p20", "p02", "p11", "total"},
                 {t.p00, t.p10, t.p01, t.p20, t.p02, t.p11, t.total}, 1e-12,
                 "library evaluation frozen for end-to-end CLI comparison");
        }

        {
            const FitReport rep = calibrate(chain.quotes);
            emit("cli_calibrate_rmse", chain_text,
                 {"rmse_total", "constraint_residual", "phi_norm2"},
                 {rep.rmse_total, rep.constraint_residual, rep.phi_norm2}, 1e-9,
                 "library calibration frozen for end-to-end CLI comparison");
        }

        if (!skip_mc) {
            {
                McConfig cfg;
                cfg.pairs = 100000;
                cfg.seed = kDefaultSeed;
                cfg.control_variate = true;
                const McResult mc =
                    mc_price(ref, PayoffKind::Call, 0.5, 100.0, 100.0, cfg);
                emit("mc_reference_call_small",
                     "model=reference,tau=0.5,spot=100,strike=100,pairs=100000,"
                     "seed=12345,cv=1",
                     {"price", "std_error"}, {mc.price, mc.std_error}, 1e-12,
                     "Euler Monte Carlo, antithetic + control variate; "
                     "deterministic for a fixed seed on one platform");
            }
            {
                ScalingOptions opt;
                opt.pairs = 50000;
                ScalingReport rep = order_scaling_experiment(ref, opt);
                std::vector<std::string> labels = {"slope"};
                std::vector<double> vals = {rep.slope};
                for (const auto& r : rep.rungs) {
                    labels.push_back("approx_eps_" + std::to_string(r.eps));
                    vals.push_back(r.approx_price);
                }
                for (const auto& r : rep.rungs) {
                    labels.push_back("mc_eps_" + std::to_string(r.eps));
                    vals.push_back(r.mc_price);
                }
                emit("scaling_smoke_smooth",
                     "model=reference,ladder=default,payoff=smooth-bump,"
                     "pairs=50000,seed=12345,cv=1,delta=eps",
                     labels, vals, 1e-9,
                     "small-budget run of the combined-scales ladder; "
                     "deterministic regression proxy for the full-budget check");
            }
            {
                ScalingOptions opt;
                opt.pairs = 50000;
                opt.payoff = PayoffKind::Call;
                opt.delta_equals_eps = false;
                ScalingReport rep = order_scaling_experiment(ref, opt);
                std::vector<std::string> labels = {"slope"};
                std::vector<double> vals = {rep.slope};
                for (const auto& r : rep.rungs) {
                    labels.push_back("approx_eps_" + std::to_string(r.eps));
                    vals.push_back(r.approx_price);
                }
                for (const auto& r : rep.rungs) {
                    labels.push_back("mc_eps_" + std::to_string(r.eps));
                    vals.push_back(r.mc_price);
                }
                emit("scaling_call_fast_only",
                     "model=reference,ladder=default,payoff=call,pairs=50000,"
                     "seed=12345,cv=1,delta=0",
                     labels, vals, 1e-9,
                     "small-budget run of the fast-scale-only ladder; "
                     "deterministic regression proxy for the full-budget check");
            }
            {
                ScalingOptions opt;
                opt.eps_ladder = {0.32, 0.08};
                opt.pairs = 20000;
                ScalingReport rep = order_scaling_experiment(ref, opt);
                emit("cli_verify_smoke",
                     "model=reference,ladder=0.32/0.08,payoff=smooth-bump,"
                     "pairs=20000,seed=12345,cv=1,delta=eps",
                     {"slope", "approx_0", "mc_0", "approx_1", "mc_1"},
                     {rep.slope, rep.rungs[0].approx_price, rep.rungs[0].mc_price,
                      rep.rungs[1].approx_price, rep.rungs[1].mc_price},
                     1e-9,
                     "tiny-budget ladder matching the CLI smoke invocation");
            }
        } else {
            std::printf("skipping Monte-Carlo records (--skip-mc)\n");
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "regen failed: %s\n", e.what());
        return 4;
    }
    return 0;
}
