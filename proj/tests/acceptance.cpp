// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// fails. Criteria 1-9 exercise the library directly; criterion 10 drives the
// command-line binary whose path arrives as argv[1].

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "msvol/asymptotics.hpp"
#include "msvol/blackscholes.hpp"
#include "msvol/calibration.hpp"
#include "msvol/chain_io.hpp"
#include "msvol/experiment.hpp"
#include "msvol/model.hpp"
#include "msvol/montecarlo.hpp"

namespace fs = std::filesystem;
using namespace msvol;

namespace {

std::string g_cli;
fs::path g_work;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string data_file(const std::string& name) {
    return std::string(MSVOL_DATA_DIR) + "/" + name;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

// ---------------------------------------------------------------- criterion 1

Verdict vega_gamma_identity() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        OptionSpec opt;
        opt.tau = 0.05 + 1.95 * std::abs(unit(rng));
        opt.spot = 100.0 * std::exp(0.3 * unit(rng));
        opt.strike = 100.0 * std::exp(0.3 * unit(rng));
        opt.rate = 0.05 * (1.0 + unit(rng));
        opt.kind = i % 2 ? OptionKind::Put : OptionKind::Call;
        const double sigma = 0.05 + 0.65 * std::abs(unit(rng));
        const LogGreeks g = log_greeks(opt, sigma);
        const double gap = std::abs(g.vega - opt.tau * sigma * g.d(0, 1));
        worst = std::max(worst, gap / (1.0 + std::abs(g.vega)));
    }
    return {worst <= 1e-9, "worst relative gap " + fmt(worst) + " (limit 1e-9)"};
}

// ---------------------------------------------------------------- criterion 2

// Each expansion term must satisfy its layer of the pricing-operator
// hierarchy: applying the averaged operator to the term and adding the source
// built from spot derivatives of the base price gives zero. The operator is
// applied by fourth-order finite differences in log-spot and maturity; the
// sources come from the closed-form derivative table.
Verdict pde_hierarchy_residuals() {
    const GroupParams phi = params_from_json(slurp(data_file("params_2006.json")));
    const double strike = 100.0, rate = 0.02, tau0 = 0.5;
    const double sg = phi.sigma_star;
    const double hs = 1e-3, ht = 1e-3;

    const auto eval = [&](double s, double t) {
        return price_terms({t, std::exp(s), strike, rate, OptionKind::Call}, phi);
    };
    const auto pick = [](const PriceTerms& t, int which) {
        switch (which) {
            case 0: return t.p00;
            case 1: return t.p10;
            case 2: return t.p01;
            default: return t.p20;
        }
    };

    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double xi = -0.2 + 0.4 * i / 9.0;
        const double s0 = std::log(100.0) + xi;
        const PriceTerms c = eval(s0, tau0);
        const PriceTerms sm2 = eval(s0 - 2 * hs, tau0), sm1 = eval(s0 - hs, tau0);
        const PriceTerms sp1 = eval(s0 + hs, tau0), sp2 = eval(s0 + 2 * hs, tau0);
        const PriceTerms tm2 = eval(s0, tau0 - 2 * ht), tm1 = eval(s0, tau0 - ht);
        const PriceTerms tp1 = eval(s0, tau0 + ht), tp2 = eval(s0, tau0 + 2 * ht);

        const Eigen::Matrix3d T =
            log_greeks({tau0, std::exp(s0), strike, rate, OptionKind::Call}, sg).d;

        for (int which = 0; which < 4; ++which) {
            const double u0 = pick(c, which);
            const double ds1 = (pick(sm2, which) - 8 * pick(sm1, which) +
                                8 * pick(sp1, which) - pick(sp2, which)) /
                               (12 * hs);
            const double ds2 = (-pick(sm2, which) + 16 * pick(sm1, which) -
                                30 * u0 + 16 * pick(sp1, which) -
                                pick(sp2, which)) /
                               (12 * hs * hs);
            const double dt = (pick(tm2, which) - 8 * pick(tm1, which) +
                               8 * pick(tp1, which) - pick(tp2, which)) /
                              (12 * ht);
            const double d2u = ds2 - ds1;  // x^2 d^2/dx^2 in log coordinates
            const double lop = -dt + rate * ds1 - rate * u0 + 0.5 * sg * sg * d2u;
            double denom = std::abs(dt) + std::abs(rate * ds1) +
                           std::abs(rate * u0) + std::abs(0.5 * sg * sg * d2u) +
                           1e-12;
            double source = 0.0;
            switch (which) {
                case 0: break;
                case 1:
                    source = phi.v3_eps * T(1, 1);
                    denom += std::abs(source);
                    break;
                case 2: {
                    const double s1 = 2 * tau0 * sg * phi.v0_del * T(0, 1);
                    const double s2 = 2 * tau0 * sg * phi.v1_del * T(1, 1);
                    source = s1 + s2;
                    denom += std::abs(s1) + std::abs(s2);
                    break;
                }
                default: {
                    const double s1 = phi.a2_eps * T(2, 1);
                    const double s2 = phi.a1_eps * T(1, 1);
                    const double s3 = phi.a0_eps * T(0, 1);
                    const double s4 = phi.a_eps * T(0, 2);
                    const double s5 = tau0 * phi.v3_eps * phi.v3_eps * T(2, 2);
                    source = s1 + s2 + s3 + s4 + s5;
                    denom += std::abs(s1) + std::abs(s2) + std::abs(s3) +
                             std::abs(s4) + std::abs(s5);
                    break;
                }
            }
            worst = std::max(worst, std::abs(lop + source) / denom);
        }
    }
    return {worst <= 1e-5, "worst relative residual " + fmt(worst) + " (limit 1e-5)"};
}

// ---------------------------------------------------------------- criterion 3

Verdict surface_round_trip() {
    // The sampler stays in the asymptotic regime (amplitudes well under
    // sigma_star, maturities away from zero): the absolute 1e-12 gate measures
    // exactness of the coefficient regrouping, and regime-violating corners
    // would only re-measure double roundoff on blown-up 1/tau basis terms.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto random_phi = [&]() {
        GroupParams p;
        p.sigma_star = 0.15 + 0.2 * std::abs(unit(rng));
        double* amps[] = {&p.v3_eps, &p.v1_del, &p.v0_del, &p.c2_ed, &p.c1_ed,
                          &p.c0_ed,  &p.c_ed,   &p.a2_eps, &p.a1_eps, &p.a0_eps,
                          &p.a_eps,  &p.b2_del, &p.b1_del, &p.phi_eps};
        for (double* a : amps) *a = 0.008 * unit(rng);
        p.r_v3 = unit(rng);
        p.r_v1 = unit(rng);
        p.r_v0 = unit(rng);
        return p;
    };
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const GroupParams phi = random_phi();
        const SurfaceCoeffs theta = theta_from_phi(phi);
        for (int i = 0; i < 100; ++i) {
            const double tau = 0.1 + 1.9 * std::abs(unit(rng));
            const double d = 0.3 * unit(rng);
            const double via_theta = surface_eval(tau, d, theta);
            const double via_phi = iv_terms(tau, d, phi).total;
            worst = std::max(worst, std::abs(via_theta - via_phi));
        }
    }
    return {worst <= 1e-12, "worst gap " + fmt(worst) + " (limit 1e-12)"};
}

// ---------------------------------------------------------------- criterion 4

Verdict calibration_round_trip() {
    const GroupParams truth = params_from_json(slurp(data_file("params_2006.json")));
    const SurfaceCoeffs theta_true = theta_from_phi(truth);
    const ChainFile chain = load_chain(data_file("chain_synthetic_2006.csv"));
    const FitReport rep = calibrate(chain.quotes);

    const auto tv = to_vector(theta_true);
    const auto th = to_vector(rep.theta);
    const double theta_gap = (th - tv).cwiseAbs().maxCoeff();
    const double truth_norm2 = to_vector(truth).squaredNorm();
    const bool pass = theta_gap <= 1e-8 && rep.constraint_residual <= 1e-8 &&
                      rep.phi_norm2 <= truth_norm2 + 1e-6;
    return {pass, "stage-1 coefficient gap " + fmt(theta_gap) +
                      ", constraint residual " + fmt(rep.constraint_residual) +
                      ", recovered norm2 " + fmt(rep.phi_norm2) + " vs truth " +
                      fmt(truth_norm2)};
}

// ---------------------------------------------------------------- criterion 5

Verdict published_magnitudes() {
    const auto w06 = regime_warnings(
        params_from_json(slurp(data_file("params_2006.json"))));
    const auto w10 = regime_warnings(
        params_from_json(slurp(data_file("params_2010.json"))));
    std::string detail = "2006 warnings " + std::to_string(w06.size()) +
                         ", 2010 warnings " + std::to_string(w10.size());
    for (const auto& w : w06) detail += "; " + w;
    for (const auto& w : w10) detail += "; " + w;
    return {w06.empty() && w10.empty(), detail};
}

// ---------------------------------------------------------------- criterion 6

Verdict degenerate_oracle() {
    const ModelSpec deg =
        model_from_json(slurp(data_file("model_degenerate.json")));
    McConfig cfg;
    cfg.pairs = 1000000;
    cfg.control_variate = false;  // honest standard error
    const McResult mc = mc_price(deg, PayoffKind::Call, 0.5, 100, 100, cfg);
    const double truth =
        bs_price({0.5, 100, 100, deg.rate, OptionKind::Call}, deg.vol_low);
    const double z = std::abs(mc.price - truth) / mc.std_error;
    return {z <= 3.0, "z-score " + fmt(z) + " (limit 3), mc " + fmt(mc.price) +
                          " vs closed form " + fmt(truth)};
}

// ------------------------------------------------------------- criteria 7 & 8

Verdict order_scaling(const ScalingOptions& base, const ModelSpec& model) {
    ScalingOptions opt = base;
    ScalingReport rep = order_scaling_experiment(model, opt);
    std::string note;
    if (!rep.conclusive) {
        // one budget escalation, capped at four times the requested pairs
        opt.pairs = std::min<std::int64_t>(rep.recommended_pairs, 4 * base.pairs);
        note = " (escalated once to " + std::to_string(opt.pairs) + " pairs)";
        rep = order_scaling_experiment(model, opt);
    }
    if (!rep.conclusive)
        return {false, "inconclusive even after escalation" + note};
    return {rep.pass, "slope " + fmt(rep.slope) + " (threshold " +
                          fmt(rep.slope_threshold) + ")" + note};
}

// ---------------------------------------------------------------- criterion 9

Verdict parameter_reduction() {
    ModelSpec model = model_from_json(slurp(data_file("model_reference.json")));
    model.eps = 0.04;
    const ModelCoefficients mc = group_params_from_model(model, model.z0);
    const OptionSpec opt{0.5, 100.0, 100.0, model.rate, OptionKind::Call};

    const PriceTerms reduced = price_terms(opt, mc.params);
    GroupParams unreduced_phi = mc.params;
    unreduced_phi.sigma_star = mc.unreduced.sigma_bar;
    const PriceTerms unreduced =
        price_terms_unreduced(opt, unreduced_phi, mc.unreduced.v2, mc.r_v2);

    const double gap = std::abs(unreduced.total - reduced.total);
    const double bound = 5.0 * std::abs(reduced.p20);
    return {gap <= bound,
            "route gap " + fmt(gap) + " vs bound " + fmt(bound) + " (5x |p20|)"};
}

// --------------------------------------------------------------- criterion 10

int run_cli(const std::string& env, const std::string& args) {
    const std::string cmd = env + " \"" + g_cli + "\" " + args + " >\"" +
                            (g_work / "out.txt").string() + "\" 2>\"" +
                            (g_work / "err.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
    const std::string chain = data_file("chain_synthetic_2006.csv");
    const std::string model = data_file("model_reference.json");
    const std::string verify_args =
        " --paths 20000 --eps-ladder 0.32,0.08 --output ";

    struct Invocation {
        const char* tag;
        std::string env;
    };
    const Invocation runs[] = {{"t1a", "MSVOL_THREADS=1"},
                               {"t1b", "MSVOL_THREADS=1"},
                               {"t4", "MSVOL_THREADS=4"}};
    for (const Invocation& r : runs) {
        const fs::path cal = g_work / ("cal_" + std::string(r.tag));
        const fs::path ver = g_work / ("ver_" + std::string(r.tag));
        if (run_cli(r.env, "calibrate --input " + chain + " --output " +
                               cal.string()) != 0)
            return {false, std::string("calibrate failed under ") + r.env};
        if (run_cli(r.env, "verify --input " + model + verify_args +
                               ver.string()) != 0)
            return {false, std::string("verify failed under ") + r.env};
    }

    const auto same = [&](const char* a, const char* b, const std::string& f) {
        return slurp((g_work / (std::string(a) + "/" + f)).string()) ==
               slurp((g_work / (std::string(b) + "/" + f)).string());
    };
    const bool rerun_ok = same("cal_t1a", "cal_t1b", "report.json") &&
                          same("ver_t1a", "ver_t1b", "verify.json") &&
                          same("ver_t1a", "ver_t1b", "verify.csv");
    const bool workers_ok = same("cal_t1a", "cal_t4", "report.json") &&
                            same("ver_t1a", "ver_t4", "verify.json") &&
                            same("ver_t1a", "ver_t4", "verify.csv");
    std::string detail = std::string("same-seed rerun ") +
                         (rerun_ok ? "identical" : "DIFFERS") +
                         ", worker counts {1,4} " +
                         (workers_ok ? "identical" : "DIFFER");
    return {rerun_ok && workers_ok, detail};
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-cli>\n", argv[0]);
        return 1;
    }
    g_cli = argv[1];
    g_work = fs::temp_directory_path() / "msvol_acceptance";
    fs::remove_all(g_work);
    fs::create_directories(g_work);

    const ModelSpec reference =
        model_from_json(slurp(data_file("model_reference.json")));

    ScalingOptions smooth;  // defaults are the combined-scales protocol
    ScalingOptions fast_call;
    fast_call.payoff = PayoffKind::Call;
    fast_call.delta_equals_eps = false;
    fast_call.slope_threshold = 1.0;

    struct Criterion {
        int number;
        const char* name;
        double time_limit;  // seconds
        std::function<Verdict()> run;
    };
    const Criterion criteria[] = {
        {1, "vega-gamma identity", 1.0, vega_gamma_identity},
        {2, "pricing-operator hierarchy residuals", 5.0, pde_hierarchy_residuals},
        {3, "surface coefficient round trip", 1.0, surface_round_trip},
        {4, "calibration round trip", 30.0, calibration_round_trip},
        {5, "published parameter magnitudes", 1.0, published_magnitudes},
        {6, "degenerate-model oracle consistency", 60.0, degenerate_oracle},
        {7, "combined-scales accuracy order", 1800.0,
         [&] { return order_scaling(smooth, reference); }},
        {8, "fast-scale call accuracy order", 1200.0,
         [&] { return order_scaling(fast_call, reference); }},
        {9, "parameter reduction consistency", 10.0, parameter_reduction},
        {10, "determinism across runs and workers", 1800.0, determinism},
    };

    bool all_pass = true;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        const bool in_time = secs <= c.time_limit;
        const bool pass = v.pass && in_time;
        all_pass = all_pass && pass;
        std::cout << "criterion " << c.number << " (" << c.name
                  << "): " << (pass ? "PASS" : "FAIL") << " [" << fmt(secs)
                  << "s of " << fmt(c.time_limit) << "s] " << v.detail;
        if (!in_time) std::cout << " [over time limit]";
        std::cout << std::endl;
    }

    fs::remove_all(g_work);
    std::cout << (all_pass ? "acceptance: all criteria pass"
                           : "acceptance: FAILURES present")
              << std::endl;
    return all_pass ? 0 : 1;
}
