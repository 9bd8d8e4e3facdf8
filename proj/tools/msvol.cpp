// msvol: pricing, surface evaluation, calibration, and order verification
// from the command line. Thin shell over the library; all numbers match
// direct library calls with the same inputs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "msvol/asymptotics.hpp"
#include "msvol/calibration.hpp"
#include "msvol/chain_io.hpp"
#include "msvol/errors.hpp"
#include "msvol/experiment.hpp"
#include "msvol/model.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace msvol;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path.string());
    out << text;
    if (!out) throw DataError("write failed: " + path.string());
}

// stdout when no --output was given
void emit(const std::string& output, const std::string& text) {
    if (output.empty())
        std::cout << text << "\n";
    else
        spill(output, text);
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw DataError(std::string("bad ") + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) throw DataError(std::string("empty ") + what + " list");
    return out;
}

struct PriceArgs {
    std::string input, output, kind = "C";
    double tau = 0.0, spot = 0.0, strike = 0.0, rate = 0.0;
};

int cmd_price(const PriceArgs& a) {
    const GroupParams phi = params_from_json(slurp(a.input));
    OptionSpec opt{a.tau, a.spot, a.strike, a.rate,
                   a.kind == "P" ? OptionKind::Put : OptionKind::Call};
    const PriceTerms t = price_terms(opt, phi);
    ordered_json j;
    j["tau"] = a.tau;
    j["spot"] = a.spot;
    j["strike"] = a.strike;
    j["rate"] = a.rate;
    j["kind"] = a.kind;
    j["p00"] = t.p00;
    j["p10"] = t.p10;
    j["p01"] = t.p01;
    j["p20"] = t.p20;
    j["p02"] = t.p02;
    j["p11"] = t.p11;
    j["total"] = t.total;
    emit(a.output, j.dump(2));
    return 0;
}

struct SurfaceArgs {
    std::string input, output, tau_list, d_list;
    double spot = 0.0, strike = 0.0, rate = 0.0;
    bool have_contract = false;
};

// accepts either an 18-parameter file or a 10-coefficient file
SurfaceCoeffs load_surface(const std::string& path) {
    const std::string text = slurp(path);
    try {
        return theta_from_phi(params_from_json(text));
    } catch (const DataError&) {
        return coeffs_from_json(text);
    }
}

int cmd_surface(const SurfaceArgs& a) {
    const SurfaceCoeffs theta = load_surface(a.input);
    const std::vector<double> taus = parse_list(a.tau_list, "tau");

    std::vector<double> ds;
    if (!a.d_list.empty()) {
        if (a.have_contract)
            throw DataError("give either --moneyness or --spot/--strike, not both");
        ds = parse_list(a.d_list, "moneyness");
    } else {
        if (!a.have_contract)
            throw DataError("need --moneyness or --spot and --strike");
        if (taus.size() != 1)
            throw DataError("--spot/--strike mode takes a single --tau");
        if (!(a.spot > 0.0) || !(a.strike > 0.0))
            throw DataError("spot and strike must be positive");
        ds.push_back(std::log(a.strike / (a.spot * std::exp(a.rate * taus[0]))));
    }

    if (taus.size() == 1 && ds.size() == 1) {
        ordered_json j;
        j["tau"] = taus[0];
        j["d"] = ds[0];
        j["iv"] = surface_eval(taus[0], ds[0], theta);
        emit(a.output, j.dump(2));
        return 0;
    }
    std::ostringstream csv;
    csv << "tau,d,iv\n";
    csv.precision(17);
    for (double tau : taus)
        for (double d : ds)
            csv << tau << "," << d << "," << surface_eval(tau, d, theta) << "\n";
    emit(a.output, csv.str());
    return 0;
}

struct CalibrateArgs {
    std::string input, output = ".", weights = "uniform";
    int min_dtm = 5;
    double ridge = 0.0;
    std::uint64_t seed = kDefaultSeed;
};

int cmd_calibrate(const CalibrateArgs& a) {
    const ChainFile chain = load_chain(a.input);

    CalibrateOptions opt;
    opt.prepare.weighting = a.weights == "vega" ? Weighting::Vega : Weighting::Uniform;
    opt.prepare.min_tau = a.min_dtm / 365.0;
    opt.fit.ridge = a.ridge;
    opt.recover.seed = a.seed;

    const FitReport report = calibrate(chain.quotes, opt);

    const fs::path dir(a.output);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    try {
        const fs::path report_path = dir / "report.json";
        spill(report_path, to_json(report));
        written.push_back(report_path);
        for (int dtm : report_dtms(report)) {
            const fs::path p = dir / ("fit_" + std::to_string(dtm) + ".csv");
            spill(p, per_expiry_csv(report, dtm));
            written.push_back(p);
        }
    } catch (...) {
        // no partial artifact set on disk
        for (const fs::path& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }

    std::cout << "calibrated " << report.quotes.size() << " quotes across "
              << report_dtms(report).size() << " expiries\n"
              << "rmse_total " << report.rmse_total << "\n"
              << "constraint_residual " << report.constraint_residual << "\n"
              << "report " << (dir / "report.json").string() << "\n";
    for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

struct VerifyArgs {
    std::string input, output = ".", ladder = "0.32,0.16,0.08,0.04", payoff = "bump";
    std::int64_t paths = 4000000;
    std::uint64_t seed = kDefaultSeed;
    double dt = 0.0, tau = 0.5, spot = 100.0, strike = 100.0;
    double slope_threshold = 1.2;
    bool fast_only = false, no_cv = false;
};

int cmd_verify(const VerifyArgs& a) {
    const ModelSpec model = model_from_json(slurp(a.input));

    ScalingOptions opt;
    opt.eps_ladder = parse_list(a.ladder, "eps ladder");
    opt.delta_equals_eps = !a.fast_only;
    if (a.payoff == "call")
        opt.payoff = PayoffKind::Call;
    else if (a.payoff == "put")
        opt.payoff = PayoffKind::Put;
    else
        opt.payoff = PayoffKind::SmoothBump;
    opt.tau = a.tau;
    opt.spot = a.spot;
    opt.strike = a.strike;
    opt.pairs = a.paths;
    opt.seed = a.seed;
    opt.control_variate = !a.no_cv;
    opt.slope_threshold = a.slope_threshold;
    opt.dt_override = a.dt;

    const ScalingReport rep = order_scaling_experiment(model, opt);

    const fs::path dir(a.output);
    fs::create_directories(dir);
    spill(dir / "verify.json", to_json(rep));
    spill(dir / "verify.csv", to_csv(rep));

    std::cout.precision(6);
    for (const ScalingRung& r : rep.rungs)
        std::cout << "rung eps=" << r.eps << " delta=" << r.delta
                  << " |error|=" << r.abs_error << " mc_se=" << r.mc_se << "\n";
    if (rep.mode == "null") {
        std::cout << "null model, errors at noise level: "
                  << (rep.pass ? "PASS" : "FAIL") << "\n";
        return rep.pass ? 0 : 2;
    }
    if (!rep.conclusive) {
        std::cout << "order check: INCONCLUSIVE\n";
        std::cerr << "errors not separated from monte-carlo noise; rerun with "
                     "--paths "
                  << rep.recommended_pairs << " or more\n";
        return 3;
    }
    std::cout << "slope " << rep.slope << " (threshold " << rep.slope_threshold
              << "): " << (rep.pass ? "PASS" : "FAIL") << "\n";
    return rep.pass ? 0 : 2;
}

int structured_error(int code, const char* type, const std::string& message) {
    ordered_json j;
    j["error"]["type"] = type;
    j["error"]["message"] = message;
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiscale stochastic volatility toolkit"};
    app.require_subcommand(1);

    PriceArgs pa;
    CLI::App* price = app.add_subcommand("price", "expansion price-term breakdown");
    price->add_option("--input", pa.input, "group-parameter JSON file")->required();
    price->add_option("--output", pa.output, "write JSON here instead of stdout");
    price->add_option("--tau", pa.tau, "time to maturity, years")->required();
    price->add_option("--spot", pa.spot)->required();
    price->add_option("--strike", pa.strike)->required();
    price->add_option("--rate", pa.rate, "risk-free rate (default 0)");
    price->add_option("--kind", pa.kind, "C or P")
        ->check(CLI::IsMember({"C", "P"}));

    SurfaceArgs sa;
    CLI::App* surface =
        app.add_subcommand("surface", "implied-volatility surface evaluation");
    surface->add_option("--input", sa.input,
                        "group-parameter or surface-coefficient JSON file")
        ->required();
    surface->add_option("--output", sa.output, "write here instead of stdout");
    surface->add_option("--tau", sa.tau_list, "maturities, comma separated")
        ->required();
    surface->add_option("--moneyness", sa.d_list,
                        "forward log-moneyness values, comma separated");
    CLI::Option* sspot = surface->add_option("--spot", sa.spot);
    CLI::Option* sstrike = surface->add_option("--strike", sa.strike);
    surface->add_option("--rate", sa.rate, "risk-free rate (default 0)");
    surface->callback([&] { sa.have_contract = *sspot || *sstrike; });

    CalibrateArgs ca;
    CLI::App* calib =
        app.add_subcommand("calibrate", "two-stage fit of an option chain");
    calib->add_option("--input", ca.input, "chain CSV file")->required();
    calib->add_option("--output", ca.output, "report directory (default .)");
    calib->add_option("--weights", ca.weights, "uniform or vega")
        ->check(CLI::IsMember({"uniform", "vega"}));
    calib->add_option("--min-dtm", ca.min_dtm, "drop quotes under this many days");
    calib->add_option("--ridge", ca.ridge, "stage-1 ridge strength");
    calib->add_option("--seed", ca.seed, "recovery start seed");

    VerifyArgs va;
    CLI::App* verify =
        app.add_subcommand("verify", "expansion accuracy-order experiment");
    verify->add_option("--input", va.input, "model JSON file")->required();
    verify->add_option("--output", va.output, "report directory (default .)");
    verify->add_option("--seed", va.seed, "simulation seed");
    verify->add_option("--paths", va.paths, "antithetic pairs per rung");
    verify->add_option("--eps-ladder", va.ladder, "comma-separated eps rungs");
    verify->add_option("--payoff", va.payoff, "call, put, or bump")
        ->check(CLI::IsMember({"call", "put", "bump"}));
    verify->add_flag("--fast-only", va.fast_only, "freeze the slow factor (delta=0)");
    verify->add_option("--dt", va.dt, "time-step override (0 = policy)");
    verify->add_option("--tau", va.tau, "contract maturity");
    verify->add_option("--spot", va.spot);
    verify->add_option("--strike", va.strike);
    verify->add_option("--slope-threshold", va.slope_threshold);
    verify->add_flag("--no-cv", va.no_cv, "disable the control variate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*price) return cmd_price(pa);
        if (*surface) return cmd_surface(sa);
        if (*calib) return cmd_calibrate(ca);
        if (*verify) return cmd_verify(va);
        return 1;
    } catch (const InconclusiveError& e) {
        return structured_error(3, "inconclusive", e.what());
    } catch (const DataError& e) {
        return structured_error(2, "data", e.what());
    } catch (const NumericError& e) {
        return structured_error(4, "numeric", e.what());
    } catch (const std::exception& e) {
        return structured_error(4, "internal", e.what());
    }
}
