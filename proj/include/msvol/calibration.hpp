#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msvol/asymptotics.hpp"

namespace msvol {

// One market observation. Either iv or price must be present; price-only
// quotes are inverted during preparation.
struct OptionQuote {
    double expiry_years = 0.0;
    double strike = 0.0;
    double spot = 0.0;
    double rate = 0.0;
    OptionKind kind = OptionKind::Call;
    std::optional<double> iv;
    std::optional<double> price;
    double weight = 1.0;

    friend bool operator==(const OptionQuote&, const OptionQuote&) = default;
};

enum class Weighting { Uniform, Vega };

struct PrepareOptions {
    // The 1/tau and 1/tau^2 basis functions explode near expiry; very short
    // quotes are dropped unless the caller overrides.
    double min_tau = 5.0 / 365.0;
    Weighting weighting = Weighting::Uniform;
};

struct PreparedQuote {
    double tau = 0.0;
    double d = 0.0;  // forward log-moneyness log(K/(x e^{r tau}))
    double iv = 0.0;
    double weight = 1.0;
    int source = 0;  // index into the raw quote list
};

struct DropRecord {
    int index = 0;
    std::string reason;
};

struct PreparedChain {
    std::vector<PreparedQuote> quotes;
    std::vector<DropRecord> dropped;
};

PreparedChain prepare_quotes(const std::vector<OptionQuote>& raw,
                             const PrepareOptions& options = {});

// The ten basis functions evaluated at (tau, d), in coefficient order.
Eigen::Matrix<double, kNumSurfaceCoeffs, 1> surface_basis(double tau, double d);

struct FitThetaOptions {
    double ridge = 0.0;  // off by default; the model is exactly linear
    double condition_limit = 1e12;
};

struct ThetaFit {
    SurfaceCoeffs theta;
    double condition = 0.0;
    Eigen::VectorXd residuals;  // model - market, per prepared quote
    double rmse = 0.0;
    std::vector<std::string> warnings;
};

// Single joint weighted linear least-squares fit across all expiries.
ThetaFit fit_theta(const std::vector<PreparedQuote>& quotes,
                   const FitThetaOptions& options = {});

struct RecoverOptions {
    int starts = 32;
    unsigned long long seed = kDefaultSeed;
    double feasibility_tol = 1e-8;
    // Optional diagonal scaling of the norm objective (empty = plain norm).
    Eigen::VectorXd scaling;
};

struct RecoverResult {
    GroupParams phi;
    double norm2 = 0.0;                 // squared Euclidean norm of phi
    double constraint_residual = 0.0;   // max abs coefficient mismatch
    int winning_start = -1;
};

// Minimal-norm parameters reproducing the given surface coefficients: penalty
// continuation to the exact constraint, multi-started deterministically.
RecoverResult recover_phi(const SurfaceCoeffs& theta,
                          const RecoverOptions& options = {});

struct CalibrateOptions {
    PrepareOptions prepare;
    FitThetaOptions fit;
    RecoverOptions recover;
};

struct QuoteFit {
    int dtm = 0;
    double tau = 0.0;
    double d = 0.0;
    double market_iv = 0.0;
    double model_iv = 0.0;
    double residual = 0.0;  // model - market
    double weight = 1.0;
};

struct FitReport {
    SurfaceCoeffs theta;
    GroupParams phi;
    double rmse_total = 0.0;
    std::map<int, double> rmse_by_expiry;  // keyed by days to maturity
    std::vector<QuoteFit> quotes;
    std::vector<DropRecord> dropped;
    double constraint_residual = 0.0;
    double condition_number = 0.0;
    double phi_norm2 = 0.0;
    std::vector<std::string> warnings;
    // Echo of the configuration that produced the fit.
    Weighting weighting = Weighting::Uniform;
    double min_tau = 5.0 / 365.0;
    double ridge = 0.0;
    unsigned long long seed = kDefaultSeed;
    int starts = 32;
};

FitReport calibrate(const std::vector<OptionQuote>& raw,
                    const CalibrateOptions& options = {});

std::string to_json(const FitReport& report);

// Expiries present in the report, ascending.
std::vector<int> report_dtms(const FitReport& report);

// Plot rows "d,market_iv,model_iv,residual" for one expiry, sorted by d.
std::string per_expiry_csv(const FitReport& report, int dtm);

} // namespace msvol
