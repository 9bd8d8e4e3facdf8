#include "msvol/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "msvol/blackscholes.hpp"
#include "msvol/rng.hpp"

namespace msvol {

// Acklam's rational approximation, about 1e-9 absolute in the quantile. That
// is far below the Euler discretization bias, and skipping a refinement step
// keeps the per-draw cost low on the hot path.
double norm_inv(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    return x;
}

double payoff_value(PayoffKind kind, double x, double strike) {
    switch (kind) {
        case PayoffKind::Call: return std::max(x - strike, 0.0);
        case PayoffKind::Put: return std::max(strike - x, 0.0);
        case PayoffKind::SmoothBump: {
            const double l = std::log(x / strike);
            return 10.0 * std::exp(-l * l / (2.0 * 0.2 * 0.2));
        }
        case PayoffKind::Spot: return x;
    }
    return 0.0;
}

double lognormal_payoff_expectation(PayoffKind kind, double tau, double spot,
                                    double strike, double rate, double sigma) {
    switch (kind) {
        case PayoffKind::Call:
            return bs_price({tau, spot, strike, rate, OptionKind::Call}, sigma);
        case PayoffKind::Put:
            return bs_price({tau, spot, strike, rate, OptionKind::Put}, sigma);
        case PayoffKind::SmoothBump: {
            const double w2 = 0.2 * 0.2;
            const double s2 = sigma * sigma * tau;
            const double mu = std::log(spot) + (rate - 0.5 * sigma * sigma) * tau;
            const double gap = mu - std::log(strike);
            return 10.0 * std::exp(-rate * tau) * std::sqrt(w2 / (w2 + s2)) *
                   std::exp(-gap * gap / (2.0 * (w2 + s2)));
        }
        case PayoffKind::Spot: return spot;
    }
    return 0.0;
}

namespace {

constexpr std::int64_t kChunkPairs = 4096;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MSVOL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

struct StepPlan {
    int steps = 0;
    double dt = 0.0;
};

StepPlan plan_steps(const ModelSpec& model, double tau, double dt_override) {
    const double policy = std::min(model.eps / 20.0, tau / 500.0);
    double target = policy;
    if (dt_override > 0.0) {
        if (dt_override > model.eps / 20.0 + 1e-15)
            throw NumericError(
                "time step too coarse to resolve the fast factor (needs dt <= eps/20)");
        target = dt_override;
    }
    StepPlan p;
    p.steps = static_cast<int>(std::ceil(tau / target - 1e-12));
    p.steps = std::max(p.steps, 1);
    p.dt = tau / p.steps;
    return p;
}

struct Chol3 {
    // lower-triangular factor of the (x, y, z) Brownian correlation matrix
    double l21, l22, l31, l32, l33;
};

Chol3 correlation_factor(const ModelSpec& m) {
    Chol3 c;
    c.l21 = m.rho_xy;
    const double s22 = 1.0 - m.rho_xy * m.rho_xy;
    if (s22 <= 0.0) throw DataError("correlation matrix is not positive definite");
    c.l22 = std::sqrt(s22);
    c.l31 = m.rho_xz;
    c.l32 = (m.rho_yz - m.rho_xy * m.rho_xz) / c.l22;
    const double s33 = 1.0 - c.l31 * c.l31 - c.l32 * c.l32;
    if (s33 < -1e-12) throw DataError("correlation matrix is not positive semidefinite");
    c.l33 = std::sqrt(std::max(s33, 0.0));
    return c;
}

struct ChunkSums {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t count = 0;
};

// One antithetic path pair stepped in lockstep; the mirrored path negates
// every normal draw.
struct PairState {
    double lx_a, y_a, z_a, wx_a;
    double lx_b, y_b, z_b, wx_b;
};

template <bool kSimFactors, bool kCv>
ChunkSums run_chunk(const ModelSpec& model, PayoffKind payoff, double tau,
                    double spot, double strike, const StepPlan& plan,
                    const Chol3& chol, double cv_sigma, std::uint64_t seed,
                    std::int64_t chunk_index, std::int64_t pairs_in_chunk) {
    std::mt19937_64 rng =
        stream_rng(seed, static_cast<std::uint64_t>(chunk_index));
    const double dt = plan.dt;
    const double sdt = std::sqrt(dt);
    const double eps = model.eps, del = model.delta;
    const double inv_eps = 1.0 / eps;
    const double inv_seps = 1.0 / std::sqrt(eps);
    const double sdel = std::sqrt(del);
    const double beta = model.beta();
    const double r = model.rate;
    const double disc = std::exp(-r * tau);
    const double lx0 = std::log(spot);
    const double const_sigma = model.f(model.y0, model.z0);

    ChunkSums out;
    out.count = pairs_in_chunk;
    for (std::int64_t p = 0; p < pairs_in_chunk; ++p) {
        PairState st;
        st.lx_a = st.lx_b = lx0;
        st.y_a = st.y_b = model.y0;
        st.z_a = st.z_b = model.z0;
        st.wx_a = st.wx_b = 0.0;
        for (int k = 0; k < plan.steps; ++k) {
            const double e1 = normal_draw(rng);
            const double dwx = sdt * e1;
            if constexpr (kSimFactors) {
                const double e2 = normal_draw(rng);
                const double e3 = normal_draw(rng);
                const double dwy = sdt * (chol.l21 * e1 + chol.l22 * e2);
                const double dwz =
                    sdt * (chol.l31 * e1 + chol.l32 * e2 + chol.l33 * e3);
                {
                    const double y = st.y_a, z = st.z_a;
                    const double sig = model.f(y, z);
                    const double g = model.g_slow(z);
                    st.lx_a += (r - 0.5 * sig * sig) * dt + sig * dwx;
                    st.y_a = y + (model.m - y) * inv_eps * dt -
                             beta * model.lam(y, z) * inv_seps * dt +
                             beta * inv_seps * dwy;
                    st.z_a = z +
                             (del * model.c_slow(z) - sdel * model.gam(y, z) * g) * dt +
                             sdel * g * dwz;
                }
                {
                    const double y = st.y_b, z = st.z_b;
                    const double sig = model.f(y, z);
                    const double g = model.g_slow(z);
                    st.lx_b += (r - 0.5 * sig * sig) * dt - sig * dwx;
                    st.y_b = y + (model.m - y) * inv_eps * dt -
                             beta * model.lam(y, z) * inv_seps * dt -
                             beta * inv_seps * dwy;
                    st.z_b = z +
                             (del * model.c_slow(z) - sdel * model.gam(y, z) * g) * dt -
                             sdel * g * dwz;
                }
            } else {
                st.lx_a += (r - 0.5 * const_sigma * const_sigma) * dt + const_sigma * dwx;
                st.lx_b += (r - 0.5 * const_sigma * const_sigma) * dt - const_sigma * dwx;
            }
            if constexpr (kCv) {
                st.wx_a += dwx;
                st.wx_b -= dwx;
            }
        }
        double v_a = payoff_value(payoff, std::exp(st.lx_a), strike);
        double v_b = payoff_value(payoff, std::exp(st.lx_b), strike);
        if constexpr (kCv) {
            const double drift = (r - 0.5 * cv_sigma * cv_sigma) * tau;
            v_a -= payoff_value(payoff, spot * std::exp(drift + cv_sigma * st.wx_a),
                                strike);
            v_b -= payoff_value(payoff, spot * std::exp(drift + cv_sigma * st.wx_b),
                                strike);
        }
        const double sample = 0.5 * disc * (v_a + v_b);
        out.sum += sample;
        out.sum_sq += sample * sample;
    }
    return out;
}

using ChunkRunner = ChunkSums (*)(const ModelSpec&, PayoffKind, double, double,
                                  double, const StepPlan&, const Chol3&, double,
                                  std::uint64_t, std::int64_t, std::int64_t);

ChunkRunner select_runner(bool sim_factors, bool cv) {
    if (sim_factors) return cv ? run_chunk<true, true> : run_chunk<true, false>;
    return cv ? run_chunk<false, true> : run_chunk<false, false>;
}

} // namespace

McResult mc_price(const ModelSpec& model, PayoffKind payoff, double tau,
                  double spot, double strike, const McConfig& cfg) {
    model.validate();
    if (!(tau > 0.0) || !(spot > 0.0) || !(strike > 0.0))
        throw DataError("mc_price requires positive tau, spot, strike");
    if (cfg.pairs < 1) throw DataError("mc_price requires at least one pair");

    const StepPlan plan = plan_steps(model, tau, cfg.dt_override);
    const Chol3 chol = correlation_factor(model);
    const bool sim_factors = model.vol_high != model.vol_low;

    double cv_sigma = 0.0;
    if (cfg.control_variate) {
        cv_sigma = std::sqrt(gaussian_average(
            [&](double y) {
                const double f = model.f(y, model.z0);
                return f * f;
            },
            model.m, model.nu));
    }
    const ChunkRunner runner = select_runner(sim_factors, cfg.control_variate);

    const std::int64_t n_chunks = (cfg.pairs + kChunkPairs - 1) / kChunkPairs;
    std::vector<ChunkSums> partial(static_cast<std::size_t>(n_chunks));
    std::atomic<std::int64_t> next{0};
    const int workers =
        static_cast<int>(std::min<std::int64_t>(resolve_threads(cfg.threads), n_chunks));
    auto work = [&]() {
        for (;;) {
            const std::int64_t k = next.fetch_add(1);
            if (k >= n_chunks) return;
            const std::int64_t in_chunk =
                std::min<std::int64_t>(kChunkPairs, cfg.pairs - k * kChunkPairs);
            partial[static_cast<std::size_t>(k)] =
                runner(model, payoff, tau, spot, strike, plan, chol, cv_sigma,
                       cfg.seed, k, in_chunk);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    double sum = 0.0, sum_sq = 0.0;
    for (const ChunkSums& c : partial) {
        sum += c.sum;
        sum_sq += c.sum_sq;
    }
    const double n = static_cast<double>(cfg.pairs);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);

    McResult res;
    res.price = mean;
    if (cfg.control_variate)
        res.price += lognormal_payoff_expectation(payoff, tau, spot, strike,
                                                  model.rate, cv_sigma);
    res.std_error = std::sqrt(var / n);
    res.pairs = cfg.pairs;
    res.steps = plan.steps;
    res.dt = plan.dt;
    return res;
}

FactorMoments mc_fast_factor_moments(const ModelSpec& model, double tau,
                                     const McConfig& cfg) {
    model.validate();
    if (!(tau > 0.0)) throw DataError("moments require tau > 0");
    if (cfg.pairs < 2) throw DataError("moments require at least two pairs");
    const StepPlan plan = plan_steps(model, tau, cfg.dt_override);
    const double dt = plan.dt, sdt = std::sqrt(dt);
    const double inv_eps = 1.0 / model.eps;
    const double inv_seps = 1.0 / std::sqrt(model.eps);
    const double beta = model.beta();

    const std::int64_t n_chunks = (cfg.pairs + kChunkPairs - 1) / kChunkPairs;
    // four running sums per chunk: y, y^2, y^3, y^4 of the pair-averaged draws
    struct MomentSums {
        double s1 = 0, s2 = 0;
        double q1 = 0, q2 = 0;  // sums of per-path y and y^2 (not pair-averaged)
    };
    std::vector<MomentSums> partial(static_cast<std::size_t>(n_chunks));
    std::atomic<std::int64_t> next{0};
    const int workers =
        static_cast<int>(std::min<std::int64_t>(resolve_threads(cfg.threads), n_chunks));
    auto work = [&]() {
        for (;;) {
            const std::int64_t k = next.fetch_add(1);
            if (k >= n_chunks) return;
            const std::int64_t in_chunk =
                std::min<std::int64_t>(kChunkPairs, cfg.pairs - k * kChunkPairs);
            std::mt19937_64 rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(k));
            MomentSums ms;
            for (std::int64_t p = 0; p < in_chunk; ++p) {
                double ya = model.y0, yb = model.y0;
                double za = model.z0, zb = model.z0;
                for (int s = 0; s < plan.steps; ++s) {
                    const double e = normal_draw(rng);
                    ya += (model.m - ya) * inv_eps * dt -
                          beta * model.lam(ya, za) * inv_seps * dt +
                          beta * inv_seps * sdt * e;
                    yb += (model.m - yb) * inv_eps * dt -
                          beta * model.lam(yb, zb) * inv_seps * dt -
                          beta * inv_seps * sdt * e;
                }
                ms.s1 += 0.5 * (ya + yb);
                ms.s2 += 0.25 * (ya + yb) * (ya + yb);
                ms.q1 += ya + yb;
                ms.q2 += ya * ya + yb * yb;
            }
            partial[static_cast<std::size_t>(k)] = ms;
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
    for (const auto& ms : partial) {
        s1 += ms.s1;
        s2 += ms.s2;
        q1 += ms.q1;
        q2 += ms.q2;
    }
    const double n = static_cast<double>(cfg.pairs);
    const double n2 = 2.0 * n;
    FactorMoments fm;
    fm.mean = q1 / n2;
    // SE of the mean from the antithetic pair averages, which are iid
    const double pair_mean = s1 / n;
    const double pair_var = std::max(0.0, s2 / n - pair_mean * pair_mean);
    fm.mean_se = std::sqrt(pair_var / n);
    fm.var = std::max(0.0, q2 / n2 - fm.mean * fm.mean);
    // rough large-sample error bar; good enough for a sanity check
    fm.var_se = fm.var * std::sqrt(2.0 / n2);
    return fm;
}

} // namespace msvol
