#include "pam/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pam/rng.hpp"

namespace pam {

double rate_function_I(double m) {
    if (m < 1) throw DomainError("rate function defined for M >= 1");
    return m * std::log(m) - m + 1;
}

double envelope_M(double kappa, double gamma, double rho, int d) {
    if (!(kappa > 0)) throw DomainError("envelope needs kappa > 0");
    if (d < 1) throw InvalidDimension("envelope needs d >= 1");
    const double target = (1 - rho) * gamma / (2 * d * kappa);
    if (target <= 0) return 1.0;
    double lo = 1.0, hi = 2.0;
    while (rate_function_I(hi) < target) hi *= 2;
    while (hi - lo > 1e-12 * (1 + lo)) {
        double mid = 0.5 * (lo + hi);
        (rate_function_I(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

LipschitzEnvelope lipschitz_envelope(const std::vector<double>& kappas, double gamma,
                                     double rho, int d) {
    LipschitzEnvelope env;
    env.kappas = kappas;
    env.lower_slope = -2.0 * d;
    for (double k : kappas) {
        double m = envelope_M(k, gamma, rho, d);
        env.m_values.push_back(m);
        env.upper_slope.push_back((m - 1) * 2 * d);
    }
    return env;
}

ImpliedLyapunov single_lyapunov(const LyapunovParams& params, double t) {
    ImpliedLyapunov out;
    if (params.mode == EstimatorMode::Direct) {
        if (params.torus_side < 4)
            throw ConfigError("direct estimator needs a torus side >= 4");
        VoterConfig cfg(Torus(params.torus_side, params.kernel.dim()), params.kernel,
                        params.rho);
        if (params.horizon_T > 0) {
            cfg.init = InitLaw::Warmed;
            cfg.warm_time = params.horizon_T;
        }
        AndersonEstimate est = direct_moment(params.p, params.kappa, params.gamma, t, cfg,
                                             params.replicas, params.seed, params.workers);
        out = implied_lyapunov_direct(est, params.p, t);
    } else {
        std::optional<Torus> torus;
        if (params.torus_side > 0) torus = Torus(params.torus_side, params.kernel.dim());
        AndersonEstimate est =
            dual_moment(params.kernel, params.p, params.kappa, params.gamma, params.rho, t,
                        params.horizon_T, params.replicas, params.seed, params.workers, torus);
        out = implied_lyapunov_dual(est, params.p, t, params.rho, params.gamma);
    }
    // finite-t sandwich rho gamma <= Lambda_p(t) <= gamma holds exactly in
    // expectation, so escaping it beyond noise is a correctness failure
    if (out.lambda < params.rho * params.gamma - 3 * out.sigma ||
        out.lambda > params.gamma + 3 * out.sigma)
        throw PredicateHardFailure("Lyapunov estimate escapes the sandwich [rho gamma, gamma]");
    return out;
}

LyapunovCurve estimate_lyapunov(const LyapunovParams& params,
                                const std::vector<double>& t_grid) {
    if (t_grid.size() < 3) throw ConfigError("t grid needs at least 3 points");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw ConfigError("t grid must be strictly increasing");
    LyapunovCurve curve;
    curve.t_grid = t_grid;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        LyapunovParams q = params;
        q.seed = child_seed(params.seed, i);
        ImpliedLyapunov l = single_lyapunov(q, t_grid[i]);
        curve.lambda_t.push_back(l.lambda);
        curve.sigma_t.push_back(l.sigma);
    }
    // weighted least squares on Lambda(t) = lambda + c/t
    double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double s = std::max(curve.sigma_t[i], 1e-12);
        double w = 1.0 / (s * s);
        double x = 1.0 / t_grid[i];
        s00 += w;
        s01 += w * x;
        s11 += w * x * x;
        b0 += w * curve.lambda_t[i];
        b1 += w * curve.lambda_t[i] * x;
    }
    double det = s00 * s11 - s01 * s01;
    if (det <= 0) throw NonConvergent("degenerate extrapolation design");
    curve.lambda_hat = (s11 * b0 - s01 * b1) / det;
    double coef = (s00 * b1 - s01 * b0) / det;
    curve.sigma_hat = std::sqrt(s11 / det);
    double rss = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double s = std::max(curve.sigma_t[i], 1e-12);
        double r = (curve.lambda_hat + coef / t_grid[i] - curve.lambda_t[i]) / s;
        rss += r * r;
    }
    curve.fit_residual = std::sqrt(rss / static_cast<double>(t_grid.size()));
    return curve;
}

ClumpingReport clumping_check(double lambda1, double sigma, double rho, double gamma,
                              double t_probe) {
    ClumpingReport rep;
    rep.t_probe = t_probe;
    rep.gap = lambda1 - rho * gamma;
    rep.bound = 0.25 * t_probe * rho * (1 - rho) * gamma * gamma;
    rep.sigma = sigma;
    rep.margin = rep.gap - (rep.bound - 3 * sigma);
    rep.passes = rep.margin >= 0;
    return rep;
}

GapReport intermittency_gap(const LyapunovParams& params, double t) {
    if (params.p < 2) throw ConfigError("intermittency gap needs p >= 2");
    // same seed for both orders: the first p-1 walks of the p-run replay the
    // (p-1)-run draws exactly, so the difference cancels shared noise
    LyapunovParams lower = params;
    lower.p = params.p - 1;
    ImpliedLyapunov hi = single_lyapunov(params, t);
    ImpliedLyapunov lo = single_lyapunov(lower, t);
    GapReport g;
    g.lambda_p = hi.lambda;
    g.lambda_pm1 = lo.lambda;
    g.gap = hi.lambda - lo.lambda;
    g.sigma = std::hypot(hi.sigma, lo.sigma);
    if (g.gap < -3 * g.sigma)
        throw PredicateHardFailure("Lyapunov exponents must be nondecreasing in p");
    return g;
}

JensenReport jensen_bound_check(const LyapunovParams& params, double t) {
    if (params.p < 2) throw ConfigError("Jensen comparison needs p >= 2");
    ImpliedLyapunov lp = single_lyapunov(params, t);
    LyapunovParams one = params;
    one.p = 1;
    one.gamma = params.gamma * params.p;
    one.seed = child_seed(params.seed, 1);
    ImpliedLyapunov l1 = single_lyapunov(one, t);
    JensenReport rep;
    rep.lhs = params.p * t * lp.lambda;
    rep.rhs = t * l1.lambda;
    rep.sigma = std::hypot(params.p * t * lp.sigma, t * l1.sigma);
    rep.holds = rep.lhs <= rep.rhs + 3 * rep.sigma;
    return rep;
}

DichotomyReport dichotomy_scan(const std::vector<int>& dims,
                               const std::vector<double>& kappas, const ScanConfig& cfg) {
    if (kappas.empty()) throw ConfigError("dichotomy scan needs a kappa grid");
    for (std::size_t i = 1; i < kappas.size(); ++i)
        if (!(kappas[i] > kappas[i - 1]))
            throw ConfigError("kappa grid must be strictly increasing");
    DichotomyReport rep;
    std::uint64_t run = 0;
    for (int d : dims) {
        if (d < 2) throw InvalidDimension("dichotomy scan needs d >= 2");
        LyapunovParams params = default_lyapunov_params(d);
        params.p = cfg.p;
        params.gamma = cfg.gamma;
        params.rho = cfg.rho;
        params.replicas = cfg.replicas;
        params.workers = cfg.workers;
        params.horizon_T = cfg.horizon_T;
        if (d <= 4) {
            // recurrent / marginal side: forward simulation on a torus
            params.mode = EstimatorMode::Direct;
            params.torus_side = cfg.torus_side_low_d;
        } else {
            // transient side: dual estimator on the infinite lattice
            params.mode = EstimatorMode::Dual;
            params.torus_side = 0;
        }
        std::vector<DichotomyRow> rows;
        for (double kappa : kappas) {
            params.kappa = kappa;
            params.seed = child_seed(cfg.seed, run++);
            ImpliedLyapunov l = single_lyapunov(params, cfg.t);
            rows.push_back({d, kappa, l.lambda, l.sigma});
        }
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            const DichotomyRow& a = rows[i];
            const DichotomyRow& b = rows[i + 1];
            double pair_sigma = std::hypot(a.sigma, b.sigma);
            if (a.kappa >= 0.5 && b.kappa >= 0.5) {
                double dk = b.kappa - a.kappa;
                double slope = (b.lambda - a.lambda) / dk;
                double slope_sigma = pair_sigma / dk;
                double upper = (envelope_M(a.kappa, cfg.gamma, cfg.rho, d) - 1) * 2 * d;
                if (slope < -2.0 * d - 3 * slope_sigma || slope > upper + 3 * slope_sigma) {
                    std::ostringstream msg;
                    msg << "d=" << d << ": slope " << slope << " on kappa [" << a.kappa
                        << "," << b.kappa << "] escapes the envelope [" << -2.0 * d << ","
                        << upper << "]";
                    rep.warnings.push_back(msg.str());
                }
            }
            if (d <= 4 && b.lambda < a.lambda - 3 * pair_sigma) {
                std::ostringstream msg;
                msg << "d=" << d << ": lambda decreases from kappa=" << a.kappa
                    << " to kappa=" << b.kappa << " beyond noise";
                rep.warnings.push_back(msg.str());
            }
        }
        if (d >= 5 && rows.size() >= 2) {
            const DichotomyRow& first = rows.front();
            const DichotomyRow& last = rows.back();
            double sep = std::hypot(first.sigma, last.sigma);
            if (!(first.lambda - last.lambda > 1.96 * sep)) {
                std::ostringstream msg;
                msg << "d=" << d << ": lambda(" << first.kappa << ") > lambda("
                    << last.kappa << ") not separated at 95%";
                rep.warnings.push_back(msg.str());
            }
        }
        rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    }
    return rep;
}

}  // namespace pam
