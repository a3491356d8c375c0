#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pam/anderson.hpp"

namespace pam {

// I(M) = M log M - M + 1 for M >= 1
double rate_function_I(double m);

// M(kappa): the solution of I(M) = (1-rho) gamma / (2 d kappa), by bisection
double envelope_M(double kappa, double gamma, double rho, int d);

struct LipschitzEnvelope {
    std::vector<double> kappas;
    std::vector<double> m_values;     // M(kappa) > 1, decreasing to 1
    std::vector<double> upper_slope;  // (M(kappa) - 1) 2d
    double lower_slope = 0;           // -2d
};

LipschitzEnvelope lipschitz_envelope(const std::vector<double>& kappas, double gamma,
                                     double rho, int d);

enum class EstimatorMode { Direct, Dual };

struct LyapunovParams {
    Kernel kernel;
    int p = 1;
    double kappa = 0;
    double gamma = 1;
    double rho = 0.5;
    EstimatorMode mode = EstimatorMode::Dual;
    int torus_side = 0;   // 0 = infinite lattice (Dual only)
    double horizon_T = 8; // warm time (Direct) / duality tail horizon (Dual)
    std::uint64_t replicas = 100000;
    std::uint64_t seed = 1;
    int workers = 1;

    explicit LyapunovParams(Kernel k) : kernel(std::move(k)) {}
};

inline LyapunovParams default_lyapunov_params(int d) {
    return LyapunovParams(make_simple_random_walk(d));
}

// One finite-t Lyapunov estimate. Enforces the hard finite-t predicates:
// Lambda_hat in [rho gamma - 3 sigma, gamma + 3 sigma], else
// PredicateHardFailure.
ImpliedLyapunov single_lyapunov(const LyapunovParams& params, double t);

struct LyapunovCurve {
    std::vector<double> t_grid;
    std::vector<double> lambda_t;
    std::vector<double> sigma_t;
    double lambda_hat = 0;   // extrapolated via Lambda(t) = lambda + c/t
    double sigma_hat = 0;
    double fit_residual = 0; // rms of standardized residuals
};

LyapunovCurve estimate_lyapunov(const LyapunovParams& params,
                                const std::vector<double>& t_grid);

struct ClumpingReport {
    double gap = 0;     // lambda_1 - rho gamma
    double bound = 0;   // (1/4) T_probe rho (1-rho) gamma^2
    double sigma = 0;
    double margin = 0;  // gap - (bound - 3 sigma)
    bool passes = false;
    double t_probe = 0.1;
};

ClumpingReport clumping_check(double lambda1, double sigma, double rho, double gamma,
                              double t_probe = 0.1);

struct GapReport {
    double lambda_p = 0;
    double lambda_pm1 = 0;
    double gap = 0;
    double sigma = 0;
};

// lambda_p - lambda_{p-1} at a single t with common random numbers; enforces
// the hard monotonicity predicate gap >= -3 sigma.
GapReport intermittency_gap(const LyapunovParams& params, double t);

struct JensenReport {
    double lhs = 0;  // p t Lambda_p(t; gamma)
    double rhs = 0;  // t Lambda_1(t; p gamma)
    double sigma = 0;
    bool holds = false;
};

JensenReport jensen_bound_check(const LyapunovParams& params, double t);

struct DichotomyRow {
    int d = 0;
    double kappa = 0;
    double lambda = 0;
    double sigma = 0;
};

struct DichotomyReport {
    std::vector<DichotomyRow> rows;
    std::vector<std::string> warnings;  // qualitative shape checks, never hard
};

struct ScanConfig {
    int p = 1;
    double gamma = 1;
    double rho = 0.5;
    double t = 4;
    double horizon_T = 16;
    int torus_side_low_d = 16;  // forward simulation side for d <= 4
    std::uint64_t replicas = 50000;
    std::uint64_t seed = 1;
    int workers = 1;
};

DichotomyReport dichotomy_scan(const std::vector<int>& dims,
                               const std::vector<double>& kappas, const ScanConfig& cfg);

}  // namespace pam
