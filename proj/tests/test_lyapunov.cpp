#include <cmath>
#include <vector>

#include "doctest.h"
#include "pam/lyapunov.hpp"

using namespace pam;

TEST_CASE("rate function closed-form values and convexity") {
    CHECK(rate_function_I(1.0) == doctest::Approx(0.0));
    CHECK(rate_function_I(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(rate_function_I(0.5), DomainError);
    for (double a = 1.0; a < 8.0; a += 0.5) {
        double b = a + 1.0;
        CHECK(rate_function_I(0.5 * (a + b)) <=
              0.5 * (rate_function_I(a) + rate_function_I(b)) + 1e-14);
    }
}

TEST_CASE("envelope inversion round-trips and is monotone") {
    const double gamma = 1.0, rho = 0.3;
    const int d = 3;
    double prev = std::numeric_limits<double>::infinity();
    for (double kappa : {0.1, 0.5, 1.0, 4.0, 20.0}) {
        double m = envelope_M(kappa, gamma, rho, d);
        CHECK(m > 1.0);
        CHECK(m < prev);
        prev = m;
        double target = (1 - rho) * gamma / (2 * d * kappa);
        CHECK(rate_function_I(m) == doctest::Approx(target).epsilon(1e-10));
    }
    CHECK_THROWS_AS(envelope_M(0.0, gamma, rho, d), DomainError);
}

TEST_CASE("envelope slope matches its large-kappa asymptote") {
    const double gamma = 1.0, rho = 0.3;
    const int d = 3;
    // small target: I(M) ~ (M-1)^2/2, so (M-1) 2d ~ 2d sqrt(gamma(1-rho)/(d kappa))
    double prev_err = std::numeric_limits<double>::infinity();
    for (double kappa : {1e2, 1e4, 1e6}) {
        double slope = (envelope_M(kappa, gamma, rho, d) - 1) * 2 * d;
        double asym = 2 * d * std::sqrt(gamma * (1 - rho) / (d * kappa));
        double err = std::abs(slope / asym - 1);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("lipschitz envelope table invariants") {
    LipschitzEnvelope env = lipschitz_envelope({0.5, 1.0, 2.0, 8.0}, 1.0, 0.5, 5);
    CHECK(env.lower_slope == doctest::Approx(-10.0));
    for (std::size_t i = 0; i < env.m_values.size(); ++i) {
        CHECK(env.m_values[i] > 1.0);
        CHECK(env.upper_slope[i] ==
              doctest::Approx((env.m_values[i] - 1) * 10).epsilon(1e-14));
    }
    CHECK(env.m_values.back() < env.m_values.front());
}

TEST_CASE("zero coupling gives a flat zero curve with zero residual") {
    LyapunovParams params = default_lyapunov_params(2);
    params.mode = EstimatorMode::Direct;
    params.torus_side = 6;
    params.gamma = 0;
    params.kappa = 0.5;
    params.replicas = 200;
    params.seed = 7;
    params.workers = 2;
    LyapunovCurve curve = estimate_lyapunov(params, {1.0, 2.0, 3.0});
    for (double l : curve.lambda_t) CHECK(l == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(curve.lambda_hat == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(curve.fit_residual < 1e-6);
}

TEST_CASE("grid validation") {
    LyapunovParams params = default_lyapunov_params(2);
    params.mode = EstimatorMode::Direct;
    params.torus_side = 6;
    CHECK_THROWS_AS(estimate_lyapunov(params, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(estimate_lyapunov(params, {1.0, 2.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(intermittency_gap(params, 1.0), ConfigError);
    CHECK_THROWS_AS(jensen_bound_check(params, 1.0), ConfigError);
}

TEST_CASE("low-dimension curve trends upward and extrapolation is sane") {
    LyapunovParams params = default_lyapunov_params(2);
    params.mode = EstimatorMode::Direct;
    params.torus_side = 8;
    params.horizon_T = 4.0;
    params.gamma = 1.0;
    params.kappa = 0.5;
    params.rho = 0.5;
    params.replicas = 20000;
    params.seed = 12;
    params.workers = 4;
    LyapunovCurve curve = estimate_lyapunov(params, {1.0, 2.0, 4.0});
    double pair_sigma = std::hypot(curve.sigma_t.front(), curve.sigma_t.back());
    CHECK(curve.lambda_t.back() > curve.lambda_t.front() + 3 * pair_sigma);
    // extrapolation stays within the observed band widened by the residual
    double lo = curve.lambda_t[0], hi = curve.lambda_t[0], smax = curve.sigma_t[0];
    for (std::size_t i = 1; i < curve.lambda_t.size(); ++i) {
        lo = std::min(lo, curve.lambda_t[i]);
        hi = std::max(hi, curve.lambda_t[i]);
        smax = std::max(smax, curve.sigma_t[i]);
    }
    double slack = (curve.fit_residual + 3) * smax + 3 * curve.sigma_hat;
    CHECK(curve.lambda_hat > lo - slack);
    CHECK(curve.lambda_hat < hi + slack);
}

TEST_CASE("clumping check arithmetic") {
    ClumpingReport rep = clumping_check(0.6, 0.01, 0.5, 1.0);
    CHECK(rep.bound == doctest::Approx(0.00625));
    CHECK(rep.gap == doctest::Approx(0.1));
    CHECK(rep.passes);
    ClumpingReport tight = clumping_check(0.501, 0.0001, 0.5, 1.0);
    CHECK_FALSE(tight.passes);
    ClumpingReport degenerate = clumping_check(0.0, 0.0, 0.5, 0.0);
    CHECK(degenerate.bound == doctest::Approx(0.0));
    CHECK(degenerate.passes);
}

TEST_CASE("intermittency gap is monotone and positive without diffusion") {
    LyapunovParams params = default_lyapunov_params(5);
    params.mode = EstimatorMode::Dual;
    params.p = 2;
    params.kappa = 0.0;
    params.gamma = 2.0;
    params.rho = 0.2;
    params.horizon_T = 8.0;
    params.replicas = 60000;
    params.seed = 33;
    params.workers = 4;
    GapReport g = intermittency_gap(params, 2.0);
    CHECK(g.lambda_p >= g.lambda_pm1 - 3 * g.sigma);
    CHECK(g.gap > 0.0);
}

TEST_CASE("jensen comparison holds on a small direct configuration") {
    LyapunovParams params = default_lyapunov_params(2);
    params.mode = EstimatorMode::Direct;
    params.torus_side = 8;
    params.horizon_T = 4.0;
    params.p = 2;
    params.kappa = 0.5;
    params.gamma = 0.5;
    params.rho = 0.5;
    params.replicas = 20000;
    params.seed = 44;
    params.workers = 4;
    JensenReport rep = jensen_bound_check(params, 2.0);
    CHECK(rep.holds);
    CHECK(rep.lhs <= rep.rhs + 3 * rep.sigma);
}

TEST_CASE("dichotomy scan emits sandwiched rows") {
    ScanConfig cfg;
    cfg.gamma = 1.0;
    cfg.rho = 0.5;
    cfg.t = 2.0;
    cfg.horizon_T = 4.0;
    cfg.torus_side_low_d = 8;
    cfg.replicas = 5000;
    cfg.seed = 55;
    cfg.workers = 4;
    DichotomyReport rep = dichotomy_scan({2}, {0.0, 1.0}, cfg);
    REQUIRE(rep.rows.size() == 2);
    for (const DichotomyRow& row : rep.rows) {
        CHECK(row.d == 2);
        CHECK(row.lambda >= cfg.rho * cfg.gamma - 3 * row.sigma);
        CHECK(row.lambda <= cfg.gamma + 3 * row.sigma);
    }
    CHECK_THROWS_AS(dichotomy_scan({2}, {}, cfg), ConfigError);
    CHECK_THROWS_AS(dichotomy_scan({1}, {0.0, 1.0}, cfg), InvalidDimension);
}
