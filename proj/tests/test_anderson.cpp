#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pam/anderson.hpp"

using namespace pam;

namespace {

VoterConfig torus_cfg(int d, int L, double rho, double warm = 0) {
    VoterConfig cfg(Torus(L, d), make_simple_random_walk(d), rho);
    if (warm > 0) {
        cfg.init = InitLaw::Warmed;
        cfg.warm_time = warm;
    }
    return cfg;
}

}  // namespace

TEST_CASE("walk sampling") {
    Rng rng(3);
    PathSample frozen = sample_walk(3, 0.0, 5.0, rng);
    CHECK(frozen.jump_count() == 0);
    CHECK(frozen.endpoint() == Site{});
    CHECK(frozen.position_at(2.5) == Site{});

    MeanAccumulator jumps, coord;
    const int d = 2;
    const double kappa = 0.8, t = 3.0;
    for (int rep = 0; rep < 20000; ++rep) {
        PathSample p = sample_walk(d, kappa, t, rng);
        jumps.add(static_cast<double>(p.jump_count()));
        coord.add(p.endpoint()[0]);
        // nearest-neighbour steps only
        for (std::size_t j = 1; j < p.positions.size(); ++j) {
            Site diff = p.positions[j] - p.positions[j - 1];
            int l1 = 0;
            for (int i = 0; i < kMaxDim; ++i) l1 += std::abs(diff[i]);
            CHECK(l1 == 1);
        }
    }
    CHECK(std::abs(jumps.mean() - 2 * d * kappa * t) < 4 * jumps.std_error());
    CHECK(std::abs(coord.mean()) < 4 * coord.std_error());
}

TEST_CASE("poisson marks have matching mean and variance") {
    Rng rng(11);
    const double intensity = 0.7, t = 6.0;
    MeanAccumulator count, count_sq;
    for (int rep = 0; rep < 20000; ++rep) {
        PoissonMarks m = sample_marks(intensity, t, rng);
        for (double s : m.times) {
            CHECK(s >= 0.0);
            CHECK(s <= t);
        }
        CHECK(std::is_sorted(m.times.begin(), m.times.end()));
        count.add(static_cast<double>(m.times.size()));
        count_sq.add(static_cast<double>(m.times.size() * m.times.size()));
    }
    double expect = intensity * t;
    CHECK(std::abs(count.mean() - expect) < 4 * count.std_error());
    double var = count_sq.mean() - count.mean() * count.mean();
    CHECK(std::abs(var - expect) < 0.1 * expect);

    PoissonMarks none = sample_marks(0.0, 5.0, rng);
    CHECK(none.times.empty());
}

TEST_CASE("direct moment with zero coupling is exactly one") {
    VoterConfig cfg = torus_cfg(2, 8, 0.5);
    AndersonEstimate est = direct_moment(1, 1.0, 0.0, 2.0, cfg, 200, 5, 2);
    CHECK(est.moment.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(est.moment.std_error == doctest::Approx(0.0));
}

TEST_CASE("dual moment with zero coupling is exactly one") {
    Kernel k = make_simple_random_walk(2);
    AndersonEstimate est = dual_moment(k, 1, 1.0, 0.0, 0.5, 2.0, 4.0, 200, 5, 2, Torus(8, 2));
    CHECK(est.moment.mean == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("reversed-field integral is exact against a breakpoint audit") {
    VoterConfig cfg = torus_cfg(2, 6, 0.5);
    Rng rng(21);
    const double t = 4.0;
    VoterField field(cfg, rng);
    field.enable_log();
    field.evolve(t, rng);
    PathSample path = sample_walk(2, 1.5, t, rng);

    // production-path value via the occupation integral
    double exact = 0;
    {
        double a = 0;
        for (std::size_t j = 0; j <= path.jump_count(); ++j) {
            double b = (j < path.jump_count()) ? path.jump_times[j] : t;
            if (b > a)
                exact += field.occupation_from_log(cfg.torus.index(path.positions[j]),
                                                   t - b, t - a);
            a = b;
        }
    }

    // audit: midpoint rule over the union of all true breakpoints
    std::vector<double> cuts = {0.0, t};
    for (double s : path.jump_times) cuts.push_back(s);
    for (std::int64_t idx = 0; idx < cfg.torus.site_count(); ++idx)
        for (double f : field.flip_times(idx))
            if (f < t) cuts.push_back(t - f);
    std::sort(cuts.begin(), cuts.end());
    double audit = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (cuts[i + 1] <= cuts[i]) continue;
        const Site& x = path.position_at(mid);
        audit += (cuts[i + 1] - cuts[i]) *
                 field.value_at(cfg.torus.index(x), t - mid);
    }
    CHECK(exact == doctest::Approx(audit).epsilon(1e-12));
}

TEST_CASE("implied lyapunov sits in the sandwich for both estimators") {
    const double rho = 0.5, gamma = 0.5, t = 2.0;
    VoterConfig cfg = torus_cfg(2, 8, rho, 4.0);
    Kernel k = make_simple_random_walk(2);
    for (int p : {1, 2}) {
        AndersonEstimate d_est = direct_moment(p, 0.5, gamma, t, cfg, 20000, 31, 4);
        ImpliedLyapunov ld = implied_lyapunov_direct(d_est, p, t);
        CHECK(ld.lambda >= rho * gamma - 3 * ld.sigma);
        CHECK(ld.lambda <= gamma + 3 * ld.sigma);

        AndersonEstimate u_est =
            dual_moment(k, p, 0.5, gamma, rho, t, 4.0, 20000, 31, 4, Torus(8, 2));
        ImpliedLyapunov lu = implied_lyapunov_dual(u_est, p, t, rho, gamma);
        CHECK(lu.lambda >= rho * gamma - 3 * lu.sigma);
        CHECK(lu.lambda <= gamma + 3 * lu.sigma);
    }
}

TEST_CASE("direct and dual estimators agree on a small configuration") {
    const double rho = 0.5, gamma = 0.5, t = 1.0, T = 4.0;
    const int p = 1;
    VoterConfig cfg = torus_cfg(2, 8, rho, T);
    Kernel k = make_simple_random_walk(2);
    AndersonEstimate direct = direct_moment(p, 0.5, gamma, t, cfg, 40000, 55, 4);
    AndersonEstimate dual_est =
        dual_moment(k, p, 0.5, gamma, rho, t, T, 40000, 56, 4, Torus(8, 2));
    // dual estimates exp[pt(Lambda - rho gamma)], direct estimates exp[pt Lambda]
    double dual_mean = dual_est.moment.mean * std::exp(p * t * rho * gamma);
    double dual_se = dual_est.moment.std_error * std::exp(p * t * rho * gamma);
    double diff = std::abs(direct.moment.mean - dual_mean);
    CHECK(diff < 3 * std::hypot(direct.moment.std_error, dual_se));
}

TEST_CASE("pinned moment properties") {
    const double rho = 0.5, gamma = 0.5, t = 1.5;
    VoterConfig cfg = torus_cfg(2, 8, rho);

    // kappa = 0: pinning at the origin is automatic, equals the direct moment
    AndersonEstimate plain = direct_moment(1, 0.0, gamma, t, cfg, 2000, 77, 2);
    PinnedEstimate pinned = pinned_moment(1, 0.0, gamma, t, cfg, PinPolicy::Origin, 2000, 77, 2);
    CHECK(pinned.moment.mean == doctest::Approx(plain.moment.mean).epsilon(1e-14));
    CHECK(pinned.argmax == Site{});

    // pinned <= unpinned (indicator <= 1), same seeds
    AndersonEstimate moving = direct_moment(2, 1.0, gamma, t, cfg, 10000, 78, 4);
    PinnedEstimate moving_pinned =
        pinned_moment(2, 1.0, gamma, t, cfg, PinPolicy::OriginAndNeighbors, 10000, 78, 4);
    CHECK(moving_pinned.moment.mean <= moving.moment.mean + 1e-12);
}

TEST_CASE("pinned superadditivity trend at kappa zero") {
    const double rho = 0.5, gamma = 0.5;
    VoterConfig cfg = torus_cfg(2, 8, rho, 6.0);
    PinnedEstimate e1 = pinned_moment(1, 0.0, gamma, 1.0, cfg, PinPolicy::Origin, 40000, 91, 4);
    PinnedEstimate e2 = pinned_moment(1, 0.0, gamma, 2.0, cfg, PinPolicy::Origin, 40000, 92, 4);
    double product = e1.moment.mean * e1.moment.mean;
    double product_se = 2 * e1.moment.mean * e1.moment.std_error;
    CHECK(e2.moment.mean >= product - 3 * std::hypot(e2.moment.std_error, product_se));
}

TEST_CASE("window violations are counted for fast walks on a tiny torus") {
    VoterConfig cfg = torus_cfg(2, 4, 0.5);
    AndersonEstimate est = direct_moment(1, 4.0, 0.1, 4.0, cfg, 500, 101, 2);
    CHECK(est.window_violations > 0);
    AndersonEstimate excl = direct_moment(1, 4.0, 0.1, 4.0, cfg, 500, 101, 2, true);
    CHECK(excl.moment.replicas + excl.window_violations == 500);
}
