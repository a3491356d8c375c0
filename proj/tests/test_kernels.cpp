#include <cmath>
#include <vector>

#include "doctest.h"
#include "pam/kernel.hpp"
#include "pam/quadrature.hpp"

using namespace pam;

namespace {

// rate-1 walk factorizes over axes; each axis is a rate-1/d walk on Z,
// so p_t(0,x) = e^{-t} prod_i I_{x_i}(t/d) for the simple random walk
double srw_bessel(int d, const Site& x, double t) {
    double prod = std::exp(-t);
    for (int i = 0; i < d; ++i)
        prod *= std::cyl_bessel_i(std::abs(x[i]), t / d);
    return prod;
}

}  // namespace

TEST_CASE("simple random walk kernel classification") {
    for (int d = 1; d <= 6; ++d) {
        Kernel k = make_simple_random_walk(d);
        CHECK(k.dim() == d);
        CHECK(k.irreducible());
        CHECK(k.zero_mean());
        CHECK(k.symmetric());
        CHECK(k.axis_separable());
        CHECK(k.finite_variance());
        double tr = k.covariance().trace();
        CHECK(tr == doctest::Approx(1.0).epsilon(1e-12));
        for (int i = 0; i < d; ++i)
            CHECK(k.covariance()(i, i) == doctest::Approx(1.0 / d).epsilon(1e-12));
    }
}

TEST_CASE("kernel validation rejects bad input") {
    auto z = [](std::initializer_list<std::int32_t> c) { return make_site(c); };
    CHECK_THROWS_AS(Kernel(1, {z({1}), z({-1})}, {0.6, 0.5}), InvalidKernel);
    CHECK_THROWS_AS(Kernel(1, {z({1}), z({-1})}, {1.1, -0.1}), InvalidKernel);
    CHECK_THROWS_AS(Kernel(2, {z({1, 0}), z({-1, 0})}, {0.5, 0.5}), InvalidKernel);
    // support 2Z is a strict sublattice
    CHECK_THROWS_AS(Kernel(1, {z({2}), z({-2})}, {0.5, 0.5}), InvalidKernel);
    CHECK_THROWS_AS(Kernel(0, {z({})}, {1.0}), InvalidDimension);
    // offsets reaching beyond the declared dimension
    CHECK_THROWS_AS(Kernel(1, {z({1, 1}), z({-1, 0})}, {0.5, 0.5}), InvalidKernel);
}

TEST_CASE("non-axis kernel classified and irreducible") {
    auto z = [](std::initializer_list<std::int32_t> c) { return make_site(c); };
    Kernel k(2, {z({1, 0}), z({-1, 0}), z({0, 1}), z({0, -1}), z({1, 1}), z({-1, -1})},
             {0.2, 0.2, 0.2, 0.2, 0.1, 0.1});
    CHECK(k.irreducible());
    CHECK(k.symmetric());
    CHECK(k.zero_mean());
    CHECK_FALSE(k.axis_separable());
    // checkerboard sublattice has index 2
    CHECK_THROWS_AS(
        Kernel(2, {z({1, 1}), z({-1, -1}), z({1, -1}), z({-1, 1})}, {0.25, 0.25, 0.25, 0.25}),
        InvalidKernel);
}

TEST_CASE("dual and symmetrization") {
    auto z = [](std::initializer_list<std::int32_t> c) { return make_site(c); };
    Kernel k(1, {z({1}), z({-1}), z({2})}, {0.5, 0.3, 0.2});
    CHECK_FALSE(k.symmetric());
    CHECK_FALSE(k.zero_mean());

    Kernel kd = dual(k);
    CHECK(kd.mean()(0) == doctest::Approx(-k.mean()(0)).epsilon(1e-14));
    double theta = 0.7;
    CHECK(kd.charfn_real(&theta) == doctest::Approx(k.charfn_real(&theta)).epsilon(1e-14));

    Kernel ks = symmetrize(k);
    CHECK(ks.symmetric());
    CHECK(ks.zero_mean());
    double total = 0;
    for (double w : ks.weights()) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ks.charfn_real(&theta) == doctest::Approx(k.charfn_real(&theta)).epsilon(1e-14));
}

TEST_CASE("alias sampler matches weights") {
    auto z = [](std::initializer_list<std::int32_t> c) { return make_site(c); };
    Kernel k(1, {z({1}), z({-1}), z({2}), z({-3})}, {0.4, 0.3, 0.2, 0.1});
    Rng rng(12345);
    const int n = 400000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) {
        const Site& s = k.sample_step(rng);
        for (int j = 0; j < 4; ++j)
            if (s == k.offsets()[j]) ++counts[j];
    }
    for (int j = 0; j < 4; ++j) {
        double p = k.weights()[j];
        double sigma = std::sqrt(p * (1 - p) * n);
        CHECK(std::abs(counts[j] - p * n) < 4.5 * sigma);
    }
}

TEST_CASE("heat kernel matches Bessel product for the simple walk") {
    for (int d = 1; d <= 5; ++d) {
        Kernel k = make_simple_random_walk(d);
        HeatKernel hk(k);
        for (double t : {0.5, 1.0, 5.0, 20.0}) {
            CHECK(hk.diagonal(t) ==
                  doctest::Approx(srw_bessel(d, Site{}, t)).epsilon(1e-9));
        }
    }
    // fixed reference value, d = 2, t = 1
    HeatKernel hk2(make_simple_random_walk(2));
    CHECK(hk2.diagonal(1.0) == doctest::Approx(0.41607050012340824).epsilon(1e-11));
    // off-diagonal
    Site e1 = make_site({1, 0});
    Site x21 = make_site({2, 1});
    CHECK(hk2.point(e1, 3.0) == doctest::Approx(srw_bessel(2, e1, 3.0)).epsilon(1e-9));
    CHECK(hk2.point(x21, 3.0) == doctest::Approx(srw_bessel(2, x21, 3.0)).epsilon(1e-9));
    // t = 0 is a point mass
    CHECK(hk2.diagonal(0.0) == 1.0);
    CHECK(hk2.point(e1, 0.0) == 0.0);
}

TEST_CASE("general quadrature path agrees with a brute-force transform") {
    auto z = [](std::initializer_list<std::int32_t> c) { return make_site(c); };
    Kernel k(2, {z({1, 0}), z({-1, 0}), z({0, 1}), z({0, -1}), z({1, 1}), z({-1, -1})},
             {0.2, 0.2, 0.2, 0.2, 0.1, 0.1});
    HeatKernel hk(k);
    const double pi = 3.14159265358979323846;
    for (double t : {0.7, 4.0, 60.0}) {
        // dense periodic trapezoid, written out independently of HeatKernel
        const int n = 1024;
        double acc = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double th[2] = {-pi + 2 * pi * i / n, -pi + 2 * pi * j / n};
                acc += std::exp(-t * (1.0 - k.charfn_real(th)));
            }
        }
        acc /= static_cast<double>(n) * n;
        CHECK(hk.diagonal(t) == doctest::Approx(acc).epsilon(1e-8));
    }
}

TEST_CASE("green constants for the simple walk") {
    GreenConstants g3 = green_constants(make_simple_random_walk(3), 1e-6, false);
    CHECK(g3.g == doctest::Approx(1.5163860591).epsilon(3e-6));
    CHECK_FALSE(g3.has_g_star);

    GreenConstants g5 = green_constants(make_simple_random_walk(5));
    CHECK(g5.g == doctest::Approx(1.156308124842536).epsilon(1e-6));
    CHECK(g5.has_g_star);
    CHECK(g5.g_star == doctest::Approx(1.9349414403867058).epsilon(1e-5));

    GreenConstants g4 = green_constants(make_simple_random_walk(4), 1e-6, false);
    CHECK(g4.g > 1.0);
    CHECK(g4.g < g3.g);

    CHECK_THROWS_AS(green_constants(make_simple_random_walk(2), 1e-6, false),
                    RecurrentKernel);
    CHECK_THROWS_AS(green_constants(make_simple_random_walk(3), 1e-6, true),
                    NotStronglyTransient);
    CHECK_THROWS_AS(green_constants(make_simple_random_walk(4), 1e-6, true),
                    NotStronglyTransient);
}

TEST_CASE("time integral obeys quadrature doubling consistency") {
    // independent oracle: integrate e^{-t} I0(t/3)^3 by fine Simpson on [0,200]
    // plus the same closed-form tail the production code would need; instead we
    // check int_s^inf = int_0^inf - int_0^s with a Simpson value for int_0^s.
    Kernel k = make_simple_random_walk(3);
    HeatKernel hk(k);
    double full = hk.time_integral(Site{}, 0.0);
    double from2 = hk.time_integral(Site{}, 2.0);
    const int n = 2000;
    double simpson = 0;
    for (int i = 0; i <= n; ++i) {
        double t = 2.0 * i / n;
        double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        simpson += w * srw_bessel(3, Site{}, t);
    }
    simpson *= (2.0 / n) / 3.0;
    CHECK(full - from2 == doctest::Approx(simpson).epsilon(1e-8));
}

TEST_CASE("rng determinism and ranges") {
    CHECK(child_seed(42, 0) != child_seed(42, 1));
    CHECK(child_seed(42, 7) == child_seed(42, 7));
    Rng a(99), b(99);
    for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(r.below(13) < 13);
        CHECK(r.exponential(2.0) > 0.0);
    }
}

TEST_CASE("torus wrap and index round trip") {
    Torus t(8, 3);
    CHECK(t.site_count() == 512);
    for (std::int64_t i = 0; i < t.site_count(); ++i)
        CHECK(t.index(t.site_at(i)) == i);
    Site s = make_site({7, 0, 3});
    std::int64_t idx = t.index(s);
    std::int64_t moved = t.add_offset(idx, make_site({1, -1, 0}));
    Site m = t.site_at(moved);
    CHECK(m[0] == 0);
    CHECK(m[1] == 7);
    CHECK(m[2] == 3);
    CHECK_THROWS_AS(Torus(7, 2), ConfigError);
    CHECK_THROWS_AS(Torus(2, 2), ConfigError);
    CHECK_THROWS_AS(Torus(4, 0), InvalidDimension);
}
