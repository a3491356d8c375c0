#include "pam/polaron.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace pam {

namespace {

constexpr double kS4 = 8.0 * std::numbers::pi * std::numbers::pi / 3.0;

// per-point weights of composite Simpson on a uniform grid; an odd interval
// count is handled with a leading 3/8 panel to keep fourth-order accuracy
std::vector<double> simpson_weights(std::size_t n, double h) {
    std::vector<double> w(n, 0.0);
    if (n < 2) return w;
    if (n == 2) {
        w[0] = w[1] = 0.5 * h;
        return w;
    }
    std::size_t start = 0;
    if ((n - 1) % 2 != 0) {
        const double c = 3.0 * h / 8.0;
        w[0] += c;
        w[1] += 3 * c;
        w[2] += 3 * c;
        w[3] += c;
        start = 3;
    }
    for (std::size_t i = start; i + 2 < n; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    return w;
}

std::vector<double> radial_derivative(const RadialProfile& f) {
    const int n = f.n();
    const double h = f.h();
    std::vector<double> d(static_cast<std::size_t>(n), 0.0);
    d[0] = (f.values[1] - f.values[0]) / h;
    for (int i = 1; i + 1 < n; ++i)
        d[static_cast<std::size_t>(i)] = (f.values[static_cast<std::size_t>(i + 1)] -
                                          f.values[static_cast<std::size_t>(i - 1)]) /
                                         (2 * h);
    d[static_cast<std::size_t>(n - 1)] =
        (f.values[static_cast<std::size_t>(n - 1)] - f.values[static_cast<std::size_t>(n - 2)]) / h;
    return d;
}

void check_profile(const RadialProfile& f) {
    if (f.n() < 8) throw ConfigError("radial grid needs at least 8 points");
    if (!(f.R > 0)) throw ConfigError("radial cutoff must be positive");
}

// precomputed machinery for one grid; Eigen carries the kernel matrix
struct Workspace {
    int n;
    double R, h;
    Eigen::VectorXd r4;       // S4 r^4
    Eigen::VectorXd w;        // Simpson weights
    Eigen::MatrixXd kernel;   // angular Coulomb kernel on the (r, s) grid

    Workspace(int n_, double R_) : n(n_), R(R_), h(R_ / (n_ - 1)) {
        r4.resize(n);
        for (int i = 0; i < n; ++i) {
            double r = h * i;
            r4[i] = kS4 * r * r * r * r;
        }
        std::vector<double> sw = simpson_weights(static_cast<std::size_t>(n), h);
        w = Eigen::Map<Eigen::VectorXd>(sw.data(), n);
        kernel.resize(n, n);
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        int nthreads = std::clamp(hw, 1, 8);
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        auto body = [&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                for (int j = 0; j <= i; ++j) {
                    double v = coulomb_kernel(h * i, h * j);
                    kernel(i, j) = v;
                    kernel(j, i) = v;
                }
            }
        };
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(body);
        body();
        for (auto& t : pool) t.join();
    }

    Eigen::VectorXd as_vec(const RadialProfile& f) const {
        return Eigen::Map<const Eigen::VectorXd>(f.values.data(), n);
    }
    RadialProfile as_profile(const Eigen::VectorXd& v) const {
        RadialProfile f;
        f.R = R;
        f.values.assign(v.data(), v.data() + n);
        return f;
    }

    double norm_sq(const Eigen::VectorXd& f) const {
        return (w.array() * r4.array() * f.array().square()).sum();
    }
    Eigen::VectorXd normalized(const Eigen::VectorXd& f) const {
        double ns = norm_sq(f);
        if (!(ns > 0)) throw DomainError("cannot normalize the zero profile");
        return f / std::sqrt(ns);
    }
    double coulomb(const Eigen::VectorXd& f) const {
        Eigen::VectorXd u = (r4.array() * f.array().square()).matrix();
        Eigen::VectorXd wu = (w.array() * u.array()).matrix();
        return wu.dot(kernel * wu);
    }
    double dirichlet(const Eigen::VectorXd& f) const {
        double e = 0;
        // central differences, one-sided at the ends (r^4 kills i = 0 anyway)
        auto d = [&](int i) {
            if (i == 0) return (f[1] - f[0]) / h;
            if (i == n - 1) return (f[n - 1] - f[n - 2]) / h;
            return (f[i + 1] - f[i - 1]) / (2 * h);
        };
        for (int i = 0; i < n; ++i) {
            double di = d(i);
            e += w[i] * r4[i] * di * di;
        }
        return e;
    }
    double objective(const Eigen::VectorXd& f) const { return coulomb(f) - dirichlet(f); }

    Eigen::VectorXd gradient(const Eigen::VectorXd& f) const {
        Eigen::VectorXd u = (r4.array() * f.array().square()).matrix();
        Eigen::VectorXd wu = (w.array() * u.array()).matrix();
        Eigen::VectorXd kv = kernel * wu;
        Eigen::VectorXd g =
            (4.0 * w.array() * r4.array() * f.array() * kv.array()).matrix();
        // subtract the Dirichlet part, distributing each difference stencil
        auto add = [&](int j, double coef) {
            if (j >= 0 && j < n) g[j] -= coef;
        };
        for (int i = 0; i < n; ++i) {
            double di, scale;
            if (i == 0) {
                di = (f[1] - f[0]) / h;
                scale = 2 * w[i] * r4[i] * di / h;
                add(1, scale);
                add(0, -scale);
                continue;
            }
            if (i == n - 1) {
                di = (f[n - 1] - f[n - 2]) / h;
                scale = 2 * w[i] * r4[i] * di / h;
                add(n - 1, scale);
                add(n - 2, -scale);
                continue;
            }
            di = (f[i + 1] - f[i - 1]) / (2 * h);
            scale = 2 * w[i] * r4[i] * di / (2 * h);
            add(i + 1, scale);
            add(i - 1, -scale);
        }
        g[n - 1] = 0;  // keep the Dirichlet boundary pinned
        return g;
    }
};

struct AscentResult {
    Eigen::VectorXd f;
    double value = 0;     // scaling-finalized C^2 / (4 D)
    double coulomb = 0;
    double dirichlet = 0;
    int iterations = 0;
};

AscentResult ascend(const Workspace& ws, int iterations) {
    // start from the best member of a Gaussian width scan
    Eigen::VectorXd best;
    double best_val = -std::numeric_limits<double>::infinity();
    for (double width : {0.05, 0.1, 0.15, 0.2, 0.3}) {
        RadialProfile g = gaussian_profile(ws.R, ws.n, width * ws.R);
        Eigen::VectorXd v = ws.normalized(ws.as_vec(g));
        double val = ws.objective(v);
        if (val > best_val) {
            best_val = val;
            best = v;
        }
    }
    Eigen::VectorXd f = best;
    double cur = best_val;
    double step = 0.1;
    int it = 0;
    for (; it < iterations; ++it) {
        Eigen::VectorXd g = ws.gradient(f);
        double gn = g.norm();
        if (gn < 1e-14) break;
        step = std::min(step * 2, 1.0);
        bool accepted = false;
        while (step > 1e-14) {
            Eigen::VectorXd cand = ws.normalized(f + step * g);
            double val = ws.objective(cand);
            if (val >= cur) {
                accepted = true;
                bool converged = (val - cur) <= 1e-10 * std::max(1.0, std::abs(cur));
                f = cand;
                cur = val;
                if (converged) it = iterations;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    AscentResult res;
    res.f = f;
    res.coulomb = ws.coulomb(f);
    res.dirichlet = ws.dirichlet(f);
    res.iterations = it;
    // exact scaling law: sup over lambda of lambda C - lambda^2 D
    res.value = res.dirichlet > 0 ? res.coulomb * res.coulomb / (4 * res.dirichlet) : cur;
    return res;
}

}  // namespace

double RadialProfile::norm() const {
    check_profile(*this);
    std::vector<double> w = simpson_weights(values.size(), h());
    double ns = 0;
    for (int i = 0; i < n(); ++i) {
        double ri = r(i);
        ns += w[static_cast<std::size_t>(i)] * kS4 * ri * ri * ri * ri *
              values[static_cast<std::size_t>(i)] * values[static_cast<std::size_t>(i)];
    }
    return std::sqrt(ns);
}

RadialProfile projected_profile(double R, std::vector<double> values) {
    RadialProfile f;
    f.R = R;
    f.values = std::move(values);
    check_profile(f);
    f.values.back() = 0;
    double nrm = f.norm();
    if (!(nrm > 0)) throw DomainError("cannot normalize the zero profile");
    for (double& v : f.values) v /= nrm;
    return f;
}

RadialProfile gaussian_profile(double R, int n, double width) {
    if (!(width > 0)) throw DomainError("gaussian width must be positive");
    std::vector<double> values(static_cast<std::size_t>(n));
    double h = R / (n - 1);
    for (int i = 0; i < n; ++i)
        values[static_cast<std::size_t>(i)] = std::exp(-h * i * h * i / (2 * width * width));
    return projected_profile(R, std::move(values));
}

double dirichlet_energy(const RadialProfile& f) {
    check_profile(f);
    std::vector<double> d = radial_derivative(f);
    std::vector<double> integrand(d.size());
    for (int i = 0; i < f.n(); ++i) {
        double ri = f.r(i);
        integrand[static_cast<std::size_t>(i)] =
            kS4 * ri * ri * ri * ri * d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)];
    }
    std::vector<double> w = simpson_weights(integrand.size(), f.h());
    double e = 0;
    for (std::size_t i = 0; i < integrand.size(); ++i) e += w[i] * integrand[i];
    return e;
}

double coulomb_kernel(double r, double s, int quad_points) {
    if (r < 0 || s < 0) throw DomainError("radii must be nonnegative");
    if (r == 0 && s == 0) return 0;  // carries zero radial mass
    static thread_local int cached_n = -1;
    static thread_local std::vector<double> x, w;
    if (quad_points != cached_n) {
        gauss_legendre(quad_points, 0.0, std::numbers::pi, x, w);
        cached_n = quad_points;
    }
    double num = 0, den = 0;
    for (int i = 0; i < quad_points; ++i) {
        double sn = std::sin(x[static_cast<std::size_t>(i)]);
        double sw = sn * sn * sn;  // sphere measure weight in R^5
        double dist = std::sqrt(r * r + s * s - 2 * r * s * std::cos(x[static_cast<std::size_t>(i)]));
        num += w[static_cast<std::size_t>(i)] * sw / dist;
        den += w[static_cast<std::size_t>(i)] * sw;
    }
    return num / den / (16 * std::numbers::pi * std::numbers::pi);
}

double coulomb_energy(const RadialProfile& f) {
    check_profile(f);
    const int n = f.n();
    std::vector<double> w = simpson_weights(static_cast<std::size_t>(n), f.h());
    std::vector<double> u(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double ri = f.r(i);
        u[static_cast<std::size_t>(i)] = kS4 * ri * ri * ri * ri *
                                         f.values[static_cast<std::size_t>(i)] *
                                         f.values[static_cast<std::size_t>(i)];
    }
    double e = 0;
    for (int i = 0; i < n; ++i) {
        double row = 0;
        for (int j = 0; j < n; ++j)
            row += w[static_cast<std::size_t>(j)] * u[static_cast<std::size_t>(j)] *
                   coulomb_kernel(f.r(i), f.r(j));
        e += w[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)] * row;
    }
    return e;
}

double coulomb_energy_minus_dirichlet(const RadialProfile& f) {
    return coulomb_energy(f) - dirichlet_energy(f);
}

PolaronSolution solve_P5(int n, double R, int iterations) {
    if (n < 64) throw ConfigError("polaron grid needs n >= 64");
    if (!(R > 1)) throw ConfigError("polaron cutoff needs R > 1");
    Workspace ws(n, R);
    AscentResult fine = ascend(ws, iterations);
    Workspace coarse_ws(n / 2, R);
    AscentResult coarse = ascend(coarse_ws, iterations);
    PolaronSolution sol;
    sol.p5_lower_bound = fine.value;
    sol.profile = ws.as_profile(fine.f);
    sol.refinement_delta = std::abs(fine.value - coarse.value);
    sol.iterations = fine.iterations;
    sol.coulomb = fine.coulomb;
    sol.dirichlet = fine.dirichlet;
    if (!(sol.p5_lower_bound > 0))
        throw NonPositiveResult("variational ascent failed to find a positive value");
    return sol;
}

ConjectureValue conjecture_rhs(const ConjectureInputs& inputs) {
    if (!inputs.greens.has_g_star)
        throw ConfigError("conjectured limit needs the strongly transient Green constant");
    ConjectureValue v;
    const double base = inputs.rho * (1 - inputs.rho) * inputs.gamma * inputs.gamma;
    v.green_term = base * inputs.greens.g_star / inputs.greens.g;
    if (inputs.d == 5) {
        double a = base * inputs.p / inputs.greens.g;
        v.polaron_term = std::pow(2.0 * inputs.d, 5) * a * a * inputs.p5_lower_bound;
        v.polaron_is_lower_bound = true;
    }
    v.total = v.green_term + v.polaron_term;
    return v;
}

TrendReport conjecture_trend(const ConjectureInputs& inputs,
                             const std::vector<double>& kappas,
                             const std::vector<double>& lambdas) {
    if (kappas.size() != lambdas.size())
        throw ConfigError("kappa grid and estimates must align");
    if (kappas.size() < 3) throw ConfigError("trend diagnostic needs at least 3 points");
    TrendReport rep;
    rep.kappas = kappas;
    rep.rhs = conjecture_rhs(inputs).total;
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        double s = 2.0 * inputs.d * kappas[i] * (lambdas[i] - inputs.rho * inputs.gamma);
        rep.scaled_gaps.push_back(s);
        rep.ratios.push_back(rep.rhs > 0 ? s / rep.rhs : 0.0);
    }
    std::size_t m = rep.scaled_gaps.size();
    double d_last = std::abs(rep.scaled_gaps[m - 1] - rep.scaled_gaps[m - 2]);
    double d_prev = std::abs(rep.scaled_gaps[m - 2] - rep.scaled_gaps[m - 3]);
    rep.flattening =
        d_last <= std::max(0.5 * d_prev, 0.05 * std::abs(rep.scaled_gaps[m - 1]) + 1e-12);
    if (rep.rhs > 0)
        rep.in_band = rep.ratios.back() >= 0.1 && rep.ratios.back() <= 10.0;
    else
        rep.in_band = std::abs(rep.scaled_gaps.back()) < 1e-12;
    return rep;
}

}  // namespace pam
