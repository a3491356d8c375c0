#include "pam/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace pam {

namespace {
constexpr double kPi = std::numbers::pi;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = 0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
            }
            pp = n * (x * p0 - p1) / (x * x - 1);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1 - x * x) * pp * pp);
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = weights[n - 1 - i] = half * w;
    }
}

HeatKernel::HeatKernel(const Kernel& k, double tol) : kernel_(k), tol_(tol) {
    if (!k.symmetric())
        throw InvalidKernel("heat kernel requires a symmetric kernel");
    axis_support_.assign(k.dim(), {});
    for (std::size_t i = 0; i < k.offsets().size(); ++i) {
        const Site& z = k.offsets()[i];
        int axis = -1, nonzero = 0;
        for (int j = 0; j < k.dim(); ++j) {
            if (z[j] != 0) {
                ++nonzero;
                axis = j;
            }
        }
        if (nonzero == 0)
            lazy_weight_ += k.weights()[i];
        else if (nonzero == 1 && k.axis_separable())
            axis_support_[axis].push_back({z[axis], k.weights()[i]});
    }
}

double HeatKernel::axis_factor(int axis, std::int32_t dx, double t) const {
    const auto& sup = axis_support_[axis];
    if (sup.empty()) return dx == 0 ? 1.0 : 0.0;
    double g0 = 0, curvature = 0;
    for (const auto& [z, w] : sup) {
        g0 += w;
        curvature += w * static_cast<double>(z) * z;
    }
    // trapezoid over one period; spectrally accurate, peak width ~ 1/sqrt(t g'')
    int n = 32;
    while (n < 10.0 * std::sqrt(std::max(1.0, t * curvature)) && n < (1 << 18)) n <<= 1;
    double prev = 0;
    for (int pass = 0;; ++pass, n <<= 1) {
        if (n > (1 << 21)) throw NonConvergedQuadrature("axis trapezoid did not converge");
        double acc = 0;
        for (int j = 0; j < n; ++j) {
            double theta = -kPi + 2.0 * kPi * j / n;
            double g = 0;
            for (const auto& [z, w] : sup) g += w * std::cos(z * theta);
            acc += std::exp(-t * (g0 - g)) * std::cos(dx * theta);
        }
        acc /= n;
        if (pass > 0 && std::abs(acc - prev) <= tol_ * std::max(1.0, std::abs(acc)))
            return acc;
        prev = acc;
    }
}

double HeatKernel::point_separable(const Site& dx, double t) const {
    double prod = 1.0;
    for (int i = 0; i < kernel_.dim(); ++i) {
        prod *= axis_factor(i, dx[i], t);
        if (prod == 0.0) return 0.0;
    }
    return prod;
}

double HeatKernel::point_general(const Site& dx, double t) const {
    const int d = kernel_.dim();
    if (d > 4)
        throw NonConvergedQuadrature(
            "non-separable kernels supported only for d <= 4");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel_.covariance());
    const double lam_min = es.eigenvalues().minCoeff();
    // half-width of the integration box; outside, exp(-t(1-p^)) < e^{-32}
    double theta_star = kPi;
    if (t * lam_min > 64.0) theta_star = std::min(kPi, 12.0 / std::sqrt(t * lam_min));
    const double cell = std::pow(2.0 * theta_star, d);
    int n = 24;
    double prev = 0;
    std::vector<double> nodes, weights, theta(d);
    for (int pass = 0;; ++pass, n = n * 3 / 2) {
        if (n > 512) throw NonConvergedQuadrature("tensor quadrature did not converge");
        gauss_legendre(n, -theta_star, theta_star, nodes, weights);
        double acc = 0;
        std::vector<int> idx(d, 0);
        while (true) {
            double wprod = 1, dot = 0;
            for (int i = 0; i < d; ++i) {
                theta[i] = nodes[idx[i]];
                wprod *= weights[idx[i]];
                dot += theta[i] * dx[i];
            }
            double phat = kernel_.charfn_real(theta.data());
            acc += wprod * std::exp(-t * (1.0 - phat)) * std::cos(dot);
            int i = 0;
            for (; i < d; ++i) {
                if (++idx[i] < n) break;
                idx[i] = 0;
            }
            if (i == d) break;
        }
        acc /= std::pow(2.0 * kPi, d);
        (void)cell;
        if (pass > 0 && std::abs(acc - prev) <= tol_ * std::max(1.0, std::abs(acc)) + 1e-300)
            return acc;
        prev = acc;
    }
}

double HeatKernel::point(const Site& dx, double t) const {
    if (t < 0) throw DomainError("heat kernel needs t >= 0");
    if (t == 0) {
        for (int i = 0; i < kernel_.dim(); ++i)
            if (dx[i] != 0) return 0.0;
        return 1.0;
    }
    return kernel_.axis_separable() ? point_separable(dx, t) : point_general(dx, t);
}

double HeatKernel::asymptotic_constant() const {
    const int d = kernel_.dim();
    double det = kernel_.covariance().determinant();
    return std::pow(2.0 * kPi, -0.5 * d) / std::sqrt(det);
}

double HeatKernel::time_integral(const Site& dx, double s, int moment) const {
    const int d = kernel_.dim();
    const double T = 131072.0;  // 2^17
    auto integrand = [&](double u) {
        return (moment == 1 ? u : 1.0) * point(dx, u);
    };
    auto integrate_panels = [&](int n) {
        std::vector<double> nodes, weights;
        double acc = 0;
        double a = s;
        // unit panel up to 1, then dyadic panels to T
        std::vector<std::pair<double, double>> panels;
        if (a < 1.0) {
            panels.push_back({a, 1.0});
            a = 1.0;
        }
        double lo = a;
        double hi = 2.0;
        while (hi <= lo) hi *= 2.0;
        for (; lo < T; lo = hi, hi = std::min(hi * 2.0, T))
            panels.push_back({lo, std::min(hi, T)});
        for (auto [pa, pb] : panels) {
            gauss_legendre(n, pa, pb, nodes, weights);
            for (int i = 0; i < n; ++i) acc += weights[i] * integrand(nodes[i]);
        }
        return acc;
    };
    double coarse = integrate_panels(16);
    double fine = integrate_panels(24);
    // tail: p_u(0,dx) ~ C u^{-d/2} (1 + b/u); fit b at u = T
    const double c_as = asymptotic_constant();
    const double pT = point(dx, T);
    const double b = (pT * std::pow(T, 0.5 * d) / c_as - 1.0) * T;
    const double e1 = 0.5 * d - moment - 1.0;  // leading tail exponent
    if (e1 <= 0)
        throw NonConvergedQuadrature("tail integral diverges for this dimension/moment");
    double tail = c_as * std::pow(T, -e1) / e1;
    const double e2 = e1 + 1.0;
    double bterm = c_as * b * std::pow(T, -e2) / e2;
    tail += bterm;
    last_error_ = std::abs(fine - coarse) + std::abs(bterm) * std::abs(b) / T;
    return fine + tail;
}

GreenConstants green_constants(const Kernel& k, double tol, bool want_g_star) {
    const int d = k.dim();
    if (!k.symmetric()) throw InvalidKernel("green constants require a symmetric kernel");
    if (d <= 2) throw RecurrentKernel("G_d diverges for d <= 2");
    HeatKernel hk(k, std::min(tol * 1e-2, 1e-9));
    GreenConstants out;
    out.g = hk.time_integral(Site{}, 0.0, 0);
    out.quadrature_error = hk.last_error();
    if (want_g_star) {
        if (d <= 4)
            throw NotStronglyTransient("G_d* diverges for d <= 4");
        out.g_star = hk.time_integral(Site{}, 0.0, 1);
        out.has_g_star = true;
        out.quadrature_error += hk.last_error();
    }
    if (!(out.quadrature_error < tol))
        throw NonConvergedQuadrature("green constant quadrature above tolerance");
    return out;
}

double heat_kernel_diagonal(const Kernel& k, double t, double tol) {
    const Kernel* kp = &k;
    Kernel sym = k.symmetric() ? k : symmetrize(k);
    if (!k.symmetric()) kp = &sym;  // documented caveat: real part via p^(s)
    HeatKernel hk(*kp, tol);
    return hk.diagonal(t);
}

}  // namespace pam
