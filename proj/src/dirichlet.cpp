#include "pam/dirichlet.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pam/errors.hpp"

namespace pam {

double dirichlet_eigenvalue(const Box& q, double kappa) {
    if (q.dim < 1 || q.dim > kMaxDim) throw InvalidDimension("box dimension out of range");
    const std::int64_t n = q.site_count();
    if (n == 0) throw EmptyBox("dirichlet eigenvalue needs a non-empty box");
    if (kappa < 0) throw DomainError("kappa must be nonnegative");
    if (kappa == 0) return 0.0;
    if (n > (std::int64_t{1} << 24)) throw ConfigError("box too large for dense power iteration");

    const int d = q.dim;
    std::vector<std::int64_t> extent(d), stride(d);
    std::int64_t acc = 1;
    for (int i = 0; i < d; ++i) {
        extent[i] = q.hi[i] - q.lo[i] + 1;
        stride[i] = acc;
        acc *= extent[i];
    }
    // I + c*kappa*Delta has spectrum in (0,1) for c < 1/(4 d kappa)
    const double c = 1.0 / (4.0 * d * kappa + 1.0);

    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Eigen::VectorXd lap(n);
    auto apply_laplacian = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        for (std::int64_t idx = 0; idx < n; ++idx) {
            double s = -2.0 * d * x(idx);
            std::int64_t rem = idx;
            for (int i = 0; i < d; ++i) {
                std::int64_t ci = (idx / stride[i]) % extent[i];
                if (ci > 0) s += x(idx - stride[i]);
                if (ci + 1 < extent[i]) s += x(idx + stride[i]);
                (void)rem;
            }
            out(idx) = s;
        }
    };

    double rayleigh_prev = 0;
    for (int it = 0; it < 2000000; ++it) {
        apply_laplacian(v, lap);
        double rayleigh = kappa * v.dot(lap);  // v is unit
        Eigen::VectorXd w = v + (c * kappa) * lap;
        v = w / w.norm();
        if (it > 0 && std::abs(rayleigh - rayleigh_prev) <
                          1e-10 * std::max(1.0, std::abs(rayleigh)))
            return rayleigh;
        rayleigh_prev = rayleigh;
    }
    throw NonConvergent("dirichlet power iteration did not converge");
}

}  // namespace pam
