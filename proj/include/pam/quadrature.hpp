#pragma once

#include <utility>
#include <vector>

#include "pam/kernel.hpp"

namespace pam {

// Gauss-Legendre nodes/weights on [a,b]
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Continuous-time transition probabilities p_t(0,x) for a symmetric kernel
// with step rate 1, evaluated by Fourier quadrature over [-pi,pi]^d.
// Axis-separable supports factor into per-axis periodic integrals; the
// general (non-separable) path supports d <= 4.
class HeatKernel {
public:
    explicit HeatKernel(const Kernel& k, double tol = 1e-10);

    double diagonal(double t) const { return point(Site{}, t); }
    double point(const Site& dx, double t) const;

    // int_s^infty p_u(0,dx) du, transient kernels only (d >= 3 effectively);
    // also exposes int_s^infty u p_u(0,0) du via moment=1 (needs d >= 5)
    double time_integral(const Site& dx, double s, int moment = 0) const;

    int dim() const { return kernel_.dim(); }

    // estimated absolute error of the most recent time_integral call
    double last_error() const { return last_error_; }

private:
    mutable double last_error_ = 0;
    Kernel kernel_;
    double tol_;
    // per-axis support: (displacement, weight); plus lazy (zero-offset) mass
    std::vector<std::vector<std::pair<std::int32_t, double>>> axis_support_;
    double lazy_weight_ = 0;
    double charfn_max_ = 1.0;  // sup over theta of p^(theta) given axis maxima

    double axis_factor(int axis, std::int32_t dx, double t) const;
    double point_separable(const Site& dx, double t) const;
    double point_general(const Site& dx, double t) const;
    double asymptotic_constant() const;  // (2 pi)^{-d/2} det(Sigma)^{-1/2}
};

struct GreenConstants {
    double g = 0;                // G_d, time units
    double g_star = 0;           // G_d*, time^2 units (only when defined)
    bool has_g_star = false;
    double quadrature_error = 0; // estimated absolute error
};

// G_d = int_0^inf p_t(0,0) dt and, for d >= 5, G_d* = int_0^inf t p_t(0,0) dt.
// Throws RecurrentKernel for d <= 2. If want_g_star and 3 <= d <= 4, throws
// NotStronglyTransient.
GreenConstants green_constants(const Kernel& k, double tol = 1e-6,
                               bool want_g_star = true);

// p_t(0,0) with error control by node doubling (wrapper around HeatKernel).
double heat_kernel_diagonal(const Kernel& k, double t, double tol = 1e-9);

}  // namespace pam
