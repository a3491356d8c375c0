#pragma once

#include <vector>

#include "pam/quadrature.hpp"

namespace pam {

// Radial candidate for the five-dimensional variational problem, sampled on a
// uniform grid over [0, R] with a zero Dirichlet boundary at R.
struct RadialProfile {
    double R = 0;
    std::vector<double> values;  // values[i] = f(i h), h = R / (n - 1)

    int n() const { return static_cast<int>(values.size()); }
    double h() const { return R / (n() - 1); }
    double r(int i) const { return h() * i; }
    double norm() const;  // L2(R^5) norm of the radial extension
};

// normalizes to unit L2(R^5) norm and pins the boundary value to zero
RadialProfile projected_profile(double R, std::vector<double> values);
RadialProfile gaussian_profile(double R, int n, double width);

// |grad f|_2^2 = S4 int f'(r)^2 r^4 dr, central differences + Simpson
double dirichlet_energy(const RadialProfile& f);

// Angular average over the 4-sphere of 1/(16 pi^2 |x - y|) for |x| = r,
// |y| = s; finite across r = s (integrable singularity).
double coulomb_kernel(double r, double s, int quad_points = 48);

// int int f^2(x) f^2(y) / (16 pi^2 |x - y|) dx dy by radial reduction
double coulomb_energy(const RadialProfile& f);

double coulomb_energy_minus_dirichlet(const RadialProfile& f);

struct PolaronSolution {
    double p5_lower_bound = 0;
    RadialProfile profile;
    double refinement_delta = 0;  // coarse-grid value difference
    int iterations = 0;
    double coulomb = 0;
    double dirichlet = 0;
};

// Projected gradient ascent of coulomb - dirichlet over the unit L2 sphere of
// radial profiles, finalized by the exact scaling law F* = C^2 / (4 D). The
// result is a lower bound for the variational constant up to discretization.
PolaronSolution solve_P5(int n = 256, double R = 20, int iterations = 400);

struct ConjectureInputs {
    int d = 5;
    int p = 1;
    double rho = 0.5;
    double gamma = 1;
    GreenConstants greens;       // for the simple random walk in dimension d
    double p5_lower_bound = 0;   // used only when d = 5

    ConjectureInputs(int d_, int p_, double rho_, double gamma_, GreenConstants g,
                     double p5 = 0)
        : d(d_), p(p_), rho(rho_), gamma(gamma_), greens(std::move(g)), p5_lower_bound(p5) {
        if (d < 5) throw DimensionTooLow("conjectured limit needs d >= 5");
    }
};

struct ConjectureValue {
    double total = 0;
    double green_term = 0;
    double polaron_term = 0;             // zero unless d = 5
    bool polaron_is_lower_bound = false; // the d = 5 term uses a lower bound
};

ConjectureValue conjecture_rhs(const ConjectureInputs& inputs);

struct TrendReport {
    std::vector<double> kappas;
    std::vector<double> scaled_gaps;  // 2 d kappa (lambda(kappa) - rho gamma)
    double rhs = 0;
    std::vector<double> ratios;       // scaled gap / rhs
    bool flattening = false;
    bool in_band = false;             // last ratio within [0.1, 10]
};

// Diagnostic only: checks whether 2 d kappa (lambda_1(kappa) - rho gamma)
// flattens toward a limit comparable with the conjectured right-hand side.
TrendReport conjecture_trend(const ConjectureInputs& inputs,
                             const std::vector<double>& kappas,
                             const std::vector<double>& lambdas);

}  // namespace pam
