#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pam/lattice.hpp"
#include "pam/rng.hpp"

namespace pam {

// Shift-invariant random-walk transition kernel p(x,y) = p(0,y-x) with
// finite support. Immutable after construction; safe to share across threads.
class Kernel {
public:
    Kernel(int dim, std::vector<Site> offsets, std::vector<double> weights);

    int dim() const { return d_; }
    const std::vector<Site>& offsets() const { return offsets_; }
    const std::vector<double>& weights() const { return weights_; }

    bool irreducible() const { return irreducible_; }
    bool zero_mean() const { return zero_mean_; }
    bool finite_variance() const { return true; }  // finite support
    bool symmetric() const { return symmetric_; }
    // every support point lies on a coordinate axis (characteristic
    // function splits as a sum over axes)
    bool axis_separable() const { return separable_; }

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }

    // characteristic function p^(theta) = sum_z w_z e^{i theta.z}; real part
    double charfn_real(const double* theta) const;

    // draw one step offset via the alias table
    const Site& sample_step(Rng& rng) const;

private:
    int d_;
    std::vector<Site> offsets_;
    std::vector<double> weights_;
    bool irreducible_ = false;
    bool zero_mean_ = false;
    bool symmetric_ = false;
    bool separable_ = false;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd covariance_;
    // alias method
    std::vector<double> alias_threshold_;
    std::vector<std::uint32_t> alias_partner_;

    void build_alias_table();
    void compute_moments();
    void classify();
};

Kernel make_simple_random_walk(int d);

// p*(x,y) = p(y,x): every offset negated, same weights
Kernel dual(const Kernel& k);

// p^(s) = (p + p*)/2 with merged support
Kernel symmetrize(const Kernel& k);

}  // namespace pam
