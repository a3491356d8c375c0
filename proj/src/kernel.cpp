#include "pam/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

namespace pam {

namespace {

// |det| of the integer lattice spanned by the given vectors (0 if rank < d).
// Row-reduction over Z; the support generates Z^d iff the result is 1.
std::int64_t lattice_index(int d, const std::vector<Site>& vecs) {
    std::vector<std::array<std::int64_t, kMaxDim>> rows;
    rows.reserve(vecs.size());
    for (const auto& v : vecs) {
        std::array<std::int64_t, kMaxDim> r{};
        for (int i = 0; i < d; ++i) r[i] = v[i];
        rows.push_back(r);
    }
    const int m = static_cast<int>(rows.size());
    int pivot_row = 0;
    for (int col = 0; col < d; ++col) {
        // gcd-eliminate this column below pivot_row until one entry remains
        while (true) {
            int best = -1;
            for (int r = pivot_row; r < m; ++r) {
                if (rows[r][col] != 0 &&
                    (best < 0 || std::llabs(rows[r][col]) < std::llabs(rows[best][col])))
                    best = r;
            }
            if (best < 0) return 0;  // column dead: rank < d
            std::swap(rows[pivot_row], rows[best]);
            bool clean = true;
            for (int r = pivot_row + 1; r < m; ++r) {
                if (rows[r][col] == 0) continue;
                std::int64_t q = rows[r][col] / rows[pivot_row][col];
                for (int i = 0; i < d; ++i) rows[r][i] -= q * rows[pivot_row][i];
                if (rows[r][col] != 0) clean = false;
            }
            if (clean) break;
        }
        ++pivot_row;
    }
    std::int64_t det = 1;
    for (int i = 0; i < d; ++i) det *= std::llabs(rows[i][i]);
    return det;
}

}  // namespace

Kernel::Kernel(int dim, std::vector<Site> offsets, std::vector<double> weights)
    : d_(dim), offsets_(std::move(offsets)), weights_(std::move(weights)) {
    if (d_ < 1 || d_ > kMaxDim) throw InvalidDimension("kernel dimension out of range");
    if (offsets_.empty() || offsets_.size() != weights_.size())
        throw InvalidKernel("offsets/weights size mismatch");
    double total = 0;
    for (double w : weights_) {
        if (w <= 0) throw InvalidKernel("kernel weights must be strictly positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidKernel("kernel weights must sum to 1");
    for (const auto& z : offsets_)
        for (int i = d_; i < kMaxDim; ++i)
            if (z[i] != 0) throw InvalidKernel("offset uses coordinates beyond kernel dimension");

    classify();
    compute_moments();
    build_alias_table();
    irreducible_ = lattice_index(d_, offsets_) == 1;
    if (!irreducible_) throw InvalidKernel("kernel support does not generate the lattice");
}

void Kernel::classify() {
    std::map<std::array<std::int32_t, kMaxDim>, double> table;
    for (std::size_t i = 0; i < offsets_.size(); ++i) table[offsets_[i].c] += weights_[i];
    symmetric_ = true;
    for (const auto& [c, w] : table) {
        Site neg;
        for (int i = 0; i < kMaxDim; ++i) neg.c[i] = -c[i];
        auto it = table.find(neg.c);
        if (it == table.end() || std::abs(it->second - w) > 1e-12) {
            symmetric_ = false;
            break;
        }
    }
    separable_ = true;
    for (const auto& z : offsets_) {
        int nonzero = 0;
        for (int i = 0; i < d_; ++i)
            if (z[i] != 0) ++nonzero;
        if (nonzero > 1) {
            separable_ = false;
            break;
        }
    }
}

void Kernel::compute_moments() {
    mean_ = Eigen::VectorXd::Zero(d_);
    covariance_ = Eigen::MatrixXd::Zero(d_, d_);
    for (std::size_t k = 0; k < offsets_.size(); ++k)
        for (int i = 0; i < d_; ++i) mean_(i) += weights_[k] * offsets_[k][i];
    for (std::size_t k = 0; k < offsets_.size(); ++k)
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
                covariance_(i, j) += weights_[k] * (offsets_[k][i] - mean_(i)) *
                                     (offsets_[k][j] - mean_(j));
    zero_mean_ = mean_.lpNorm<Eigen::Infinity>() < 1e-12;
}

void Kernel::build_alias_table() {
    const std::size_t n = weights_.size();
    alias_threshold_.assign(n, 1.0);
    alias_partner_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights_[i] * static_cast<double>(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    while (!small.empty() && !large.empty()) {
        std::uint32_t s = small.back();
        small.pop_back();
        std::uint32_t l = large.back();
        alias_threshold_[s] = scaled[s];
        alias_partner_[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
}

const Site& Kernel::sample_step(Rng& rng) const {
    const std::size_t n = offsets_.size();
    std::size_t i = static_cast<std::size_t>(rng.below(n));
    if (rng.uniform() >= alias_threshold_[i]) i = alias_partner_[i];
    return offsets_[i];
}

double Kernel::charfn_real(const double* theta) const {
    double acc = 0;
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
        double dot = 0;
        for (int i = 0; i < d_; ++i) dot += theta[i] * offsets_[k][i];
        acc += weights_[k] * std::cos(dot);
    }
    return acc;
}

Kernel make_simple_random_walk(int d) {
    if (d < 1) throw InvalidDimension("simple random walk needs d >= 1");
    std::vector<Site> offsets;
    std::vector<double> weights;
    for (int i = 0; i < d; ++i) {
        for (int sign : {+1, -1}) {
            Site z;
            z[i] = sign;
            offsets.push_back(z);
            weights.push_back(1.0 / (2.0 * d));
        }
    }
    return Kernel(d, std::move(offsets), std::move(weights));
}

Kernel dual(const Kernel& k) {
    std::vector<Site> offsets;
    offsets.reserve(k.offsets().size());
    for (const auto& z : k.offsets()) offsets.push_back(-z);
    return Kernel(k.dim(), std::move(offsets), k.weights());
}

Kernel symmetrize(const Kernel& k) {
    std::map<std::array<std::int32_t, kMaxDim>, double> table;
    for (std::size_t i = 0; i < k.offsets().size(); ++i) {
        table[k.offsets()[i].c] += 0.5 * k.weights()[i];
        table[(-k.offsets()[i]).c] += 0.5 * k.weights()[i];
    }
    std::vector<Site> offsets;
    std::vector<double> weights;
    double total = 0;
    for (const auto& [c, w] : table) total += w;
    for (const auto& [c, w] : table) {
        Site z;
        z.c = c;
        offsets.push_back(z);
        weights.push_back(w / total);  // exact renormalization
    }
    return Kernel(k.dim(), std::move(offsets), std::move(weights));
}

}  // namespace pam
