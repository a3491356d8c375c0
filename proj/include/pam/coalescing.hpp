#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pam/kernel.hpp"
#include "pam/lattice.hpp"
#include "pam/stats.hpp"

namespace pam {

struct WalkerSeed {
    Site site;
    double birth_time = 0;
};

// One trajectory of the coalescing system: N jumps +1 at births, -1 at merges.
struct CoalescenceResult {
    std::vector<std::pair<double, int>> n_trajectory;  // (event time, N after)
    std::vector<double> birth_times;                   // sorted
    int births = 0;
    int coalesced = 0;  // mergers up to the horizon
    int alive_end = 0;
    int wrapped_walkers = 0;  // walkers whose displacement exceeded L/2 (torus only)

    int n_at(double t) const;
    int coalesced_at(double t) const;  // births up to t minus N at t
};

// Coalescing random walks with kernel p* at step rate 1. Walkers are born at
// their seeds' space-time points; co-located walkers merge, the later-born
// one surviving. Runs on the torus when one is given, else on the infinite
// lattice.
class CoalescingSystem {
public:
    CoalescingSystem(Kernel dual_kernel, std::vector<WalkerSeed> seeds, double horizon,
                     std::optional<Torus> torus = std::nullopt);

    CoalescenceResult run(Rng& rng) const;

    double horizon() const { return horizon_; }
    const std::vector<WalkerSeed>& seeds() const { return seeds_; }

private:
    Kernel kernel_;
    std::vector<WalkerSeed> seeds_;  // sorted by birth time (stable)
    double horizon_;
    std::optional<Torus> torus_;
};

struct DualityEstimate {
    MomentEstimate probability;  // estimate of the correlation probability
    double bracket_low = 0;      // finite-horizon monotone bracket
    double bracket_high = 1;
    double mean_alive_end = 0;
};

// Monte Carlo for P(xi(x_m, t - s_m) = 1 for all m) under the T-warmed law,
// via E*[rho^{N_{T+t}}] with walkers born at (x_m, s_m). T = infinity is
// approximated by the finite horizon; the monotone bracket is reported.
DualityEstimate correlation_dual(const Kernel& k, const std::vector<WalkerSeed>& points,
                                 double rho, double T, double t, std::uint64_t replicas,
                                 std::uint64_t seed, int workers,
                                 std::optional<Torus> torus = std::nullopt);

// rho(1-rho)/G_d * int_0^infty p_{s+u}(x1,x2) du for symmetric transient kernels.
double pair_correlation_closed_form(const Kernel& k, const Site& x1, const Site& x2,
                                    double s, double rho);

// normalized hitting weight w(z) = (1/G_d) int_0^infty p_u(0,z) du; w(0) = 1
double hitting_weight(const Kernel& k, const Site& z);

// delta(K) = sum_{j>=5} exp[-floor(K log j)(log floor(K log j) - 1) - 1]
double delta_of_K(double k_param);

struct DeficiencyEstimate {
    double p_hat = 0;
    WilsonInterval ci;
    double delta_bound = 0;   // delta(K)
    double mean_range = 0;    // mean unit-interval range (internal check, <= 2)
    std::uint64_t hits = 0;
    std::uint64_t replicas = 0;
};

// P(some unit interval j <= horizon has range |R_j| > K log(j+5)) for a
// single rate-1 walker with kernel k.
DeficiencyEstimate k_good_deficiency(const Kernel& k, double k_param, int horizon,
                                     std::uint64_t replicas, std::uint64_t seed, int workers);

struct MeetingEstimate {
    double gap = 0;
    double p_hat = 0;
    WilsonInterval ci;
    std::uint64_t hits = 0;
    std::uint64_t replicas = 0;
    bool zero_hits = false;
};

struct MeetingReport {
    std::vector<MeetingEstimate> by_gap;
    double decay_exponent = 0;  // least-squares slope of -log p vs log gap
};

// Two walkers born at the same site, the second `gap` later; estimates the
// probability that they ever meet after the second birth, jointly with the
// later walker being K-good. Dyadic gap grid {gap, 2 gap, 4 gap}.
MeetingReport meeting_probability(const Kernel& k, double gap, double k_param,
                                  double horizon, std::uint64_t replicas,
                                  std::uint64_t seed, int workers);

struct BlockConfig {
    std::vector<Site> psi_sites;               // psi(s) per seed time, flattened
    std::vector<std::vector<double>> sets;     // S_1..S_N, ordered, disjoint
    double rho = 0.5;
    double k_param = 6;                        // K
    double r = 2;                              // Hoelder pair, 1/r + 1/r' = 1
    double r_prime = 2;
    double epsilon = 0.25;                     // in (0, (d-4)/2)
    double c_epsilon = 1.0;                    // calibrated constant
};

struct BlockReport {
    double lhs = 0;  // E*[rho^{-N^coal(all sets)}]
    double lhs_se = 0;
    double rhs = 0;  // decoupling bound with the calibrated constant
    double rhs_se = 0;
    bool holds_within_3sigma = false;
};

BlockReport block_inequality_check(const Kernel& k, const BlockConfig& cfg, double horizon,
                                   std::uint64_t replicas, std::uint64_t seed, int workers);

}  // namespace pam
