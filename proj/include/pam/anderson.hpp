#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pam/coalescing.hpp"
#include "pam/stats.hpp"
#include "pam/voter.hpp"

namespace pam {

// Piecewise-constant path of the walk X^kappa (simple random walk at step
// rate 2 d kappa) over [0, t].
struct PathSample {
    std::vector<double> jump_times;  // strictly increasing, within (0, t]
    std::vector<Site> positions;     // positions[j] holds on [jump_{j-1}, jump_j)
    double kappa = 0;
    double horizon = 0;

    std::size_t jump_count() const { return jump_times.size(); }
    const Site& endpoint() const { return positions.back(); }
    const Site& position_at(double s) const;
};

PathSample sample_walk(int d, double kappa, double t, Rng& rng, Site start = Site{});

struct PoissonMarks {
    std::vector<double> times;  // sorted, within [0, t]
    double intensity = 0;
};

PoissonMarks sample_marks(double intensity, double t, Rng& rng);

struct AndersonEstimate {
    MomentEstimate moment;               // estimate of the exponential functional
    std::uint64_t window_violations = 0; // replicas whose walk left the safe window
    bool heavy_tail = false;             // top replica weight > 20% of the sum
};

// Direct Feynman-Kac estimator of E[ exp(gamma sum_q int_0^t xi(X_q(s), t-s) ds) ]
// with p independent walks over one simulated voter field per replica; the
// time integral is exact over the piecewise-constant product structure.
AndersonEstimate direct_moment(int p, double kappa, double gamma, double t,
                               const VoterConfig& cfg, std::uint64_t replicas,
                               std::uint64_t seed, int workers,
                               bool exclude_wrapped = false);

// Dual estimator of the same quantity through exp[p t (Lambda_p - rho gamma)] =
// E[rho^{-N^coal_{T+t}}]: walkers seeded at (X_q(s), s) for Poisson marks s.
// Runs on the torus when given (matching a torus-direct run exactly), else on
// the infinite lattice.
AndersonEstimate dual_moment(const Kernel& voter_kernel, int p, double kappa, double gamma,
                             double rho, double t, double T, std::uint64_t replicas,
                             std::uint64_t seed, int workers,
                             std::optional<Torus> torus = std::nullopt);

// Lambda_p(t) implied by either estimator, with its standard error.
struct ImpliedLyapunov {
    double lambda = 0;
    double sigma = 0;
};
ImpliedLyapunov implied_lyapunov_direct(const AndersonEstimate& est, int p, double t);
ImpliedLyapunov implied_lyapunov_dual(const AndersonEstimate& est, int p, double t,
                                      double rho, double gamma);

enum class PinPolicy { Origin, OriginAndNeighbors };

struct PinnedEstimate {
    MomentEstimate moment;  // best candidate site
    Site argmax;
    std::uint64_t window_violations = 0;
};

// Same functional restricted to all p walks ending at a common candidate site,
// maximized over the candidate grid.
PinnedEstimate pinned_moment(int p, double kappa, double gamma, double t,
                             const VoterConfig& cfg, PinPolicy policy,
                             std::uint64_t replicas, std::uint64_t seed, int workers);

}  // namespace pam
