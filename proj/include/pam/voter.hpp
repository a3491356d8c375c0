#pragma once

#include <cstdint>
#include <vector>

#include "pam/dirichlet.hpp"
#include "pam/kernel.hpp"
#include "pam/lattice.hpp"
#include "pam/stats.hpp"

namespace pam {

enum class InitLaw { Bernoulli, Warmed };

struct VoterConfig {
    Torus torus;
    Kernel kernel;  // the p of the dynamics: y adopts the state of y - Z, Z ~ p
    double rho = 0.5;
    InitLaw init = InitLaw::Bernoulli;
    double warm_time = 0;  // Warmed(T): Bernoulli evolved for T before time 0

    VoterConfig(Torus t, Kernel k, double r) : torus(std::move(t)), kernel(std::move(k)), rho(r) {
        if (!(rho > 0 && rho < 1)) throw ConfigError("rho must lie in (0,1)");
        if (kernel.dim() != torus.dim()) throw ConfigError("kernel/torus dimension mismatch");
    }
};

// One realization of the voter field on the torus, evolved by a Gillespie
// clock of total rate L^d (each site rings at rate 1). Optional flip log
// supports exact queries xi(x,s) for any past s after the log origin, and a
// tracked site accumulates its occupation time incrementally.
class VoterField {
public:
    VoterField(const VoterConfig& cfg, Rng& rng);
    // explicit initial state (coupling constructions, deterministic starts)
    VoterField(const VoterConfig& cfg, std::vector<std::uint8_t> state);

    void evolve(double dt, Rng& rng);
    // monotone coupling: identical ring times, sites and source draws
    static void evolve_coupled(VoterField& a, VoterField& b, double dt, Rng& rng);

    double time() const { return time_; }
    std::uint64_t event_count() const { return events_; }
    int value(std::int64_t site_idx) const { return state_[static_cast<std::size_t>(site_idx)]; }
    double density() const;
    const Torus& torus() const { return torus_; }
    const std::vector<std::uint8_t>& state() const { return state_; }

    // start recording flips; the current time becomes the log origin
    void enable_log();
    bool log_enabled() const { return logging_; }
    // exact value from the log for log-origin-relative time s in [0, time()]
    int value_at(std::int64_t site_idx, double s) const;
    // exact integral of xi(site,.) over [s0,s1] from the log
    double occupation_from_log(std::int64_t site_idx, double s0, double s1) const;
    std::size_t flip_count(std::int64_t site_idx) const;
    // absolute flip times of a site since the log origin
    const std::vector<double>& flip_times(std::int64_t site_idx) const;

    void track_site(std::int64_t site_idx);
    double tracked_occupation() const;  // over [tracking start, time()]

private:
    Torus torus_;
    const Kernel* kernel_;
    std::vector<std::uint8_t> state_;
    double time_ = 0;
    std::uint64_t events_ = 0;

    bool logging_ = false;
    double log_origin_ = 0;
    std::vector<std::uint8_t> base_;               // state at log origin
    std::vector<std::vector<double>> flips_;       // absolute flip times per site

    std::int64_t tracked_ = -1;
    double tracked_occ_ = 0;
    double tracked_last_ = 0;

    void apply_event(double when, std::int64_t target, std::int64_t source);
    void settle_time(double t);
};

struct OccupationRecord {
    std::int64_t site = 0;
    double horizon = 0;
    double value = 0;  // T_t, time units
};

struct TailEstimate {
    double p_hat = 0;
    WilsonInterval ci;
    double rate = 0;  // -log p_hat / b_t
    double b_t = 0;
    std::uint64_t hits = 0;
    std::uint64_t replicas = 0;
    bool zero_hits = false;
    std::vector<double> samples;  // per-replica T_t in replica order
};

struct PersistenceEstimate {
    double p_hat = 0;
    WilsonInterval ci;
    double rate = 0;  // -(1/t) log p_hat
    std::uint64_t hits = 0;
    std::uint64_t replicas = 0;
    bool zero_hits = false;
};

// normalization b_t of the occupation large-deviation scale per dimension
double occupation_rate_scale(int d, double t);

OccupationRecord occupation_time(const VoterConfig& cfg, const Site& site, double t, Rng& rng);

TailEstimate occupation_tail(const VoterConfig& cfg, double alpha, double t,
                             std::uint64_t replicas, std::uint64_t seed, int workers,
                             bool keep_samples = false);

PersistenceEstimate persistence_probability(const VoterConfig& cfg, const Box& q, double t,
                                            std::uint64_t replicas, std::uint64_t seed,
                                            int workers);

// Monte Carlo estimate of E[(xi(x1,s)-rho)(xi(x2,0)-rho)] under the configured
// initial law. With translation_average, every replica contributes the average
// of the product over all torus translations of (x1,x2) (one sample per field).
MomentEstimate pair_correlation_empirical(const VoterConfig& cfg, const Site& x1,
                                          const Site& x2, double s, std::uint64_t replicas,
                                          std::uint64_t seed, int workers,
                                          bool translation_average = true);

}  // namespace pam
