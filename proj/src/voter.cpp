#include "pam/voter.hpp"

#include <algorithm>
#include <cmath>

#include "pam/parallel.hpp"

namespace pam {

VoterField::VoterField(const VoterConfig& cfg, Rng& rng)
    : torus_(cfg.torus), kernel_(&cfg.kernel) {
    const std::int64_t n = torus_.site_count();
    state_.resize(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        state_[static_cast<std::size_t>(i)] = rng.bernoulli(cfg.rho) ? 1 : 0;
    if (cfg.init == InitLaw::Warmed && cfg.warm_time > 0) {
        evolve(cfg.warm_time, rng);
        time_ = 0;  // warm phase happens before the time origin
    }
}

VoterField::VoterField(const VoterConfig& cfg, std::vector<std::uint8_t> state)
    : torus_(cfg.torus), kernel_(&cfg.kernel), state_(std::move(state)) {
    if (state_.size() != static_cast<std::size_t>(torus_.site_count()))
        throw ConfigError("initial state size does not match the torus");
    for (auto v : state_)
        if (v > 1) throw ConfigError("initial state must be 0/1");
}

void VoterField::settle_time(double t) {
    if (tracked_ >= 0 && state_[static_cast<std::size_t>(tracked_)]) {
        tracked_occ_ += t - tracked_last_;
    }
    tracked_last_ = t;
}

void VoterField::apply_event(double when, std::int64_t target, std::int64_t source) {
    ++events_;
    std::uint8_t nv = state_[static_cast<std::size_t>(source)];
    std::uint8_t& tv = state_[static_cast<std::size_t>(target)];
    if (nv == tv) return;
    if (tracked_ == target) settle_time(when);
    tv = nv;
    if (logging_) flips_[static_cast<std::size_t>(target)].push_back(when);
}

void VoterField::evolve(double dt, Rng& rng) {
    if (dt < 0) throw DomainError("evolve needs dt >= 0");
    const double t_end = time_ + dt;
    const double total_rate = static_cast<double>(torus_.site_count());
    for (;;) {
        double tau = rng.exponential(total_rate);
        if (time_ + tau > t_end) break;
        time_ += tau;
        std::int64_t y = static_cast<std::int64_t>(rng.below(
            static_cast<std::uint64_t>(torus_.site_count())));
        const Site& z = kernel_->sample_step(rng);
        std::int64_t x = torus_.add_offset(y, -z);
        apply_event(time_, y, x);
    }
    time_ = t_end;
    if (tracked_ >= 0) settle_time(time_);
}

void VoterField::evolve_coupled(VoterField& a, VoterField& b, double dt, Rng& rng) {
    if (dt < 0) throw DomainError("evolve needs dt >= 0");
    if (a.torus_.site_count() != b.torus_.site_count() || a.torus_.dim() != b.torus_.dim())
        throw ConfigError("coupled fields need identical tori");
    const double t_end = a.time_ + dt;
    const double total_rate = static_cast<double>(a.torus_.site_count());
    for (;;) {
        double tau = rng.exponential(total_rate);
        if (a.time_ + tau > t_end) break;
        a.time_ += tau;
        b.time_ = a.time_;
        std::int64_t y = static_cast<std::int64_t>(rng.below(
            static_cast<std::uint64_t>(a.torus_.site_count())));
        const Site& z = a.kernel_->sample_step(rng);
        std::int64_t x = a.torus_.add_offset(y, -z);
        a.apply_event(a.time_, y, x);
        b.apply_event(b.time_, y, x);
    }
    a.time_ = t_end;
    b.time_ = t_end;
    if (a.tracked_ >= 0) a.settle_time(t_end);
    if (b.tracked_ >= 0) b.settle_time(t_end);
}

double VoterField::density() const {
    std::int64_t ones = 0;
    for (auto v : state_) ones += v;
    return static_cast<double>(ones) / static_cast<double>(state_.size());
}

void VoterField::enable_log() {
    logging_ = true;
    log_origin_ = time_;
    base_ = state_;
    flips_.assign(state_.size(), {});
}

int VoterField::value_at(std::int64_t site_idx, double s) const {
    if (!logging_) throw ConfigError("flip log not enabled");
    double abs_t = log_origin_ + s;
    const auto& f = flips_[static_cast<std::size_t>(site_idx)];
    auto it = std::upper_bound(f.begin(), f.end(), abs_t);
    std::size_t nflips = static_cast<std::size_t>(it - f.begin());
    int v = base_[static_cast<std::size_t>(site_idx)];
    return (nflips % 2 == 0) ? v : 1 - v;
}

double VoterField::occupation_from_log(std::int64_t site_idx, double s0, double s1) const {
    if (!logging_) throw ConfigError("flip log not enabled");
    if (s1 < s0) throw DomainError("occupation interval reversed");
    const auto& f = flips_[static_cast<std::size_t>(site_idx)];
    double a = log_origin_ + s0, b = log_origin_ + s1;
    double occ = 0;
    double cur_t = a;
    int cur_v = value_at(site_idx, s0);
    auto it = std::upper_bound(f.begin(), f.end(), a);
    for (; it != f.end() && *it <= b; ++it) {
        if (cur_v) occ += *it - cur_t;
        cur_t = *it;
        cur_v = 1 - cur_v;
    }
    if (cur_v) occ += b - cur_t;
    return occ;
}

std::size_t VoterField::flip_count(std::int64_t site_idx) const {
    if (!logging_) throw ConfigError("flip log not enabled");
    return flips_[static_cast<std::size_t>(site_idx)].size();
}

const std::vector<double>& VoterField::flip_times(std::int64_t site_idx) const {
    if (!logging_) throw ConfigError("flip log not enabled");
    return flips_[static_cast<std::size_t>(site_idx)];
}

void VoterField::track_site(std::int64_t site_idx) {
    tracked_ = site_idx;
    tracked_occ_ = 0;
    tracked_last_ = time_;
}

double VoterField::tracked_occupation() const { return tracked_occ_; }

double occupation_rate_scale(int d, double t) {
    if (t <= 1) throw DomainError("rate scale needs t > 1");
    switch (d) {
        case 2: return std::log(t);
        case 3: return std::sqrt(t);
        case 4: return t / std::log(t);
        default:
            if (d >= 5) return t;
            throw InvalidDimension("occupation rate scale defined for d >= 2");
    }
}

OccupationRecord occupation_time(const VoterConfig& cfg, const Site& site, double t, Rng& rng) {
    if (!(t > 0)) throw DomainError("occupation horizon must be positive");
    VoterField field(cfg, rng);
    std::int64_t idx = cfg.torus.index(site);
    field.track_site(idx);
    field.evolve(t, rng);
    OccupationRecord rec;
    rec.site = idx;
    rec.horizon = t;
    rec.value = field.tracked_occupation();
    return rec;
}

namespace {

struct TailAcc {
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    std::vector<double> samples;
    void merge(const TailAcc& o) {
        hits += o.hits;
        n += o.n;
        samples.insert(samples.end(), o.samples.begin(), o.samples.end());
    }
};

struct HitAcc {
    std::uint64_t hits = 0;
    std::uint64_t n = 0;
    void merge(const HitAcc& o) {
        hits += o.hits;
        n += o.n;
    }
};

}  // namespace

TailEstimate occupation_tail(const VoterConfig& cfg, double alpha, double t,
                             std::uint64_t replicas, std::uint64_t seed, int workers,
                             bool keep_samples) {
    if (!(alpha > cfg.rho && alpha < 1))
        throw ConfigError("alpha must lie in (rho, 1)");
    Site origin{};
    auto acc = run_replicas<TailAcc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, TailAcc& a) {
            OccupationRecord rec = occupation_time(cfg, origin, t, rng);
            if (rec.value >= alpha * t) ++a.hits;
            if (keep_samples) a.samples.push_back(rec.value);
            ++a.n;
        });
    TailEstimate est;
    est.hits = acc.hits;
    est.replicas = acc.n;
    est.ci = wilson_interval(acc.hits, acc.n);
    est.b_t = occupation_rate_scale(cfg.torus.dim(), t);
    est.samples = std::move(acc.samples);
    if (acc.hits == 0) {
        est.zero_hits = true;
        est.p_hat = 0;
        est.rate = -std::log(est.ci.high) / est.b_t;  // one-sided bound
    } else {
        est.p_hat = static_cast<double>(acc.hits) / static_cast<double>(acc.n);
        est.rate = -std::log(est.p_hat) / est.b_t;
    }
    return est;
}

PersistenceEstimate persistence_probability(const VoterConfig& cfg, const Box& q, double t,
                                            std::uint64_t replicas, std::uint64_t seed,
                                            int workers) {
    if (!(t > 0)) throw DomainError("persistence horizon must be positive");
    if (q.site_count() == 0) throw EmptyBox("persistence box is empty");
    // enumerate box sites once
    std::vector<std::int64_t> box_sites;
    {
        Site s = q.lo;
        for (;;) {
            box_sites.push_back(cfg.torus.index(s));
            int i = 0;
            for (; i < q.dim; ++i) {
                if (++s[i] <= q.hi[i]) break;
                s[i] = q.lo[i];
            }
            if (i == q.dim) break;
        }
    }
    auto acc = run_replicas<HitAcc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, HitAcc& a) {
            VoterField field(cfg, rng);
            bool ok = true;
            for (auto idx : box_sites)
                if (!field.value(idx)) {
                    ok = false;
                    break;
                }
            if (ok) {
                field.enable_log();
                field.evolve(t, rng);
                for (auto idx : box_sites) {
                    // a site starting at 1 stays at 1 on [0,t] iff it never flips
                    if (field.flip_count(idx) != 0) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok) ++a.hits;
            ++a.n;
        });
    PersistenceEstimate est;
    est.hits = acc.hits;
    est.replicas = acc.n;
    est.ci = wilson_interval(acc.hits, acc.n);
    if (acc.hits == 0) {
        est.zero_hits = true;
        est.p_hat = 0;
        est.rate = -std::log(est.ci.high) / t;
    } else {
        est.p_hat = static_cast<double>(acc.hits) / static_cast<double>(acc.n);
        est.rate = -std::log(est.p_hat) / t;
    }
    return est;
}

MomentEstimate pair_correlation_empirical(const VoterConfig& cfg, const Site& x1,
                                          const Site& x2, double s, std::uint64_t replicas,
                                          std::uint64_t seed, int workers,
                                          bool translation_average) {
    if (cfg.init != InitLaw::Warmed)
        throw ConfigError("pair correlation requires the warmed initial law");
    if (!cfg.kernel.symmetric())
        throw ConfigError("pair correlation requires a symmetric kernel");
    if (cfg.torus.dim() < 3)
        throw ConfigError("pair correlation requires d >= 3 (transient regime)");
    if (s < 0) throw DomainError("lag must be nonnegative");
    const double rho = cfg.rho;
    const std::int64_t n_sites = cfg.torus.site_count();
    auto acc = run_replicas<MeanAccumulator>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, MeanAccumulator& a) {
            VoterField field(cfg, rng);
            std::vector<std::uint8_t> at0 = field.state();
            field.evolve(s, rng);
            if (translation_average) {
                Site delta = x1 - x2;
                double sum = 0;
                for (std::int64_t i = 0; i < n_sites; ++i) {
                    std::int64_t j = cfg.torus.add_offset(i, delta);
                    sum += (field.value(j) - rho) * (at0[static_cast<std::size_t>(i)] - rho);
                }
                a.add(sum / static_cast<double>(n_sites));
            } else {
                double v1 = field.value(cfg.torus.index(x1)) - rho;
                double v2 = at0[static_cast<std::size_t>(cfg.torus.index(x2))] - rho;
                a.add(v1 * v2);
            }
        });
    return acc.estimate();
}

}  // namespace pam
