#include "pam/coalescing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "pam/parallel.hpp"
#include "pam/quadrature.hpp"

namespace pam {

int CoalescenceResult::n_at(double t) const {
    int n = 0;
    for (const auto& [when, value] : n_trajectory) {
        if (when > t) break;
        n = value;
    }
    return n;
}

int CoalescenceResult::coalesced_at(double t) const {
    auto it = std::upper_bound(birth_times.begin(), birth_times.end(), t);
    int born = static_cast<int>(it - birth_times.begin());
    return born - n_at(t);
}

CoalescingSystem::CoalescingSystem(Kernel dual_kernel, std::vector<WalkerSeed> seeds,
                                   double horizon, std::optional<Torus> torus)
    : kernel_(std::move(dual_kernel)), seeds_(std::move(seeds)), horizon_(horizon),
      torus_(std::move(torus)) {
    std::stable_sort(seeds_.begin(), seeds_.end(),
                     [](const WalkerSeed& a, const WalkerSeed& b) {
                         return a.birth_time < b.birth_time;
                     });
    if (!seeds_.empty() && seeds_.back().birth_time > horizon_)
        throw ConfigError("coalescing horizon precedes the last birth");
    if (torus_ && torus_->dim() != kernel_.dim())
        throw ConfigError("torus/kernel dimension mismatch");
}

CoalescenceResult CoalescingSystem::run(Rng& rng) const {
    struct Walker {
        Site pos;        // absolute position (unwrapped)
        Site birth_pos;
        bool alive = false;
        bool wrapped = false;
    };
    const int d = kernel_.dim();
    const int half_side = torus_ ? torus_->side() / 2 : 0;

    auto key_of = [&](const Site& abs_pos) {
        if (!torus_) return abs_pos;
        Site w;
        for (int i = 0; i < d; ++i) w[i] = torus_->wrap(abs_pos[i]);
        return w;
    };

    std::vector<Walker> walkers(seeds_.size());
    std::vector<int> alive;  // walker ids, position in vector arbitrary
    std::unordered_map<Site, int, SiteHash> occupied;
    CoalescenceResult res;

    auto kill = [&](int id) {
        walkers[static_cast<std::size_t>(id)].alive = false;
        auto it = std::find(alive.begin(), alive.end(), id);
        alive[static_cast<std::size_t>(it - alive.begin())] = alive.back();
        alive.pop_back();
    };

    auto record = [&](double when) {
        res.n_trajectory.emplace_back(when, static_cast<int>(alive.size()));
    };

    std::size_t next_seed = 0;
    double t = seeds_.empty() ? horizon_ : seeds_.front().birth_time;

    auto do_birth = [&](double when) {
        int id = static_cast<int>(next_seed);
        Walker& w = walkers[static_cast<std::size_t>(id)];
        w.pos = seeds_[next_seed].site;
        w.birth_pos = w.pos;
        w.alive = true;
        ++next_seed;
        ++res.births;
        res.birth_times.push_back(when);
        Site key = key_of(w.pos);
        auto it = occupied.find(key);
        if (it != occupied.end()) {
            // an earlier-born walker sits here: it is killed, the newcomer survives
            kill(it->second);
            ++res.coalesced;
            it->second = id;
        } else {
            occupied.emplace(key, id);
        }
        alive.push_back(id);
        record(when);
    };

    for (;;) {
        if (alive.empty()) {
            if (next_seed >= seeds_.size()) break;
            t = seeds_[next_seed].birth_time;
            do_birth(t);
            continue;
        }
        double tau = rng.exponential(static_cast<double>(alive.size()));
        double t_next = t + tau;
        if (next_seed < seeds_.size() && seeds_[next_seed].birth_time <= t_next) {
            t = seeds_[next_seed].birth_time;
            do_birth(t);
            continue;
        }
        if (t_next > horizon_) break;
        t = t_next;
        int id = alive[static_cast<std::size_t>(rng.below(alive.size()))];
        Walker& w = walkers[static_cast<std::size_t>(id)];
        Site old_key = key_of(w.pos);
        w.pos = w.pos + kernel_.sample_step(rng);
        if (torus_) {
            for (int i = 0; i < d; ++i)
                if (std::abs(w.pos[i] - w.birth_pos[i]) > half_side) w.wrapped = true;
        }
        Site new_key = key_of(w.pos);
        occupied.erase(old_key);
        auto it = occupied.find(new_key);
        if (it != occupied.end()) {
            int other = it->second;
            // later-born survives; ids are assigned in birth order
            int survivor = std::max(id, other);
            int victim = std::min(id, other);
            walkers[static_cast<std::size_t>(survivor)].pos = w.pos;
            kill(victim);
            ++res.coalesced;
            it->second = survivor;
            record(t);
        } else {
            occupied.emplace(new_key, id);
        }
    }
    res.alive_end = static_cast<int>(alive.size());
    for (const auto& w : walkers)
        if (w.wrapped) ++res.wrapped_walkers;
    return res;
}

namespace {

struct DualAcc {
    MeanAccumulator weight;
    MeanAccumulator alive;
    void merge(const DualAcc& o) {
        weight.merge(o.weight);
        alive.merge(o.alive);
    }
};

}  // namespace

DualityEstimate correlation_dual(const Kernel& k, const std::vector<WalkerSeed>& points,
                                 double rho, double T, double t, std::uint64_t replicas,
                                 std::uint64_t seed, int workers,
                                 std::optional<Torus> torus) {
    if (!(rho > 0 && rho < 1)) throw ConfigError("rho must lie in (0,1)");
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (points[i].birth_time > points[i + 1].birth_time)
            throw ConfigError("duality points must be ordered by lag");
    if (!points.empty() && (points.back().birth_time > t || points.front().birth_time < 0))
        throw ConfigError("duality lags must lie in [0, t]");
    DualityEstimate est;
    if (points.size() <= 1) {
        // N is constantly 0 or 1: the probability is exact
        double p = points.empty() ? 1.0 : rho;
        est.probability.mean = p;
        est.probability.std_error = 0;
        est.probability.ci_low = est.probability.ci_high = p;
        est.probability.log_mean = std::log(p);
        est.probability.replicas = replicas;
        est.bracket_low = est.bracket_high = p;
        est.mean_alive_end = points.size();
        return est;
    }
    Kernel dual_kernel = dual(k);
    CoalescingSystem system(dual_kernel, points, T + t, torus);
    auto acc = run_replicas<DualAcc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, DualAcc& a) {
            CoalescenceResult r = system.run(rng);
            a.weight.add(std::pow(rho, r.alive_end));
            a.alive.add(static_cast<double>(r.alive_end));
        });
    est.probability = acc.weight.estimate();
    est.mean_alive_end = acc.alive.mean();
    // N is non-increasing in the horizon, so the estimate is a lower bound
    est.bracket_low = est.probability.mean;
    est.bracket_high = std::min(
        rho, est.probability.mean * std::pow(rho, -(est.mean_alive_end - 1.0)));
    return est;
}

double pair_correlation_closed_form(const Kernel& k, const Site& x1, const Site& x2,
                                    double s, double rho) {
    if (!(rho > 0 && rho < 1)) throw ConfigError("rho must lie in (0,1)");
    if (s < 0) throw DomainError("lag must be nonnegative");
    Site delta = x1 - x2;
    if (delta == Site{} && s == 0) return rho * (1 - rho);
    GreenConstants g = green_constants(k, 1e-6, false);
    HeatKernel hk(k, 1e-10);
    return rho * (1 - rho) * hk.time_integral(delta, s) / g.g;
}

double hitting_weight(const Kernel& k, const Site& z) {
    if (z == Site{}) return 1.0;
    GreenConstants g = green_constants(k, 1e-6, false);
    HeatKernel hk(k, 1e-10);
    return hk.time_integral(z, 0.0) / g.g;
}

double delta_of_K(double k_param) {
    if (!(k_param > 0)) throw DomainError("K must be positive");
    // terms only start decaying once floor(K log j) >= 3
    if (std::floor(k_param * std::log(2e8)) < 3)
        throw NonConvergent("delta(K) summation does not decay within the cap");
    double sum = 0;
    for (long long j = 5; j < 200000000LL; ++j) {
        double m = std::floor(k_param * std::log(static_cast<double>(j)));
        double expo = (m > 0) ? -m * (std::log(m) - 1.0) - 1.0 : -1.0;
        double term = std::exp(expo);
        sum += term;
        if (m >= 3 && term < 1e-15) return sum;
    }
    throw NonConvergent("delta(K) summation did not converge; K too small");
}

DeficiencyEstimate k_good_deficiency(const Kernel& k, double k_param, int horizon,
                                     std::uint64_t replicas, std::uint64_t seed, int workers) {
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    struct Acc {
        std::uint64_t bad = 0;
        std::uint64_t n = 0;
        MeanAccumulator range;
        void merge(const Acc& o) {
            bad += o.bad;
            n += o.n;
            range.merge(o.range);
        }
    };
    auto acc = run_replicas<Acc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, Acc& a) {
            Site pos{};
            double t = 0;
            bool bad = false;
            std::unordered_set<Site, SiteHash> visited;
            for (int j = 1; j <= horizon; ++j) {
                visited.clear();
                visited.insert(pos);
                const double t_end = static_cast<double>(j);
                for (;;) {
                    double tau = rng.exponential(1.0);
                    if (t + tau > t_end) {
                        t = t_end;
                        break;
                    }
                    t += tau;
                    pos = pos + k.sample_step(rng);
                    visited.insert(pos);
                }
                double range = static_cast<double>(visited.size());
                a.range.add(range);
                if (range > k_param * std::log(static_cast<double>(j) + 5.0)) bad = true;
            }
            if (bad) ++a.bad;
            ++a.n;
        });
    DeficiencyEstimate est;
    est.hits = acc.bad;
    est.replicas = acc.n;
    est.p_hat = static_cast<double>(acc.bad) / static_cast<double>(acc.n);
    est.ci = wilson_interval(acc.bad, acc.n);
    est.delta_bound = delta_of_K(k_param);
    est.mean_range = acc.range.mean();
    return est;
}

MeetingReport meeting_probability(const Kernel& k, double gap, double k_param,
                                  double horizon, std::uint64_t replicas,
                                  std::uint64_t seed, int workers) {
    if (k.dim() < 5) throw InvalidDimension("meeting decay estimate needs d >= 5");
    if (!(gap > 1)) throw DomainError("gap must exceed 1");
    MeetingReport report;
    struct Acc {
        std::uint64_t hits = 0;
        std::uint64_t n = 0;
        void merge(const Acc& o) {
            hits += o.hits;
            n += o.n;
        }
    };
    for (int scale = 0; scale < 3; ++scale) {
        double g = gap * static_cast<double>(1 << scale);
        // common random numbers: the same master seed for every gap
        auto acc = run_replicas<Acc>(
            replicas, seed, workers,
            [&](std::uint64_t, Rng& rng, Acc& a) {
                Site pa{}, pb{};
                double ta = 0;  // walker A's clock
                while (true) {
                    double tau = rng.exponential(1.0);
                    if (ta + tau > g) break;
                    ta += tau;
                    pa = pa + k.sample_step(rng);
                }
                // walker B is born at the origin at time g
                bool met = (pa == pb);
                bool b_good = true;
                double t = g;
                double tb_next = g + rng.exponential(1.0);
                double ta_next = g + rng.exponential(1.0);
                int interval = 1;
                std::unordered_set<Site, SiteHash> visited;
                visited.insert(pb);
                while (t < g + horizon) {
                    double t_interval_end = g + static_cast<double>(interval);
                    double t_next = std::min(ta_next, tb_next);
                    if (t_next > t_interval_end && interval <= static_cast<int>(horizon)) {
                        if (static_cast<double>(visited.size()) >
                            k_param * std::log(static_cast<double>(interval) + 5.0))
                            b_good = false;
                        visited.clear();
                        visited.insert(pb);
                        ++interval;
                        t = t_interval_end;
                        continue;
                    }
                    if (t_next > g + horizon) break;
                    t = t_next;
                    if (ta_next <= tb_next) {
                        pa = pa + k.sample_step(rng);
                        ta_next = t + rng.exponential(1.0);
                    } else {
                        pb = pb + k.sample_step(rng);
                        visited.insert(pb);
                        tb_next = t + rng.exponential(1.0);
                    }
                    if (pa == pb) met = true;
                }
                if (met && b_good) ++a.hits;
                ++a.n;
            });
        MeetingEstimate est;
        est.gap = g;
        est.hits = acc.hits;
        est.replicas = acc.n;
        est.ci = wilson_interval(acc.hits, acc.n);
        est.zero_hits = acc.hits == 0;
        est.p_hat = est.zero_hits ? est.ci.high
                                  : static_cast<double>(acc.hits) / static_cast<double>(acc.n);
        report.by_gap.push_back(est);
    }
    // least-squares slope of log p against log gap
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& e : report.by_gap) {
        double x = std::log(e.gap), y = std::log(e.p_hat);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n3 = static_cast<double>(report.by_gap.size());
    report.decay_exponent = -(n3 * sxy - sx * sy) / (n3 * sxx - sx * sx);
    return report;
}

namespace {

// E*[rho^{-q N^coal}] for walkers seeded along psi at the given times
MomentEstimate coalescence_mgf(const Kernel& dual_kernel, const std::vector<Site>& sites,
                               const std::vector<double>& times, double rho, double q,
                               double horizon, std::uint64_t replicas, std::uint64_t seed,
                               int workers) {
    std::vector<WalkerSeed> seeds(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
        seeds[i] = WalkerSeed{sites[i], times[i]};
    CoalescingSystem system(dual_kernel, std::move(seeds), horizon);
    auto acc = run_replicas<MeanAccumulator>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, MeanAccumulator& a) {
            CoalescenceResult r = system.run(rng);
            a.add(std::pow(rho, -q * static_cast<double>(r.coalesced)));
        });
    return acc.estimate();
}

}  // namespace

BlockReport block_inequality_check(const Kernel& k, const BlockConfig& cfg, double horizon,
                                   std::uint64_t replicas, std::uint64_t seed, int workers) {
    if (k.dim() < 5) throw InvalidDimension("block inequality needs d >= 5");
    if (std::abs(1.0 / cfg.r + 1.0 / cfg.r_prime - 1.0) > 1e-12)
        throw ConfigError("r, r' must satisfy 1/r + 1/r' = 1");
    double eps_max = (k.dim() - 4) / 2.0;
    if (!(cfg.epsilon > 0 && cfg.epsilon < eps_max))
        throw ConfigError("epsilon out of range (0, (d-4)/2)");
    const std::size_t n_sets = cfg.sets.size();
    std::vector<double> all_times;
    std::vector<Site> all_sites;
    std::size_t site_idx = 0;
    double prev_last = -std::numeric_limits<double>::infinity();
    for (const auto& s : cfg.sets) {
        if (s.empty()) throw ConfigError("block sets must be non-empty");
        for (double u : s) {
            if (u <= prev_last) throw ConfigError("block sets must be ordered and disjoint");
            prev_last = u;
            all_times.push_back(u);
            if (site_idx >= cfg.psi_sites.size())
                throw ConfigError("psi path shorter than the union of the sets");
            all_sites.push_back(cfg.psi_sites[site_idx++]);
        }
    }
    Kernel dual_kernel = dual(k);

    MomentEstimate lhs = coalescence_mgf(dual_kernel, all_sites, all_times, cfg.rho, 1.0,
                                         horizon, replicas, seed, workers);
    // per-block Hoelder factors
    double log_product = 0, rel_var = 0;
    std::size_t offset = 0;
    for (std::size_t j = 0; j < n_sets; ++j) {
        std::size_t len = cfg.sets[j].size();
        std::vector<Site> sites(all_sites.begin() + static_cast<std::ptrdiff_t>(offset),
                                all_sites.begin() + static_cast<std::ptrdiff_t>(offset + len));
        MomentEstimate bj =
            coalescence_mgf(dual_kernel, sites, cfg.sets[j], cfg.rho, cfg.r, horizon,
                            replicas, seed + 1 + j, workers);
        log_product += std::log(bj.mean) / cfg.r;
        double rel = bj.std_error / bj.mean;
        rel_var += rel * rel / (cfg.r * cfg.r);
        offset += len;
    }
    // exponential prefactor of the decoupling bound
    double sum_sizes = 0;
    for (const auto& s : cfg.sets) sum_sizes += static_cast<double>(s.size());
    double cross = 0;
    for (std::size_t j = 0; j < n_sets; ++j) {
        for (std::size_t l = j + 1; l < n_sets; ++l) {
            double dist = std::numeric_limits<double>::infinity();
            for (double u : cfg.sets[j])
                for (double v : cfg.sets[l]) dist = std::min(dist, std::abs(v - u));
            cross += static_cast<double>(cfg.sets[j].size()) *
                     static_cast<double>(cfg.sets[l].size()) /
                     std::pow(dist, 1.0 + cfg.epsilon);
        }
    }
    double prefactor = delta_of_K(cfg.k_param) / cfg.rho * sum_sizes +
                       cfg.c_epsilon * cfg.k_param *
                           (std::pow(cfg.rho, -cfg.r_prime) - 1.0) / cfg.r_prime * cross;

    BlockReport report;
    report.lhs = lhs.mean;
    report.lhs_se = lhs.std_error;
    report.rhs = std::exp(prefactor + log_product);
    report.rhs_se = report.rhs * std::sqrt(rel_var);
    double slack = 3.0 * std::sqrt(report.lhs_se * report.lhs_se +
                                   report.rhs_se * report.rhs_se);
    report.holds_within_3sigma = report.lhs <= report.rhs + slack;
    return report;
}

}  // namespace pam
