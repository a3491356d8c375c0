#include "pam/anderson.hpp"

#include <algorithm>
#include <cmath>

#include "pam/parallel.hpp"

namespace pam {

const Site& PathSample::position_at(double s) const {
    if (s < 0 || s > horizon) throw DomainError("path query outside [0, t]");
    auto it = std::upper_bound(jump_times.begin(), jump_times.end(), s);
    return positions[static_cast<std::size_t>(it - jump_times.begin())];
}

PathSample sample_walk(int d, double kappa, double t, Rng& rng, Site start) {
    if (kappa < 0 || t < 0) throw DomainError("walk needs kappa >= 0 and t >= 0");
    PathSample path;
    path.kappa = kappa;
    path.horizon = t;
    path.positions.push_back(start);
    if (kappa == 0) return path;
    const double rate = 2.0 * d * kappa;
    double s = 0;
    Site pos = start;
    for (;;) {
        s += rng.exponential(rate);
        if (s > t) break;
        int axis = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
        int dir = rng.bernoulli(0.5) ? 1 : -1;
        pos[axis] += dir;
        path.jump_times.push_back(s);
        path.positions.push_back(pos);
    }
    return path;
}

PoissonMarks sample_marks(double intensity, double t, Rng& rng) {
    if (intensity < 0 || t < 0) throw DomainError("marks need intensity >= 0 and t >= 0");
    PoissonMarks marks;
    marks.intensity = intensity;
    if (intensity == 0) return marks;
    double s = 0;
    for (;;) {
        s += rng.exponential(intensity);
        if (s > t) break;
        marks.times.push_back(s);
    }
    return marks;
}

namespace {

struct WeightAcc {
    LogWeightAccumulator weights;
    std::uint64_t violations = 0;
    void merge(const WeightAcc& o) {
        weights.merge(o.weights);
        violations += o.violations;
    }
};

bool walk_wrapped(const PathSample& path, int half_side) {
    for (const auto& pos : path.positions)
        for (int i = 0; i < kMaxDim; ++i)
            if (std::abs(pos[i]) > half_side) return true;
    return false;
}

// exact int_0^t xi(X(s), t - s) ds from the flip log
double reversed_field_integral(const VoterField& field, const PathSample& path, double t) {
    const Torus& torus = field.torus();
    double integral = 0;
    double a = 0;
    for (std::size_t j = 0; j <= path.jump_count(); ++j) {
        double b = (j < path.jump_count()) ? path.jump_times[j] : t;
        if (b > a) {
            std::int64_t idx = torus.index(path.positions[j]);
            integral += field.occupation_from_log(idx, t - b, t - a);
        }
        a = b;
    }
    return integral;
}

}  // namespace

AndersonEstimate direct_moment(int p, double kappa, double gamma, double t,
                               const VoterConfig& cfg, std::uint64_t replicas,
                               std::uint64_t seed, int workers, bool exclude_wrapped) {
    if (p < 1) throw ConfigError("p must be at least 1");
    if (t <= 0) throw DomainError("t must be positive");
    const int d = cfg.torus.dim();
    const int half_side = cfg.torus.side() / 2;
    auto acc = run_replicas<WeightAcc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, WeightAcc& a) {
            VoterField field(cfg, rng);
            field.enable_log();
            field.evolve(t, rng);
            double log_w = 0;
            bool wrapped = false;
            for (int q = 0; q < p; ++q) {
                PathSample path = sample_walk(d, kappa, t, rng);
                wrapped = wrapped || walk_wrapped(path, half_side);
                log_w += gamma * reversed_field_integral(field, path, t);
            }
            if (wrapped) {
                ++a.violations;
                if (exclude_wrapped) return;
            }
            a.weights.add(log_w);
        });
    AndersonEstimate est;
    est.moment = acc.weights.estimate();
    est.window_violations = acc.violations;
    est.heavy_tail = est.moment.max_share > 0.2;
    return est;
}

AndersonEstimate dual_moment(const Kernel& voter_kernel, int p, double kappa, double gamma,
                             double rho, double t, double T, std::uint64_t replicas,
                             std::uint64_t seed, int workers, std::optional<Torus> torus) {
    if (p < 1) throw ConfigError("p must be at least 1");
    if (!(rho > 0 && rho < 1)) throw ConfigError("rho must lie in (0,1)");
    if (t <= 0 || T < 0) throw DomainError("need t > 0 and T >= 0");
    const int d = voter_kernel.dim();
    const int half_side = torus ? torus->side() / 2 : 0;
    const double log_inv_rho = -std::log(rho);
    Kernel dual_kernel = dual(voter_kernel);
    auto acc = run_replicas<WeightAcc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, WeightAcc& a) {
            std::vector<WalkerSeed> seeds;
            bool wrapped = false;
            for (int q = 0; q < p; ++q) {
                PathSample path = sample_walk(d, kappa, t, rng);
                if (torus) wrapped = wrapped || walk_wrapped(path, half_side);
                PoissonMarks marks = sample_marks(rho * gamma, t, rng);
                for (double s : marks.times)
                    seeds.push_back(WalkerSeed{path.position_at(s), s});
            }
            CoalescingSystem system(dual_kernel, std::move(seeds), T + t, torus);
            CoalescenceResult r = system.run(rng);
            if (torus && r.wrapped_walkers > 0) wrapped = true;
            if (wrapped) ++a.violations;
            a.weights.add(static_cast<double>(r.coalesced) * log_inv_rho);
        });
    AndersonEstimate est;
    est.moment = acc.weights.estimate();
    est.window_violations = acc.violations;
    est.heavy_tail = est.moment.max_share > 0.2;
    return est;
}

ImpliedLyapunov implied_lyapunov_direct(const AndersonEstimate& est, int p, double t) {
    ImpliedLyapunov out;
    out.lambda = est.moment.log_mean / (p * t);
    out.sigma = (est.moment.std_error / est.moment.mean) / (p * t);
    return out;
}

ImpliedLyapunov implied_lyapunov_dual(const AndersonEstimate& est, int p, double t,
                                      double rho, double gamma) {
    ImpliedLyapunov out;
    out.lambda = rho * gamma + est.moment.log_mean / (p * t);
    out.sigma = (est.moment.std_error / est.moment.mean) / (p * t);
    return out;
}

PinnedEstimate pinned_moment(int p, double kappa, double gamma, double t,
                             const VoterConfig& cfg, PinPolicy policy,
                             std::uint64_t replicas, std::uint64_t seed, int workers) {
    if (p < 1) throw ConfigError("p must be at least 1");
    if (t <= 0) throw DomainError("t must be positive");
    const int d = cfg.torus.dim();
    const int half_side = cfg.torus.side() / 2;
    std::vector<Site> candidates = {Site{}};
    if (policy == PinPolicy::OriginAndNeighbors) {
        for (int i = 0; i < d; ++i) {
            for (int dir : {+1, -1}) {
                Site s;
                s[i] = dir;
                candidates.push_back(s);
            }
        }
    }
    struct Acc {
        std::vector<LogWeightAccumulator> per_candidate;
        std::uint64_t violations = 0;
        void merge(const Acc& o) {
            if (per_candidate.empty()) per_candidate.resize(o.per_candidate.size());
            for (std::size_t i = 0; i < o.per_candidate.size(); ++i)
                per_candidate[i].merge(o.per_candidate[i]);
            violations += o.violations;
        }
    };
    auto acc = run_replicas<Acc>(
        replicas, seed, workers,
        [&](std::uint64_t, Rng& rng, Acc& a) {
            if (a.per_candidate.empty()) a.per_candidate.resize(candidates.size());
            VoterField field(cfg, rng);
            field.enable_log();
            field.evolve(t, rng);
            double log_w = 0;
            bool wrapped = false;
            std::vector<Site> endpoints;
            endpoints.reserve(static_cast<std::size_t>(p));
            for (int q = 0; q < p; ++q) {
                PathSample path = sample_walk(d, kappa, t, rng);
                wrapped = wrapped || walk_wrapped(path, half_side);
                log_w += gamma * reversed_field_integral(field, path, t);
                endpoints.push_back(path.endpoint());
            }
            if (wrapped) ++a.violations;
            bool common = true;
            std::int64_t end_idx = cfg.torus.index(endpoints.front());
            for (const auto& e : endpoints)
                if (cfg.torus.index(e) != end_idx) {
                    common = false;
                    break;
                }
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                if (common && cfg.torus.index(candidates[c]) == end_idx)
                    a.per_candidate[c].add(log_w);
                else
                    a.per_candidate[c].add_zero();
            }
        });
    PinnedEstimate best;
    bool first = true;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        MomentEstimate m = acc.per_candidate[c].estimate();
        if (first || m.mean > best.moment.mean) {
            best.moment = m;
            best.argmax = candidates[c];
            first = false;
        }
    }
    best.window_violations = acc.violations;
    return best;
}

}  // namespace pam
