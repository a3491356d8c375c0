#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "pam/errors.hpp"

namespace pam {

struct WilsonInterval {
    double low = 0;
    double high = 1;
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t n, double z = 1.96) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2 * nn)) / denom;
    const double half =
        z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Monte Carlo estimate with confidence interval; log_mean and max_share are
// populated for exponential-scale (heavy-tailed weight) estimators.
struct MomentEstimate {
    double mean = 0;
    double std_error = 0;
    double ci_low = 0;
    double ci_high = 0;
    double log_mean = -std::numeric_limits<double>::infinity();
    double max_share = 0;  // largest single weight / weight sum
    std::uint64_t replicas = 0;
};

// Plain running sums; merge order is fixed by the caller so that parallel
// runs reduce to byte-identical results.
struct MeanAccumulator {
    double sum = 0;
    double sum_sq = 0;
    std::uint64_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    void merge(const MeanAccumulator& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        n += o.n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double std_error() const {
        if (n < 2) return std::numeric_limits<double>::infinity();
        double nn = static_cast<double>(n);
        double var = (sum_sq - sum * sum / nn) / (nn - 1);
        return std::sqrt(std::max(0.0, var) / nn);
    }
    MomentEstimate estimate(double z = 1.96) const {
        MomentEstimate e;
        e.mean = mean();
        e.std_error = std_error();
        e.ci_low = e.mean - z * e.std_error;
        e.ci_high = e.mean + z * e.std_error;
        e.log_mean = e.mean > 0 ? std::log(e.mean) : -std::numeric_limits<double>::infinity();
        e.replicas = n;
        return e;
    }
};

// Accumulates weights given as log w, carrying sums scaled by the running
// maximum so that ratios survive even when w itself would overflow.
struct LogWeightAccumulator {
    double max_log = -std::numeric_limits<double>::infinity();
    double sum_scaled = 0;     // sum of exp(log w - max_log)
    double sum_scaled_sq = 0;  // sum of exp(2(log w - max_log))
    std::uint64_t n = 0;

    // a replica whose weight is exactly zero (indicator not met)
    void add_zero() { ++n; }

    void add(double log_w) {
        if (log_w > max_log) {
            double r = std::exp(max_log - log_w);
            sum_scaled *= r;
            sum_scaled_sq *= r * r;
            max_log = log_w;
        }
        double e = std::exp(log_w - max_log);
        sum_scaled += e;
        sum_scaled_sq += e * e;
        ++n;
    }
    void merge(const LogWeightAccumulator& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        if (o.max_log > max_log) {
            double r = std::exp(max_log - o.max_log);
            sum_scaled *= r;
            sum_scaled_sq *= r * r;
            max_log = o.max_log;
        }
        double r = std::exp(o.max_log - max_log);
        sum_scaled += o.sum_scaled * r;
        sum_scaled_sq += o.sum_scaled_sq * r * r;
        n += o.n;
    }
    // log of the sample mean of the weights
    double log_mean() const {
        return max_log + std::log(sum_scaled / static_cast<double>(n));
    }
    double max_share() const { return sum_scaled > 0 ? 1.0 / sum_scaled : 0.0; }

    MomentEstimate estimate(double z = 1.96) const {
        MomentEstimate e;
        e.replicas = n;
        if (n == 0) return e;
        e.log_mean = log_mean();
        e.max_share = max_share();
        double nn = static_cast<double>(n);
        double scale = std::exp(max_log);
        e.mean = scale * (sum_scaled / nn);
        if (n >= 2) {
            double var = (sum_scaled_sq - sum_scaled * sum_scaled / nn) / (nn - 1);
            e.std_error = scale * std::sqrt(std::max(0.0, var) / nn);
        } else {
            e.std_error = std::numeric_limits<double>::infinity();
        }
        e.ci_low = e.mean - z * e.std_error;
        e.ci_high = e.mean + z * e.std_error;
        return e;
    }
};

}  // namespace pam
