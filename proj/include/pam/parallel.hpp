#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "pam/rng.hpp"

namespace pam {

inline constexpr std::uint64_t kReplicaBlock = 1024;

inline int default_workers() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs `body(replica_index, rng, acc)` for every replica, sharded over
// `workers` threads in fixed-size blocks. Each replica draws from its own
// stream seeded by child_seed(master_seed, replica_index); partial
// accumulators are merged in block order. The result is therefore
// byte-identical for any worker count.
template <class Acc, class Body>
Acc run_replicas(std::uint64_t replicas, std::uint64_t master_seed, int workers,
                 Body&& body) {
    const std::uint64_t blocks = (replicas + kReplicaBlock - 1) / kReplicaBlock;
    std::vector<Acc> partial(blocks);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};

    auto work = [&]() {
        for (;;) {
            std::uint64_t b = next.fetch_add(1);
            if (b >= blocks || failed.load()) return;
            std::uint64_t lo = b * kReplicaBlock;
            std::uint64_t hi = std::min(replicas, lo + kReplicaBlock);
            try {
                Acc& acc = partial[b];
                for (std::uint64_t i = lo; i < hi; ++i) {
                    Rng rng(child_seed(master_seed, i));
                    body(i, rng, acc);
                }
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) std::rethrow_exception(failure);

    Acc total;
    for (std::uint64_t b = 0; b < blocks; ++b) total.merge(partial[b]);
    return total;
}

}  // namespace pam
