#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace mmdlab {

// Runs fn(0..jobs-1) on up to `workers` threads. Results land at their job
// index, so the output never depends on scheduling. If jobs throw, the
// exception of the lowest failing index is rethrown.
template <class Fn>
auto parallel_map(std::size_t jobs, std::size_t workers, Fn&& fn) {
    using Result = decltype(fn(std::size_t{0}));
    std::vector<std::optional<Result>> slots(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};

    auto drain = [&] {
        for (std::size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs, 1));
    if (threads == 1) {
        drain();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
    }

    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Result> out;
    out.reserve(jobs);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace mmdlab
