// parallel.hpp - deterministic fan-out of independent tasks over a fixed worker count

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace nems {

// Evaluates fn(0) ... fn(n - 1) on up to `threads` workers. Results are returned
// in index order, so the output never depends on scheduling. The first exception
// by index is rethrown after all workers finish.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t threads, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
    using Result = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<std::optional<Result>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Result> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace nems
