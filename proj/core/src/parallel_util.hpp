#ifndef RONSFP_PARALLEL_UTIL_HPP
#define RONSFP_PARALLEL_UTIL_HPP

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ronsfp::detail {

/// Runs fn(i) for i in [0, n). Work item i writes only its own outputs, so
/// results do not depend on the schedule. Thread t owns the strided indices
/// {t, t + threads, ...}, which balances triangular workloads.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int k = static_cast<int>(std::min<std::size_t>(threads, n));
    std::vector<std::exception_ptr> errors(k);
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (int t = 0; t < k; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += k) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace ronsfp::detail

#endif
