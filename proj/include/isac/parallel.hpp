#ifndef ISAC_PARALLEL_HPP
#define ISAC_PARALLEL_HPP

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace isac {

/**
 * Run fn(i) for i in [0, n) on up to n_threads threads, contiguous chunks.
 * Callers slot results by index so the outcome does not depend on the thread
 * count. The lowest-index exception is rethrown after all threads join.
 */
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int begin = t * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end]() {
            for (int i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace isac

#endif
