#pragma once

#include "volsr/tensor/autodiff.hpp"

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace volsr::nn::detail {

/// Number of contiguous chunks `n` items are split into.
inline std::size_t chunk_count(std::size_t n) {
    return std::max<std::size_t>(1, std::min<std::size_t>(n, compute_settings().effective_threads()));
}

/// Calls fn(begin, end, chunk) for `chunk_count(n)` contiguous ranges, one
/// thread per chunk. Chunk boundaries depend only on n and the thread count.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    const std::size_t chunks = chunk_count(n);
    if (chunks == 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(chunks);
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        workers.emplace_back([&, begin, end, c] {
            try {
                fn(begin, end, c);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace volsr::nn::detail
