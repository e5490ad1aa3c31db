// Copyright 2026 The PhotoApp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace photoapp {

namespace detail {
inline std::atomic<int>& thread_cap()
{
    static std::atomic<int> cap{0};
    return cap;
}
} // namespace detail

/// Caps the number of worker threads used by parallel loops (0 = hardware concurrency).
inline void set_max_threads(int n) { detail::thread_cap().store(std::max(0, n)); }

inline int max_threads()
{
    int cap = detail::thread_cap().load();
    if (cap > 0)
        return cap;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(chunk_begin, chunk_end) over [begin, end) split into fixed-size chunks.
/// Chunk boundaries depend only on `grain`, never on the thread count, so callers
/// that keep one partial result per chunk get thread-count independent output.
inline void parallel_for_chunks(int begin, int end, int grain, const std::function<void(int, int)>& fn)
{
    if (end <= begin)
        return;
    grain                 = std::max(1, grain);
    const int chunk_count = (end - begin + grain - 1) / grain;
    const int workers     = std::min(max_threads(), chunk_count);

    auto run_chunk = [&](int chunk)
    {
        int b = begin + chunk * grain;
        fn(b, std::min(end, b + grain));
    };

    if (workers <= 1)
    {
        for (int c = 0; c < chunk_count; ++c)
            run_chunk(c);
        return;
    }

    std::atomic<int>   next{0};
    std::exception_ptr error;
    std::mutex         error_mutex;
    auto               worker = [&]
    {
        for (int c = next.fetch_add(1); c < chunk_count; c = next.fetch_add(1))
        {
            try
            {
                run_chunk(c);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int t = 1; t < workers; ++t)
        pool.emplace_back(worker);
    worker();
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

/// Index-wise parallel loop; fn(i) for every i in [begin, end).
inline void parallel_for(int begin, int end, const std::function<void(int)>& fn, int grain = 1)
{
    parallel_for_chunks(begin, end, grain,
                        [&](int b, int e)
                        {
                            for (int i = b; i < e; ++i)
                                fn(i);
                        });
}

} // namespace photoapp
