// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace rtbpa {

unsigned resolve_workers(unsigned requested)
{
    if (requested > 0)
        return requested;
    if (const char *env = std::getenv("RTBPA_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<unsigned>(v);
        } catch (const std::exception &) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t, std::size_t)> &body,
                  std::size_t block)
{
    if (n == 0)
        return;
    block = std::max<std::size_t>(1, block);
    const std::size_t blocks = (n + block - 1) / block;
    workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), blocks));
    if (workers <= 1) {
        body(0, n);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= blocks)
                return;
            try {
                body(b * block, std::min(n, (b + 1) * block));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next = blocks;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w)
        threads.emplace_back(run);
    run();
    for (auto &t : threads)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace rtbpa
