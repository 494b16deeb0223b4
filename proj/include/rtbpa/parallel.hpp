// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace rtbpa {

// 0 means: RTBPA_WORKERS from the environment, else hardware concurrency.
unsigned resolve_workers(unsigned requested);

// Runs body(begin, end) over disjoint index blocks of [0, n) on up to
// `workers` threads. Blocks are handed out dynamically; callers must make
// each index independent so the result does not depend on scheduling.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t, std::size_t)> &body,
                  std::size_t block = 64);

} // namespace rtbpa
