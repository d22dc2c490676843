#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace oareco {

/// Worker count used by parallel loops: hardware concurrency, capped by
/// OARECO_THREADS and by set_worker_limit.
std::size_t worker_count();

/// Process-wide cap (nullopt clears it). Results of every parallel kernel in
/// this library are bit-identical for any cap.
void set_worker_limit(std::optional<std::size_t> limit);

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each.
/// Chunks write disjoint outputs; the caller owns determinism of each element.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace oareco
