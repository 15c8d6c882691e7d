#pragma once

#include <cstddef>
#include <functional>

namespace roast {

// Runs fn(0..count-1) on up to `workers` threads (0 = hardware concurrency).
// Each index runs exactly once; the first exception is rethrown after all
// workers stop.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace roast
