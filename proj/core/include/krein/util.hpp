#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace krein {

// Number of worker threads: min(hardware, KREIN_THREADS) with KREIN_THREADS=1
// forcing serial execution. Never returns 0.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Work items must be independent; results are
// deterministic regardless of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Fixed-width numeric formatting used by every CSV/JSON emitter: 17 significant
// digits, locale-independent, so repeated runs are byte-identical.
std::string format_g17(double v);

// Geometric grid with n points from a to b inclusive (n >= 1, a,b > 0).
std::vector<double> geometric_grid(double a, double b, std::size_t n);

}  // namespace krein
