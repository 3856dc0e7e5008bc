#include "krein/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace krein {

std::size_t worker_count() {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("KREIN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) hw = std::min<std::size_t>(hw, static_cast<std::size_t>(v));
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string format_g17(double v) {
  if (std::signbit(v) && v == 0.0) v = 0.0;  // avoid "-0" churn in outputs
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> geometric_grid(double a, double b, std::size_t n) {
  if (!(a > 0.0) || !(b > 0.0) || n < 1) throw std::invalid_argument("geometric_grid: need a,b > 0, n >= 1");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  double lr = std::log(b / a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = a * std::exp(lr * static_cast<double>(i));
  g.front() = a;
  g.back() = b;
  return g;
}

}  // namespace krein
