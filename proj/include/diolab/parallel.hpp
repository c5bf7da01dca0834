#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

namespace diolab {

// Number of OpenMP workers the next parallel region will use.
int worker_count();
// Clamp to >= 1; the serial twin below ignores this entirely.
void set_worker_count(int workers);

// Map fn over [0, count), one result slot per index. Iterations must be
// independent; each result lands at its own index, so the output matches
// sample_map_serial bit for bit at any worker count. The first exception
// thrown by fn is captured and rethrown after the loop drains.
template <class Fn>
auto sample_map(std::size_t count, Fn&& fn)
    -> std::vector<std::decay_t<decltype(fn(std::size_t{0}))>> {
  std::vector<std::decay_t<decltype(fn(std::size_t{0}))>> out(count);
  std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(count); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(diolab_sample_map_err)
      {
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

// Serial reference twin, kept as the baseline for tests and benchmarks.
template <class Fn>
auto sample_map_serial(std::size_t count, Fn&& fn)
    -> std::vector<std::decay_t<decltype(fn(std::size_t{0}))>> {
  std::vector<std::decay_t<decltype(fn(std::size_t{0}))>> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
  return out;
}

}  // namespace diolab
