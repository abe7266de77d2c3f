#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace amipdg {

/// Worker cap: AMIPDG_THREADS if set and positive, else the hardware count.
inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("AMIPDG_THREADS")) {
    try {
      const int requested = std::stoi(env);
      if (requested > 0) n = requested;
    } catch (const std::exception&) {
    }
  }
  return std::max(1, n);
}

/// Number of chunks parallel_chunks uses for n items.
inline int chunk_count(int n) { return std::max(1, std::min(worker_count(), n / 64)); }

/// Splits [0, n) into contiguous chunks and runs fn(chunk, begin, end) on
/// each, one thread per chunk. Returns the number of chunks; chunk order
/// matches index order, so callers can merge results deterministically.
template <class Fn>
int parallel_chunks(int n, Fn&& fn) {
  const int chunks = chunk_count(n);
  if (chunks == 1) {
    fn(0, 0, n);
    return 1;
  }
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> pool;
    pool.reserve(chunks);
    for (int c = 0; c < chunks; ++c) {
      const int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
      const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
      pool.emplace_back([&fn, &errors, c, begin, end] {
        try {
          fn(c, begin, end);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return chunks;
}

}  // namespace amipdg
