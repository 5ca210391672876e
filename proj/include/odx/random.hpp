#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace odx {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the stream for (seed, key) is a pure function of
/// both, so sample i draws the same numbers regardless of which worker runs it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t key) : base_(splitmix64(seed ^ splitmix64(key + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on [0,1) with 64 random bits.
  long double uniform_ld() { return static_cast<long double>((*this)()) * 0x1.0p-64L; }

  bool bit() { return ((*this)() >> 63) != 0; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

/// Worker count from ODX_THREADS (default 1).
inline unsigned thread_count() {
  if (const char* env = std::getenv("ODX_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

/// Runs fn(worker, begin, end) over fixed contiguous chunks of [0, n).
/// Chunk boundaries depend only on n and the worker count.
template <class Fn>
void parallel_chunks(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t b = n * w / workers, e = n * (w + 1) / workers;
    pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace odx
