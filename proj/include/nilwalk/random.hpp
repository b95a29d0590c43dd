#ifndef NILWALK__RANDOM_HPP_
#define NILWALK__RANDOM_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace nilwalk {

/**
 * @brief Philox4x32-10 counter-based generator.
 *
 * The 64-bit seed is the key, the 64-bit stream id fills the upper half of
 * the counter and the lower half counts blocks. Streams (seed, i) for
 * different i never overlap, which is what makes per-sample results
 * independent of how samples are distributed over workers.
 *
 * Satisfies UniformRandomBitGenerator with 32-bit output.
 */
class Philox4x32
{
public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream)
  {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()()
  {
    if (index_ == 4) {
      refill();
      index_ = 0;
    }
    return buffer_[index_++];
  }

  std::uint64_t next_u64()
  {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint64_t block() const { return block_; }

  /// One Philox4x32-10 bijection of `ctr` under `key`.
  static std::array<std::uint32_t, 4> permute(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key)
  {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += W0;
      key[1] += W1;
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t M0 = 0xD2511F53u;
  static constexpr std::uint32_t M1 = 0xCD9E8D57u;
  static constexpr std::uint32_t W0 = 0x9E3779B9u;
  static constexpr std::uint32_t W1 = 0xBB67AE85u;

  void refill()
  {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                     static_cast<std::uint32_t>(block_ >> 32),
                                     static_cast<std::uint32_t>(stream_),
                                     static_cast<std::uint32_t>(stream_ >> 32)};
    buffer_ = permute(ctr, key_);
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_{0};
  std::array<std::uint32_t, 4> buffer_{};
  int index_{4};
};

/// Standard normal deviate by Box-Muller; two uniforms per call, no state
/// carried between calls.
inline double standard_normal(Philox4x32 & rng)
{
  constexpr double two_pi = 6.283185307179586476925286766559;
  double u1               = rng.uniform();
  while (u1 <= 0.0) { u1 = rng.uniform(); }
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/**
 * Runs f(i) for i in [0, count) on `workers` threads. Work is claimed
 * dynamically; callers must write results to slot i only, so the outcome
 * never depends on scheduling. The first exception is rethrown after all
 * threads join.
 */
template<class F>
void parallel_for(std::size_t count, int workers, F && f)
{
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) { f(i); }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) { error = std::current_exception(); }
          next = count;
        }
      }
    });
  }
  for (auto & th : pool) { th.join(); }
  if (error) { std::rethrow_exception(error); }
}

}  // namespace nilwalk

#endif  // NILWALK__RANDOM_HPP_
