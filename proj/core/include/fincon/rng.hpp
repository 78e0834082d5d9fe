#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace fincon {

/// Philox4x32-10 counter-based generator. The 64-bit seed is the key, the
/// 64-bit stream id occupies the upper half of the counter, and the lower half
/// counts blocks. Distinct (seed, stream) pairs give independent sequences, so
/// parallel jobs are reproducible regardless of scheduling.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  /// The raw 10-round bijection; exposed for known-answer tests.
  static Block encrypt(Block counter, Key key);

 private:
  void refill();

  Key key_;
  Block counter_;
  Block buffer_{};
  int index_ = 4;
};

/// Owning handle for one random stream. Single-owner: never share a handle
/// between threads; create one per job from (seed, stream).
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  double normal();
  /// Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  /// log of a Gamma(shape, 1) draw; accurate for very small shapes.
  double log_gamma_unit(double shape);
  double beta(double a, double b);
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  std::uint64_t next_u64();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fincon
