#include "fincon/rng.hpp"

#include <cmath>

#include "fincon/error.hpp"

namespace fincon {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline Philox4x32::Block round(const Philox4x32::Block& c, const Philox4x32::Key& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

Philox4x32::Block Philox4x32::encrypt(Block counter, Key key) {
  counter = round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    counter = round(counter, key);
  }
  return counter;
}

void Philox4x32::refill() {
  buffer_ = encrypt(counter_, key_);
  if (++counter_[0] == 0) ++counter_[1];
  index_ = 0;
}

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seed, stream) {}

std::uint64_t RngHandle::next_u64() {
  const std::uint64_t hi = engine_();
  const std::uint64_t lo = engine_();
  return (hi << 32) | lo;
}

double RngHandle::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngHandle::normal() { return normal_(engine_); }

double RngHandle::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw ValidationError("gamma: shape and rate must be positive and finite");
  }
  return std::exp(log_gamma_unit(shape)) / rate;
}

double RngHandle::log_gamma_unit(double shape) {
  if (!(shape > 0.0)) throw ValidationError("gamma: shape must be positive");
  // Marsaglia-Tsang; shapes below one are boosted by U^(1/shape) in log space.
  double log_boost = 0.0;
  double a = shape;
  if (a < 1.0) {
    log_boost = std::log(uniform()) / a;
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return std::log(d * v) + log_boost;
    }
  }
}

double RngHandle::beta(double a, double b) {
  const double lx = log_gamma_unit(a);
  const double ly = log_gamma_unit(b);
  const double m = std::max(lx, ly);
  const double ex = std::exp(lx - m);
  const double ey = std::exp(ly - m);
  return ex / (ex + ey);
}

std::uint64_t RngHandle::uniform_index(std::uint64_t n) {
  if (n == 0) throw ValidationError("uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace fincon
