#include "bbm/rng.hpp"

#include <cmath>

namespace bbm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(Philox4x32::Counter& x, const Philox4x32::Key& k) {
  const std::uint64_t p0 = std::uint64_t{kMul0} * x[0];
  const std::uint64_t p1 = std::uint64_t{kMul1} * x[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double k2to53inv = 1.0 / 9007199254740992.0;  // 2^-53

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  for (int r = 0; r < 9; ++r) {
    philox_round(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  philox_round(ctr, key);
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint32_t replicate,
                     std::uint32_t context)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      replicate_(replicate),
      context_(context) {}

void RngStream::refill() {
  const Philox4x32::Counter ctr = {
      static_cast<std::uint32_t>(block_index_),
      static_cast<std::uint32_t>(block_index_ >> 32), context_, replicate_};
  buf_ = Philox4x32::block(ctr, key_);
  ++block_index_;
  half_used_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (half_used_ >= 2) refill();
  const int h = half_used_++;
  return (std::uint64_t{buf_[2 * h + 1]} << 32) | buf_[2 * h];
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * k2to53inv;
}

double RngStream::uniform_pos() {
  return static_cast<double>((next_u64() >> 11) + 1) * k2to53inv;
}

double RngStream::normal() {
  if (has_pending_normal_) {
    has_pending_normal_ = false;
    return pending_normal_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  pending_normal_ = r * std::sin(a);
  has_pending_normal_ = true;
  return r * std::cos(a);
}

void RngStream::fill_normals(std::span<double> out) {
  std::size_t i = 0;
  const std::size_t n = out.size();
  for (; i + 1 < n; i += 2) {
    const double u1 = uniform_pos();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    out[i] = r * std::cos(a);
    out[i + 1] = r * std::sin(a);
  }
  if (i < n) out[i] = normal();
}

double RngStream::exponential(double rate) {
  return -std::log(uniform_pos()) / rate;
}

}  // namespace bbm
