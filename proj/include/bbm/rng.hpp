#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace bbm {

/// Philox4x32-10 counter-based block cipher (Salmon et al. constants).
/// Stateless: a (counter, key) pair maps to 128 bits of output, which is
/// what makes replicate-parallel streams reproducible regardless of
/// scheduling.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter ctr, Key key);
};

/// One logical random stream, keyed by (seed, replicate, context).
/// Streams with distinct (replicate, context) pairs never overlap.
/// The draw sequence depends only on the call sequence, never on threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint32_t replicate, std::uint32_t context);

  std::uint64_t next_u64();
  double uniform01();    // in [0, 1)
  double uniform_pos();  // in (0, 1], safe for log()
  double normal();       // standard normal, Box-Muller, pair-cached
  void fill_normals(std::span<double> out);
  double exponential(double rate);

  std::uint32_t replicate() const { return replicate_; }
  std::uint32_t context() const { return context_; }

  // UniformRandomBitGenerator interface so std:: distributions apply.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }
  result_type operator()() { return next_u64(); }

 private:
  void refill();

  Philox4x32::Key key_;
  std::uint32_t replicate_;
  std::uint32_t context_;
  std::uint64_t block_index_ = 0;
  Philox4x32::Counter buf_{};
  int half_used_ = 2;  // both 64-bit halves of buf_ consumed
  double pending_normal_ = 0.0;
  bool has_pending_normal_ = false;
};

}  // namespace bbm
