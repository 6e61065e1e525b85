#pragma once

#include <array>
#include <cstdint>

namespace rbldp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A block is a pure function of (key, counter), so any replica's stream can
/// be produced independently of how replicas are scheduled across threads.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(Key key) : key_(key) {}

  Counter operator()(Counter ctr) const noexcept;

 private:
  Key key_;
};

/// Standard normal stream for replica `stream` of a run seeded with `seed`.
///
/// Uniforms use 53 random bits each; normals come from the Box-Muller
/// transform so results do not depend on the standard library's distributions.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  double next();
  double next_uniform();

 private:
  void refill();

  Philox4x32 gen_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> words_{};
  int word_pos_ = 2;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace rbldp
