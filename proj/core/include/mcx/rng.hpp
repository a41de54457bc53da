#pragma once

#include <array>
#include <cstdint>

namespace mcx {

/// Deterministic random stream: xoshiro256** seeded through splitmix64 from
/// (seed, stream_id). Draw sequences depend only on integer arithmetic and
/// libm log/sqrt/cos, so they are reproducible across runs and platforms
/// with IEEE doubles.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Raw 64-bit output.
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0, so log() is finite.
  double uniform();

  /// Standard normal via Box-Muller (two uniforms per draw, nothing cached).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Child stream derived deterministically from this stream's identity.
  /// Does not advance this stream.
  RngStream substream(std::uint64_t child_id) const;

  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t draws_ = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace mcx
