#pragma once

#include <array>
#include <cstdint>

namespace netfleet {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to fold (seed, domain) into a Philox key.
std::uint64_t splitmix64(std::uint64_t x);

/// Stream families. Each consumer gets its own key space so that, e.g., the
/// graph generator and the gradient oracle never share random bits.
enum class RngDomain : std::uint32_t {
  topology = 1,
  objective = 2,
  oracle = 3,
  partition = 4,
  dataset = 5,
};

/// A counter-based random stream addressed by (seed, domain, a, b, c).
///
/// The stream is a pure function of its address: two streams built from the
/// same address emit the same sequence regardless of which thread creates
/// them or in which order. The fourth counter word enumerates blocks.
class RngStream {
 public:
  RngStream(std::uint64_t seed, RngDomain domain, std::uint32_t a = 0, std::uint32_t b = 0,
            std::uint32_t c = 0);

  /// Oracle stream for worker `worker` at step index (s, k).
  static RngStream oracle(std::uint64_t seed, std::uint32_t worker, std::uint32_t s,
                          std::uint32_t k) {
    return RngStream(seed, RngDomain::oracle, worker, s, k);
  }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace netfleet
