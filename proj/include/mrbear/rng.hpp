#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mrbear {

// splitmix64 finalizer, used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

// Seedable xoshiro256** generator. All sampling helpers are implemented on
// top of the raw 64-bit output, so streams are bit-identical across
// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  // Independent stream derived from (seed, tag).
  static Rng substream(std::uint64_t seed, std::uint64_t tag) noexcept;

  std::uint64_t next() noexcept;
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;
  // Index drawn from a probability vector (need not be exactly normalized).
  std::size_t categorical(std::span<const double> probs) noexcept;
  // Draw from the flat Dirichlet distribution on the k-simplex.
  std::vector<double> dirichlet_flat(std::size_t k) noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace mrbear
