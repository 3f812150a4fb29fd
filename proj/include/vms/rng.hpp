#pragma once

#include <cstdint>

#include "vms/array.hpp"

namespace vms {

/// xorshift64* generator. Golden vectors depend on this exact sequence.
///
///   seeding:  s = splitmix64(seed); if s == 0 then s = 0x9E3779B97F4A7C15
///   step:     s ^= s >> 12;  s ^= s << 25;  s ^= s >> 27
///   output:   s * 0x2545F4914F6CDD1D  (mod 2^64)
///
/// uniform() maps the top 53 bits of an output to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi);
  // Box-Muller on two uniforms; no cached spare, so every call consumes two draws.
  double normal();
  std::size_t below(std::size_t n);

  Array uniform_array(Shape shape, double lo, double hi);
  Array normal_array(Shape shape, double stddev);

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace vms
