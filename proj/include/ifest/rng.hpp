#pragma once

#include <cstdint>

namespace ifest {

// splitmix64 finalizer; also used to derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Derive a child seed for stream (a, b) of a root seed. The rule is part of
// the output contract: CSVs produced from the same root seed are identical
// across platforms. Defined as two chained splitmix64 steps over
//   seed ^ GOLDEN*(a+1)   then   state ^ MIX*(b+1)
// with GOLDEN = 0x9E3779B97F4A7C15 and MIX = 0xBF58476D1CE4E5B9.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0);

// xoshiro256++ with splitmix64 state expansion. Bit-identical output on any
// conforming platform; never touches std:: distributions, whose streams
// differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform();

  // Standard normal via the Marsaglia polar method.
  double normal();

  // Gamma(shape, 1) for shape >= 1, Marsaglia-Tsang squeeze method;
  // shape < 1 handled by the boost gamma(shape+1) * U^{1/shape}.
  double gamma(double shape);

  double beta(double a, double b);

 private:
  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ifest
