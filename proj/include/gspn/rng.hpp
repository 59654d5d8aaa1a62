#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gspn {

// Deterministic random source. The engine (std::mt19937_64) and every
// distribution here are fully specified, so a seed reproduces the same
// stream on any platform. Do not swap in std:: distributions: their
// output is implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform double in (0, 1], safe as a log() argument
  double uniform_pos() { return 1.0 - uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_below(std::uint64_t n);

  // standard normal, Box-Muller (two uniforms per call, no cached spare)
  double normal();

  // Gamma(shape, rate) via Marsaglia-Tsang squeeze; shape < 1 handled by
  // the Gamma(shape+1) boost x * u^(1/shape).
  double gamma(double shape, double rate);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_below(i)]);
    }
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace gspn
