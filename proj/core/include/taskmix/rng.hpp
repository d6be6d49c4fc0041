#pragma once

#include <cstdint>
#include <random>

namespace taskmix {

/// Deterministic random number generator with portable output.
///
/// All variate transforms are written out explicitly (instead of using
/// std::*_distribution) so that a given seed produces the same stream on
/// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw via the Box-Muller transform.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // in (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Beta(1, alpha) draw by inverse CDF: 1 - (1-u)^(1/alpha).
  double beta_one(double alpha) {
    return 1.0 - std::pow(1.0 - uniform(), 1.0 / alpha);
  }

  /// Beta(alpha, 1) draw by inverse CDF: u^(1/alpha).
  double beta_one_rev(double alpha) {
    return std::pow(uniform(), 1.0 / alpha);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace taskmix
