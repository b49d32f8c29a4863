#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "rrnit/vector_ops.hpp"

namespace rrnit {

/// Deterministic standard-normal stream: mt19937_64 words mapped to 53-bit
/// uniforms, paired through the Box-Muller transform. std::normal_distribution
/// is implementation-defined, which would make traces non-reproducible across
/// standard libraries, so the transform is spelled out here.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const double u1 = 1.0 - uniform53();
    const double u2 = uniform53();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  void fill(Vector& v) {
    for (double& x : v) x = (*this)();
  }

 private:
  double uniform53() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rrnit
