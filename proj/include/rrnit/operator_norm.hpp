#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

#include "rrnit/linear_operator.hpp"
#include "rrnit/rng.hpp"
#include "rrnit/vector_ops.hpp"

namespace rrnit {

/// Power iteration on A*A; returns an estimate of the spectral norm of A.
/// Deterministic for a fixed seed. The estimate approaches the true norm from
/// below as iterations grow.
inline double operator_norm_estimate(const LinearOperator& op, std::size_t iterations = 100,
                                     std::uint64_t seed = 12345) {
  NormalSampler sampler(seed);
  Vector v(op.domain_dim());
  sampler.fill(v);
  double nv = norm(v);
  if (nv == 0.0) {
    v.assign(op.domain_dim(), 1.0);
    nv = norm(v);
  }
  for (double& x : v) x /= nv;

  double sigma = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Vector w = op.apply_adjoint(op.apply(v));
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    sigma = std::sqrt(nw);
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / nw;
  }
  return sigma;
}

}  // namespace rrnit
