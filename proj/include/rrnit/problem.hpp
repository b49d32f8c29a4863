#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rrnit/convolution.hpp"
#include "rrnit/linear_operator.hpp"
#include "rrnit/pgm.hpp"
#include "rrnit/rng.hpp"
#include "rrnit/vector_ops.hpp"

namespace rrnit {

enum class GroundTruth { ones, ramp };

/// Everything needed to rebuild a benchmark instance deterministically;
/// serialized into run manifests so traces can be re-verified later.
struct ProblemSpec {
  std::string kind = "hilbert";  // "hilbert" or "deblur"
  // hilbert
  std::size_t n = 25;
  GroundTruth ground_truth = GroundTruth::ones;
  // deblur
  std::size_t image_rows = 32;
  std::size_t image_cols = 32;
  std::size_t tile = 8;       // checkerboard tile when no image file is given
  std::size_t psf_size = 9;
  double sigma = 1.5;
  Boundary boundary = Boundary::periodic;
  std::string image_path;     // optional PGM ground truth
  // noise
  double noise_level = 1e-5;  // relative to ||y||
  std::uint64_t seed = 1;
};

struct Problem {
  std::shared_ptr<const LinearOperator> op;
  Vector y_exact;
  Vector y_delta;
  double delta = 0.0;  // absolute perturbation norm, noise_level * ||y_exact||
  Vector x0;
  std::optional<Vector> x_star;
  ProblemSpec spec;
};

/// Perturb y with a Gaussian draw rescaled so the perturbation norm equals
/// relative_level * ||y|| exactly. Returns the noisy data and that norm.
inline std::pair<Vector, double> add_noise(const Vector& y, double relative_level,
                                           std::uint64_t seed) {
  if (!(relative_level >= 0.0)) {
    throw std::invalid_argument("add_noise: noise level must be nonnegative");
  }
  if (relative_level == 0.0) return {y, 0.0};
  const double ny = norm(y);
  if (ny == 0.0) {
    throw std::invalid_argument("add_noise: relative level undefined for zero data");
  }
  Vector e(y.size());
  NormalSampler sampler(seed);
  sampler.fill(e);
  const double ne = norm(e);
  if (ne == 0.0) throw std::runtime_error("add_noise: degenerate noise draw");
  const double delta = relative_level * ny;
  Vector out = y;
  axpy(delta / ne, e, out);
  return {std::move(out), delta};
}

/// Alternating 0/1 tiles, the stock deblurring ground truth.
inline Vector checkerboard(std::size_t rows, std::size_t cols, std::size_t tile) {
  if (rows == 0 || cols == 0 || tile == 0) {
    throw std::invalid_argument("checkerboard: dimensions and tile must be positive");
  }
  Vector img(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      img[r * cols + c] = static_cast<double>((r / tile + c / tile) % 2);
    }
  }
  return img;
}

/// Hilbert-matrix instance: x_star is all-ones or the ramp (i+1)/n, data is
/// H x_star plus rescaled noise, starting iterate is zero.
inline Problem make_hilbert_problem(std::size_t n, GroundTruth truth, double noise_level,
                                    std::uint64_t seed) {
  Problem prob;
  prob.spec.kind = "hilbert";
  prob.spec.n = n;
  prob.spec.ground_truth = truth;
  prob.spec.noise_level = noise_level;
  prob.spec.seed = seed;

  auto op = std::make_shared<DenseOperator>(hilbert_operator(n));
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = truth == GroundTruth::ones ? 1.0 : static_cast<double>(i + 1) / static_cast<double>(n);
  }
  prob.y_exact = op->apply(x);
  auto [yd, delta] = add_noise(prob.y_exact, noise_level, seed);
  prob.y_delta = std::move(yd);
  prob.delta = delta;
  prob.x0.assign(n, 0.0);
  prob.x_star = std::move(x);
  prob.op = std::move(op);
  return prob;
}

/// Deblurring instance over a supplied ground-truth image; data is the
/// blurred image plus rescaled noise, starting iterate is the noisy data.
inline Problem make_deblur_problem(Vector image, std::size_t rows, std::size_t cols,
                                   std::size_t psf_size, double sigma, double noise_level,
                                   std::uint64_t seed, Boundary boundary = Boundary::periodic) {
  if (image.size() != rows * cols) {
    throw std::invalid_argument("make_deblur_problem: image size mismatch");
  }
  Problem prob;
  prob.spec.kind = "deblur";
  prob.spec.image_rows = rows;
  prob.spec.image_cols = cols;
  prob.spec.psf_size = psf_size;
  prob.spec.sigma = sigma;
  prob.spec.boundary = boundary;
  prob.spec.noise_level = noise_level;
  prob.spec.seed = seed;

  auto op = std::make_shared<ConvolutionOperator>(gaussian_psf(psf_size, sigma), rows, cols,
                                                  boundary);
  prob.y_exact = op->apply(image);
  auto [yd, delta] = add_noise(prob.y_exact, noise_level, seed);
  prob.y_delta = std::move(yd);
  prob.delta = delta;
  prob.x0 = prob.y_delta;
  prob.x_star = std::move(image);
  prob.op = std::move(op);
  return prob;
}

/// Rebuild the instance a spec describes (the manifest replay path).
inline Problem build_problem(const ProblemSpec& spec) {
  if (spec.kind == "hilbert") {
    Problem prob = make_hilbert_problem(spec.n, spec.ground_truth, spec.noise_level, spec.seed);
    return prob;
  }
  if (spec.kind == "deblur") {
    Vector image;
    std::size_t rows = spec.image_rows;
    std::size_t cols = spec.image_cols;
    if (!spec.image_path.empty()) {
      GrayImage g = read_pgm(spec.image_path);
      rows = g.rows;
      cols = g.cols;
      image = std::move(g.pixels);
    } else {
      image = checkerboard(rows, cols, spec.tile);
    }
    Problem prob = make_deblur_problem(std::move(image), rows, cols, spec.psf_size, spec.sigma,
                                       spec.noise_level, spec.seed, spec.boundary);
    prob.spec.tile = spec.tile;
    prob.spec.image_path = spec.image_path;
    return prob;
  }
  throw std::invalid_argument("build_problem: unknown kind '" + spec.kind + "'");
}

}  // namespace rrnit
