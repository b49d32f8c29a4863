#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "rrnit/problem.hpp"
#include "rrnit/rng.hpp"
#include "rrnit/vector_ops.hpp"

namespace {

using rrnit::Vector;

TEST(VectorOps, ExactSmallCases) {
  const Vector a{1.0, 2.0, -3.0};
  const Vector b{4.0, -5.0, 6.0};
  EXPECT_DOUBLE_EQ(rrnit::dot(a, b), 4.0 - 10.0 - 18.0);
  EXPECT_DOUBLE_EQ(rrnit::norm(Vector{3.0, 4.0}), 5.0);
  EXPECT_DOUBLE_EQ(rrnit::distance(a, b), std::sqrt(9.0 + 49.0 + 81.0));

  Vector y = b;
  rrnit::axpy(2.0, a, y);
  EXPECT_EQ(y, (Vector{6.0, -1.0, 0.0}));

  EXPECT_EQ(rrnit::subtract(a, b), (Vector{-3.0, 7.0, -9.0}));
  EXPECT_EQ(rrnit::add(a, b), (Vector{5.0, -3.0, 3.0}));
  EXPECT_EQ(rrnit::scale(-2.0, a), (Vector{-2.0, -4.0, 6.0}));
}

TEST(VectorOps, SizeMismatchThrows) {
  const Vector a{1.0, 2.0};
  const Vector b{1.0};
  EXPECT_THROW(rrnit::dot(a, b), std::invalid_argument);
  EXPECT_THROW(rrnit::subtract(a, b), std::invalid_argument);
  EXPECT_THROW(rrnit::add(a, b), std::invalid_argument);
  EXPECT_THROW(rrnit::distance(a, b), std::invalid_argument);
  Vector y{0.0};
  EXPECT_THROW(rrnit::axpy(1.0, a, y), std::invalid_argument);
}

TEST(NormalSampler, DeterministicPerSeed) {
  rrnit::NormalSampler s1(42), s2(42), s3(43);
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const double a = s1();
    EXPECT_DOUBLE_EQ(a, s2());
    if (a != s3()) any_diff = true;
  }
  EXPECT_TRUE(any_diff);
}

TEST(NormalSampler, MomentsMatchStandardNormal) {
  rrnit::NormalSampler s(2024);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s();
    ASSERT_TRUE(std::isfinite(x));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(NormalSampler, FillCoversWholeVector) {
  rrnit::NormalSampler s(7);
  Vector v(17, 0.0);
  s.fill(v);
  for (double x : v) EXPECT_NE(x, 0.0);
}

TEST(AddNoise, PerturbationNormIsExact) {
  const Vector y{1.0, -2.0, 3.0, 0.5, 4.0};
  for (double level : {1e-2, 1e-5, 1e-8}) {
    const auto [y_delta, delta] = rrnit::add_noise(y, level, 11);
    EXPECT_DOUBLE_EQ(delta, level * rrnit::norm(y));
    const double achieved = rrnit::distance(y_delta, y);
    EXPECT_NEAR(achieved, delta, 1e-15 * std::max(1.0, delta));
  }
}

TEST(AddNoise, DeterministicPerSeedAndSeedSensitive) {
  const Vector y{1.0, 2.0, 3.0};
  const auto a = rrnit::add_noise(y, 1e-3, 5);
  const auto b = rrnit::add_noise(y, 1e-3, 5);
  const auto c = rrnit::add_noise(y, 1e-3, 6);
  EXPECT_EQ(a.first, b.first);
  EXPECT_NE(a.first, c.first);
}

TEST(AddNoise, ZeroLevelReturnsExactData) {
  const Vector y{1.0, 2.0, 3.0};
  const auto [y_delta, delta] = rrnit::add_noise(y, 0.0, 5);
  EXPECT_EQ(y_delta, y);
  EXPECT_EQ(delta, 0.0);
}

}  // namespace
