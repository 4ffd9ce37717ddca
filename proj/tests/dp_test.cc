// Copyright 2026 The fhedp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fhedp/dp.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fhedp/objective.hpp"
#include "fhedp/poly.hpp"
#include "fhedp/rng.hpp"

namespace fhedp {
namespace {

TEST(Sensitivity, ClosedForm) {
  EXPECT_DOUBLE_EQ(sensitivity_delta2(0.05, 4, 1.0), 4.2);
  EXPECT_THROW(sensitivity_delta2(-0.1, 4, 1.0), std::invalid_argument);
}

TEST(Sigma, ClosedForm) {
  EXPECT_NEAR(calibrate_sigma(4.2, 100, 1.0, 1e-5, 10000), 0.029831, 1e-5);
  EXPECT_THROW(calibrate_sigma(4.2, 0, 1.0, 1e-5, 10000), std::invalid_argument);
  EXPECT_THROW(calibrate_sigma(4.2, 100, 0.0, 1e-5, 10000), std::invalid_argument);
}

TEST(Sigma, ScalesAsSqrtTOverN) {
  double s = calibrate_sigma(4.2, 100, 1.0, 1e-5, 10000);
  EXPECT_NEAR(calibrate_sigma(4.2, 400, 1.0, 1e-5, 10000), 2 * s, 1e-15);
  EXPECT_NEAR(calibrate_sigma(4.2, 100, 1.0, 1e-5, 20000), s / 2, 1e-15);
}

TEST(CDelta, ClosedForm) {
  EXPECT_NEAR(c_delta(100, 1e-5), 5.868, 1e-3);
  EXPECT_NEAR(c_delta(1, 1.0), std::sqrt(2 * std::log(3.0)), 1e-15);
  EXPECT_NEAR(c_delta(1, 1.0), 1.482, 1e-3);
}

TEST(Budget, ReleaseCostsOneQuery) {
  EXPECT_EQ(privacy_budget_with_release(100, true), 101u);
  EXPECT_EQ(privacy_budget_with_release(100, false), 100u);
  EXPECT_THROW(privacy_budget_with_release(0, true), std::invalid_argument);
}

TEST(Clip, InsideUnchangedOutsideProjected) {
  Weights g{0.3, 0.4};
  EXPECT_EQ(clip(g, 1.0), g);
  Weights c = clip(Weights{3, 4}, 1.0);
  EXPECT_NEAR(norm(c), 1.0, 1e-15);
  EXPECT_NEAR(c[0] / c[1], 0.75, 1e-15);
  EXPECT_THROW(clip(g, 0.0), std::invalid_argument);
}

TEST(Gaussian, MomentsWithinThreeStandardErrors) {
  Rng rng(2024);
  const double sigma = 0.7;
  const std::size_t n = 1000000;
  Weights v = gaussian_vector(n, sigma, rng);
  double mean = 0, var = 0;
  for (double x : v) mean += x;
  mean /= n;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (n - 1);
  EXPECT_LT(std::abs(mean), 3 * sigma / std::sqrt(static_cast<double>(n)));
  EXPECT_LT(std::abs(var - sigma * sigma), 3 * sigma * sigma * std::sqrt(2.0 / n));
}

TEST(Gaussian, ZeroSigmaIsZero) {
  Rng rng(1);
  for (double x : gaussian_vector(16, 0.0, rng)) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(gaussian_vector(3, -1.0, rng), std::invalid_argument);
}

TEST(Gaussian, SeededStreamsRepeat) {
  Rng a(9), b(9);
  EXPECT_EQ(gaussian_vector(7, 1.0, a), gaussian_vector(7, 1.0, b));
}

TEST(Mechanism, ClassicalGaussianScale) {
  EXPECT_NEAR(gaussian_mechanism_sigma(2.0, 1.0, 1e-5), 2.0 * std::sqrt(2 * std::log(1.25e5)), 1e-12);
}

TEST(Params, Assembled) {
  DPParams p = make_dp_params(1.0, 1e-5, 10000, 100, 0.05, 4, true);
  EXPECT_DOUBLE_EQ(p.Delta2, 4.2);
  EXPECT_DOUBLE_EQ(p.sigma, calibrate_sigma(4.2, 101, 1.0, 1e-5, 10000));
  EXPECT_DOUBLE_EQ(p.c_delta, c_delta(100, 1e-5));
}

// Replace-one neighbours with every z inside the fitted interval.
TEST(Sensitivity, NeighbourOracle) {
  const std::size_t m = 4, N = 40;
  auto s = fit_minimax(Target::Sigmoid, {-8, 8}, 7);
  auto d = make_loss_deriv(s);
  const double bound = sensitivity_delta2(s.sup_error, m, phi_prime_max());
  Rng rng(77);
  auto u = [&] { return 2 * rng.uniform() - 1; };
  int violations = 0;
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    Dataset D(N, m);
    for (double& x : D.X) x = u();
    for (double& y : D.y) y = rng.uniform() < 0.5 ? 0.0 : 1.0;
    Dataset Dp = D;
    std::size_t i = rng.below(N);
    for (std::size_t j = 0; j < m; ++j) Dp.X[i * m + j] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Dp.y[i] = 1.0 - D.y[i];
    Weights w(m);
    for (double& v : w) v = 4.0 * u();
    // |w| <= 8 / sqrt(m) keeps |z| <= |w| |x| <= 8.
    double wn = norm(w);
    const double cap = 8.0 / std::sqrt(static_cast<double>(m));
    if (wn > cap) {
      for (double& v : w) v *= cap / wn;
    }
    Weights a = grad_g(w, D, d), b = grad_g(w, Dp, d);
    double diff = 0;
    for (std::size_t j = 0; j < m; ++j) diff += (a[j] - b[j]) * (a[j] - b[j]);
    double scaled = static_cast<double>(N) * std::sqrt(diff);
    worst = std::max(worst, scaled);
    violations += scaled > bound;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_GT(worst, 0.5 * bound);
}

}  // namespace
}  // namespace fhedp
