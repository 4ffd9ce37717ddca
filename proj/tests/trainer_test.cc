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

#include "fhedp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fhedp/data.hpp"
#include "fhedp/dp.hpp"
#include "fhedp/errors.hpp"
#include "fhedp/poly.hpp"

namespace fhedp {
namespace {

FeasibilityReport PassingReport() {
  FeasibilityReport r;
  r.eta_ok = r.kappa_ok = r.monotone_ok = r.mP_nonneg_ok = r.error_ok = true;
  return r;
}

BarrierParams Barrier(double lambda) {
  BarrierParams bp;
  bp.Theta = 4.0;
  bp.lambda = lambda;
  bp.kappa = 0.5;
  bp.P_kappa = construct_P_kappa(0.5, 4.0, std::sqrt(4.5), 0.05, 4).P;
  return bp;
}

void ExpectSameRun(const RunTrace& a, const RunTrace& b) {
  ASSERT_EQ(a.w.size(), b.w.size());
  for (std::size_t j = 0; j < a.w.size(); ++j) EXPECT_EQ(a.w[j], b.w[j]) << "coordinate " << j;
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].loss, b.rows[k].loss);
    EXPECT_EQ(a.rows[k].w_norm, b.rows[k].w_norm);
  }
}

class TrainerTest : public ::testing::Test {
 protected:
  Dataset D = synthetic_logistic(3, 400, {1.5, -1.0, 0.5}, 21);
  LossDerivApprox d = make_loss_deriv(fit_minimax(Target::Sigmoid, {-6, 6}, 7));
  TrainConfig cfg = [] {
    TrainConfig c;
    c.eta = 0.5;
    c.T = 60;
    c.seed = 5;
    return c;
  }();
};

TEST(SampleBatch, DistinctAndInRange) {
  Rng rng(3);
  auto b = sample_batch(100, 30, rng);
  std::set<std::size_t> s(b.begin(), b.end());
  EXPECT_EQ(s.size(), 30u);
  EXPECT_LT(*s.rbegin(), 100u);
  EXPECT_EQ(sample_batch(10, 0, rng).size(), 10u);
  EXPECT_EQ(sample_batch(10, 20, rng).size(), 10u);
}

TEST_F(TrainerTest, TraceHasTPlusOneRows) {
  RunTrace tr = approx_gd(D, d, cfg);
  EXPECT_EQ(tr.rows.size(), cfg.T + 1);
  EXPECT_EQ(tr.iterations, cfg.T);
  EXPECT_LT(tr.rows.back().loss, tr.rows.front().loss);
}

TEST_F(TrainerTest, NoNoiseDpEqualsApproxGd) {
  DPParams dp;
  dp.sigma = 0.0;
  ExpectSameRun(dp_approx_gd(D, d, cfg, dp), approx_gd(D, d, cfg));
}

TEST_F(TrainerTest, NoBarrierNoNoiseNoClipEqualsApproxGd) {
  DPParams dp;
  dp.sigma = 0.0;
  FeasibilityReport ok = PassingReport();
  RunTrace a = noclip_dp_gd(D, Barrier(0.0), d, cfg, dp, &ok);
  RunTrace b = approx_gd(D, d, cfg);
  for (std::size_t j = 0; j < a.w.size(); ++j) EXPECT_EQ(a.w[j], b.w[j]);
}

TEST_F(TrainerTest, UnboundedClipNoNoiseEqualsExactGd) {
  DPParams dp;
  dp.sigma = 0.0;
  dp.clip_C = std::numeric_limits<double>::max();
  ExpectSameRun(clipped_dp_gd(D, nullptr, cfg, dp), exact_gd(D, cfg));
}

TEST_F(TrainerTest, SameSeedSameRun) {
  DPParams dp;
  dp.sigma = 0.05;
  TrainConfig c = cfg;
  c.batch_n = 50;
  FeasibilityReport ok = PassingReport();
  ExpectSameRun(noclip_dp_gd(D, Barrier(0.01), d, c, dp, &ok),
                noclip_dp_gd(D, Barrier(0.01), d, c, dp, &ok));
  TrainConfig c2 = c;
  c2.seed = 6;
  EXPECT_NE(noclip_dp_gd(D, Barrier(0.01), d, c, dp, &ok).w,
            noclip_dp_gd(D, Barrier(0.01), d, c2, dp, &ok).w);
}

TEST_F(TrainerTest, NoClipRefusesWithoutPassingReport) {
  DPParams dp;
  EXPECT_THROW(noclip_dp_gd(D, Barrier(0.01), d, cfg, dp, nullptr), InfeasibleError);
  FeasibilityReport bad = PassingReport();
  bad.kappa_ok = false;
  EXPECT_THROW(noclip_dp_gd(D, Barrier(0.01), d, cfg, dp, &bad), InfeasibleError);
}

TEST_F(TrainerTest, ClippingBoundsStepNorm) {
  DPParams dp;
  dp.sigma = 0.0;
  dp.clip_C = 0.1;
  RunTrace tr = clipped_dp_gd(D, nullptr, cfg, dp);
  for (double s : tr.step_norms) EXPECT_LE(s, cfg.eta * 0.1 * (1 + 1e-12));
}

TEST_F(TrainerTest, OutputPerturbationAddsOneNoiseVector) {
  TrainConfig c = cfg;
  RunTrace clean = output_perturbation_gd(D, c, 0.0);
  RunTrace noisy = output_perturbation_gd(D, c, 0.3);
  Rng rng(c.seed);
  Weights chi = gaussian_vector(D.m, 0.3, rng);
  for (std::size_t j = 0; j < D.m; ++j) EXPECT_EQ(noisy.w[j], clean.w[j] + chi[j]);
  double s = output_perturbation_sigma(1000, 4, 0.01, 1.0, 1e-5);
  EXPECT_NEAR(s, gaussian_mechanism_sigma(2 * 2.0 / (1000 * 0.01), 1.0, 1e-5), 1e-12);
}

TEST_F(TrainerTest, DivergenceIsReported) {
  TrainConfig c = cfg;
  c.eta = 1e9;
  c.T = 50;
  c.divergence_norm = 1e3;
  RunTrace tr = approx_gd(D, d, c);
  EXPECT_TRUE(tr.diverged);
  EXPECT_LT(tr.iterations, c.T);
  EXPECT_FALSE(tr.divergence_reason.empty());
}

// Nearly separable data pushes the unconstrained iterate out of a small
// fitted interval; the barrier keeps every z inside it.
TEST(Dichotomy, BarrierKeepsZInsideInterval) {
  Dataset D = synthetic_logistic(2, 500, {12.0, -12.0}, 8);
  LossDerivApprox d = make_loss_deriv(fit_minimax(Target::Sigmoid, {-5, 5}, 7));
  TrainConfig c;
  c.eta = 0.5;
  c.T = 2000;
  c.trace_every = 50;
  RunTrace off = approx_gd(D, d, c);
  EXPECT_TRUE(off.diverged || off.max_abs_z > 5.0);
  BarrierParams bp;
  bp.Theta = 4.0;
  bp.lambda = 0.05;
  bp.kappa = 0.5;
  bp.P_kappa = construct_P_kappa(0.5, 4.0, std::sqrt(4.5), 0.05, 4).P;
  DPParams dp;
  dp.sigma = 0.0;
  FeasibilityReport ok = PassingReport();
  RunTrace on = noclip_dp_gd(D, bp, d, c, dp, &ok);
  EXPECT_FALSE(on.diverged);
  EXPECT_LE(on.max_abs_z, 5.0);
}

TEST(EtaT, SmoothnessFromDerivativeExtrema) {
  Interval iv{-20, 20};
  auto mm = make_loss_deriv(fit_minimax(Target::Sigmoid, iv, 7));
  EtaT a = estimate_eta_T(mm, iv, 10, 0.1);
  EXPECT_DOUBLE_EQ(a.eta, 1.0 / a.beta_approx);
  auto e = extrema_on_interval(differentiate(mm.p0), iv);
  EXPECT_NEAR(a.beta_approx / 10, std::max(std::abs(e.min), std::abs(e.max)), 1e-12);
  EXPECT_EQ(a.T, static_cast<std::size_t>(std::ceil(2 * a.beta_approx * std::log(2.0) / 0.01)));
  EXPECT_THROW(estimate_eta_T(make_loss_deriv(fit_minimax(Target::Sigmoid, iv, 7)), iv, 0, 0.1),
               std::invalid_argument);
}

TEST(EtaT, StepsFromTableSmoothness) {
  // T rho^2 = 2 beta ln 2 with the table's beta = 19.1185 at rho = 0.1.
  double T = std::ceil(2 * 19.1185 * std::log(2.0) / 0.01);
  EXPECT_NEAR(T * 0.01, 26.50, 0.05 * 26.50);
}

TEST(EtaT, ReachesToleranceWithinT) {
  Dataset D(4, 2);
  D.X = {1, 0.5, 0.8, -0.2, -1, -0.4, -0.7, 0.3};
  D.y = {1, 1, 0, 0};
  Interval iv{-4, 4};
  auto d = make_loss_deriv(fit_minimax(Target::Sigmoid, iv, 13));
  EtaT e = estimate_eta_T(d, iv, 2, 0.1);
  TrainConfig c;
  c.eta = e.eta;
  c.T = e.T;
  RunTrace tr = approx_gd(D, d, c);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : tr.rows) best = std::min(best, r.grad_norm);
  EXPECT_LE(best, 0.1);
}

TEST(Oracle, SmallGradientAtOptimum) {
  Dataset D = synthetic_logistic(3, 2000, {1.0, 2.0, -1.0}, 2);
  OracleResult r = exact_gd_oracle(D, 0.0, 1e-8);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(norm(grad_f(r.w, D)), 1e-8);
}

// Smaller approximation error lands closer to the exact minimiser.
TEST(Convergence, DistanceShrinksWithDegree) {
  Dataset D = synthetic_logistic(3, 3000, {1.0, -0.8, 0.6}, 31);
  Weights w_star = exact_gd_oracle(D).w;
  Interval iv{-8, 8};
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t deg : {3u, 5u, 7u, 9u}) {
    auto d = make_loss_deriv(fit_minimax(Target::Sigmoid, iv, deg));
    TrainConfig c;
    c.eta = 2.0;
    c.T = 3000;
    c.record_trace = false;
    Weights w = approx_gd(D, d, c).w;
    double dist = 0;
    for (std::size_t j = 0; j < 3; ++j) dist += (w[j] - w_star[j]) * (w[j] - w_star[j]);
    EXPECT_LT(dist, prev) << "degree " << deg;
    prev = dist;
  }
}

}  // namespace
}  // namespace fhedp
