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

#ifndef FHEDP_TRAINER_HPP_
#define FHEDP_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fhedp/dp.hpp"
#include "fhedp/feasibility.hpp"
#include "fhedp/objective.hpp"
#include "fhedp/poly.hpp"
#include "fhedp/rng.hpp"

namespace fhedp {

struct TrainConfig {
  double eta = 0.1;
  std::size_t T = 100;
  double rho = 0.1;
  std::size_t batch_n = 0;  // 0 means full batch
  std::uint64_t seed = 0;
  std::optional<double> d;
  double divergence_norm = 1e6;
  bool record_trace = true;
  std::size_t trace_every = 1;  // full trace rows every k iterations (and the last)
  double lambda_ridge = 0.01;  // output perturbation only
};

struct TraceRow {
  std::size_t iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double w_norm = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  Weights w;
  bool diverged = false;
  std::string divergence_reason;
  std::size_t iterations = 0;  // updates actually applied
  double max_w_norm = 0.0;
  double max_abs_z = 0.0;
  std::vector<double> step_norms;  // |eta * (direction + noise)| per update
};

// n distinct indices drawn uniformly from [0, N) by a partial Fisher-Yates
// shuffle, in draw order.
inline std::vector<std::size_t> sample_batch(std::size_t N, std::size_t n, Rng& rng) {
  if (n == 0 || n >= N) return all_records(N);
  std::vector<std::size_t> idx = all_records(N);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.below(N - k));
    std::swap(idx[k], idx[j]);
  }
  idx.resize(n);
  return idx;
}

namespace detail {

inline void z_range(const Weights& w, const Dataset& D, double* zmin, double* zmax) {
  *zmin = std::numeric_limits<double>::infinity();
  *zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < D.N; ++i) {
    double z = dot(D.row(i), w.data(), D.m);
    *zmin = std::min(*zmin, z);
    *zmax = std::max(*zmax, z);
  }
}

// The weight norm is tracked every iteration; with tracing on, so is the
// range of z, and a full row is stored when `full` is set.
template <class GradFn>
void record(RunTrace& tr, std::size_t it, const Weights& w, const Dataset& D, GradFn&& grad,
            bool trace, bool full) {
  double wn = norm(w);
  tr.max_w_norm = std::max(tr.max_w_norm, wn);
  if (!trace) return;
  TraceRow r;
  r.iter = it;
  r.w_norm = wn;
  z_range(w, D, &r.z_min, &r.z_max);
  tr.max_abs_z = std::max({tr.max_abs_z, std::abs(r.z_min), std::abs(r.z_max)});
  if (!full) return;
  r.loss = loss_f(w, D);
  r.grad_norm = norm(grad(w));
  tr.rows.push_back(r);
}

inline bool check_divergence(RunTrace& tr, const Weights& w, double limit) {
  for (double v : w) {
    if (!std::isfinite(v)) {
      tr.diverged = true;
      tr.divergence_reason = "non-finite weight";
      return true;
    }
  }
  if (norm(w) > limit) {
    tr.diverged = true;
    tr.divergence_reason = "weight norm above divergence threshold";
    return true;
  }
  return false;
}

// Shared driver: `direction(w, rng)` returns the full step direction
// (gradient plus any noise) for the current iterate.
template <class DirFn, class GradFn>
RunTrace run_loop(const Dataset& D, const TrainConfig& cfg, DirFn&& direction, GradFn&& grad) {
  RunTrace tr;
  Rng rng(cfg.seed);
  Weights w(D.m, 0.0);
  const std::size_t every = std::max<std::size_t>(cfg.trace_every, 1);
  record(tr, 0, w, D, grad, cfg.record_trace, true);
  for (std::size_t i = 0; i < cfg.T; ++i) {
    Weights dir = direction(w, rng);
    double sn = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      double step = cfg.eta * dir[j];
      w[j] = w[j] - step;
      sn += step * step;
    }
    tr.step_norms.push_back(std::sqrt(sn));
    tr.iterations = i + 1;
    if (check_divergence(tr, w, cfg.divergence_norm)) break;
    record(tr, i + 1, w, D, grad, cfg.record_trace, (i + 1) % every == 0 || i + 1 == cfg.T);
  }
  tr.w = w;
  return tr;
}

}  // namespace detail

// Approximate GD: w <- w - eta grad_g(w), from w = 0.
inline RunTrace approx_gd(const Dataset& D, const LossDerivApprox& d, const TrainConfig& cfg) {
  auto grad = [&](const Weights& w) { return grad_g(w, D, d); };
  return detail::run_loop(
      D, cfg, [&](const Weights& w, Rng&) { return grad(w); }, grad);
}

inline RunTrace approx_gd(const Dataset& D, const Polynomial& p0, const Polynomial& p1,
                          const TrainConfig& cfg) {
  LossDerivApprox d;
  d.p0 = p0;
  d.p1 = p1;
  return approx_gd(D, d, cfg);
}

// Noisy approximate GD: w <- w - eta (grad_g(w) + chi), chi ~ N(0, sigma^2 I).
inline RunTrace dp_approx_gd(const Dataset& D, const LossDerivApprox& d, const TrainConfig& cfg,
                             const DPParams& dp) {
  auto grad = [&](const Weights& w) { return grad_g(w, D, d); };
  return detail::run_loop(
      D, cfg,
      [&](const Weights& w, Rng& rng) {
        Weights g = grad(w);
        Weights chi = gaussian_vector(D.m, dp.sigma, rng);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] + chi[j];
        return g;
      },
      grad);
}

// No-clip DP-GD, the barrier-augmented update
//   w <- w - eta ((1/n) sum_batch p~'(z, y) x + 2 lambda P_kappa(Theta - |w|^2) w + chi).
// Refuses to run without a passing feasibility report.
inline RunTrace noclip_dp_gd(const Dataset& D, const BarrierParams& bp, const LossDerivApprox& d,
                             const TrainConfig& cfg, const DPParams& dp,
                             const FeasibilityReport* report) {
  if (report == nullptr) throw InfeasibleError("noclip_dp_gd: no feasibility report supplied");
  if (!report->feasible()) throw InfeasibleError("noclip_dp_gd: feasibility report does not pass");
  auto grad = [&](const Weights& w) { return grad_g_barrier(w, D, bp, d); };
  return detail::run_loop(
      D, cfg,
      [&](const Weights& w, Rng& rng) {
        auto batch = sample_batch(D.N, cfg.batch_n, rng);
        Weights g = approx_data_gradient(w, D, batch, d);
        Weights bar = barrier_term(w, bp);
        Weights chi = gaussian_vector(D.m, dp.sigma, rng);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = (g[j] + bar[j]) + chi[j];
        return g;
      },
      grad);
}

// Noise scale for clipped DP-GD: per-record sensitivity 2C/n under
// replace-one, plugged into the same closed form as the no-clip algorithm.
inline double clipped_sigma(double C, std::size_t T, double eps, double delta, std::size_t n) {
  return calibrate_sigma(2.0 * C, T, eps, delta, n);
}

// Clipped DP-(S)GD: per-record gradients (exact sigmoid when `approx` is
// null) are clipped to norm C, averaged over the batch, then noised.
inline RunTrace clipped_dp_gd(const Dataset& D, const LossDerivApprox* approx,
                              const TrainConfig& cfg, const DPParams& dp) {
  auto full_grad = [&](const Weights& w) { return approx ? grad_g(w, D, *approx) : grad_f(w, D); };
  return detail::run_loop(
      D, cfg,
      [&](const Weights& w, Rng& rng) {
        auto batch = sample_batch(D.N, cfg.batch_n, rng);
        Weights acc(D.m, 0.0), g(D.m);
        bool first = true;
        for (std::size_t i : batch) {
          if (approx) {
            const double* x = D.row(i);
            double z = x[0] * w[0];
            for (std::size_t j = 1; j < D.m; ++j) z = z + x[j] * w[j];
            double coef = loss_deriv(*approx, z, D.y[i]);
            for (std::size_t j = 0; j < D.m; ++j) g[j] = x[j] * coef;
          } else {
            record_grad_f(w, D, i, g.data());
          }
          Weights c = clip(g, dp.clip_C);
          for (std::size_t j = 0; j < D.m; ++j) acc[j] = first ? c[j] : acc[j] + c[j];
          first = false;
        }
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        for (double& a : acc) a = inv_n * a;
        Weights chi = gaussian_vector(D.m, dp.sigma, rng);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = acc[j] + chi[j];
        return acc;
      },
      full_grad);
}

// Plain gradient descent on f (plus an optional ridge term) for cfg.T steps.
inline RunTrace exact_gd(const Dataset& D, const TrainConfig& cfg, double ridge = 0.0) {
  auto grad = [&](const Weights& w) {
    Weights g = grad_f(w, D);
    if (ridge != 0.0) {
      for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] + ridge * w[j];
    }
    return g;
  };
  return detail::run_loop(
      D, cfg, [&](const Weights& w, Rng&) { return grad(w); }, grad);
}

// Smoothness of the mean logistic loss: lambda_max((1/N) X^T X) / 4.
inline double logistic_smoothness(const Dataset& D) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(D.m, D.m);
  for (std::size_t i = 0; i < D.N; ++i) {
    Eigen::Map<const Eigen::VectorXd> x(D.row(i), D.m);
    G.noalias() += x * x.transpose();
  }
  G /= static_cast<double>(D.N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / 4.0;
}

struct OracleResult {
  Weights w;
  bool converged = false;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
};

// Reference minimiser of f + (ridge/2)|w|^2 by gradient descent with step
// 1/beta, stopped at |grad| <= tol or after max_iter steps (flagged).
inline OracleResult exact_gd_oracle(const Dataset& D, double ridge = 0.0, double tol = 1e-8,
                                    std::size_t max_iter = 200000) {
  const double eta = 1.0 / (logistic_smoothness(D) + ridge);
  OracleResult r;
  r.w.assign(D.m, 0.0);
  Weights best = r.w;
  double best_norm = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0;; ++it) {
    Weights g = grad_f(r.w, D);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += ridge * r.w[j];
    double gn = norm(g);
    if (gn < best_norm) {
      best_norm = gn;
      best = r.w;
    }
    if (gn <= tol) {
      r.converged = true;
      r.iterations = it;
      r.grad_norm = gn;
      return r;
    }
    if (it == max_iter) break;
    for (std::size_t j = 0; j < g.size(); ++j) r.w[j] -= eta * g[j];
  }
  r.w = best;
  r.grad_norm = best_norm;
  r.iterations = max_iter;
  return r;
}

// Output perturbation: sensitivity 2L/(N lambda_ridge) of the ridge
// minimiser with L = sqrt(m) for records in [-1,1]^m, released once
// through the Gaussian mechanism.
inline double output_perturbation_sigma(std::size_t N, std::size_t m, double lambda_ridge,
                                        double eps, double delta) {
  double L = phi_prime_max() * std::sqrt(static_cast<double>(m));
  return gaussian_mechanism_sigma(2.0 * L / (static_cast<double>(N) * lambda_ridge), eps, delta);
}

// Ridge-regularised GD for cfg.T steps with step min(eta, 1/beta), then one
// Gaussian vector of scale sigma_out added to the final weights.
inline RunTrace output_perturbation_gd(const Dataset& D, const TrainConfig& cfg,
                                       double sigma_out) {
  TrainConfig c = cfg;
  c.eta = std::min(cfg.eta, 1.0 / (logistic_smoothness(D) + cfg.lambda_ridge));
  RunTrace tr = exact_gd(D, c, cfg.lambda_ridge);
  Rng rng(cfg.seed);
  Weights chi = gaussian_vector(D.m, sigma_out, rng);
  for (std::size_t j = 0; j < chi.size(); ++j) tr.w[j] = tr.w[j] + chi[j];
  return tr;
}

struct EtaT {
  double beta_approx = 0.0;
  double eta = 0.0;
  std::size_t T = 0;
};

// beta_approx = m * max |d/dz p~'(z)| over the interval, eta = 1/beta_approx
// and T = ceil(2 beta_approx (g(0) - L) / rho^2) with g(0) = ln 2, L = 0.
// Steps for gradient descent at step 1/beta to reach |grad| <= rho from a
// start at most ln 2 above the minimum.
inline std::size_t steps_for_smoothness(double beta, double rho) {
  if (!(beta > 0) || !(rho > 0)) throw std::invalid_argument("steps_for_smoothness: need beta, rho > 0");
  return static_cast<std::size_t>(std::ceil(2.0 * beta * std::log(2.0) / (rho * rho)));
}

inline EtaT estimate_eta_T(const LossDerivApprox& d, Interval iv, std::size_t m, double rho) {
  auto e0 = extrema_on_interval(differentiate(d.p0), iv);
  auto e1 = extrema_on_interval(differentiate(d.p1), iv);
  double mx = std::max({std::abs(e0.min), std::abs(e0.max), std::abs(e1.min), std::abs(e1.max)});
  EtaT out;
  out.beta_approx = mx * static_cast<double>(m);
  if (!(out.beta_approx > 0)) throw std::invalid_argument("estimate_eta_T: nonpositive beta_approx");
  out.eta = 1.0 / out.beta_approx;
  out.T = steps_for_smoothness(out.beta_approx, rho);
  return out;
}

}  // namespace fhedp

#endif  // FHEDP_TRAINER_HPP_
