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

#ifndef FHEDP_PARAMS_HPP_
#define FHEDP_PARAMS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fhedp/dp.hpp"
#include "fhedp/errors.hpp"
#include "fhedp/feasibility.hpp"
#include "fhedp/objective.hpp"
#include "fhedp/poly.hpp"
#include "fhedp/trainer.hpp"

namespace fhedp {

// Radius bounding every iterate of the no-clip algorithm:
// sqrt((1-kappa) Theta) + eta (phi' sqrt(m) + zeta_f + 2 lambda e_B sqrt(Theta)
//                              + (sqrt(m) + c_delta) sigma).
inline double compute_R(double Theta, double kappa, double eta, double phi_max, double zeta_f,
                        double lambda, double e_B, std::size_t m, double c_delta, double sigma) {
  const double sm = std::sqrt(static_cast<double>(m));
  return std::sqrt((1 - kappa) * Theta) +
         eta * (phi_max * sm + zeta_f + 2 * lambda * e_B * std::sqrt(Theta) + (sm + c_delta) * sigma);
}

inline double eta_upper_bound(double kappa, double Theta, double lambda, double M_P, double m_P,
                              double phi_max, double d, std::size_t m) {
  double den = lambda * (M_P + m_P) +
               (phi_max - d) * std::sqrt(static_cast<double>(m)) / (2 * std::sqrt((1 - kappa) * Theta));
  if (!(den > 0)) throw std::domain_error("eta_upper_bound: nonpositive denominator");
  double first = lambda > 0 ? kappa * Theta / lambda : std::numeric_limits<double>::infinity();
  return std::min(first, 1.0 / den);
}

struct KappaQuadratic {
  double alpha = 0.0;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double root = 0.0;
};

// Positive root of A x^2 + B x + C with
//   alpha = 2 eta lambda m_P, A = 2 alpha - alpha^2,
//   B = -2 eta ((1 - alpha)(d sqrt(m) + c_delta sigma) + zeta_f),
//   C = -eta^2 ((sqrt(m) phi' + (sqrt(m) + c_delta) sigma)^2 - zeta_f^2).
// The kappa constraint holds iff sqrt((1-kappa) Theta) >= root.
inline KappaQuadratic kappa_quadratic(double eta, double lambda, double m_P, double d,
                                      std::size_t m, double c_delta, double sigma, double zeta_f,
                                      double phi_max) {
  const double sm = std::sqrt(static_cast<double>(m));
  KappaQuadratic q;
  q.alpha = 2 * eta * lambda * m_P;
  if (!(q.alpha > 0 && q.alpha < 1)) throw std::domain_error("kappa_constraint_rhs: alpha outside (0,1)");
  q.A = 2 * q.alpha - q.alpha * q.alpha;
  q.B = -2 * eta * ((1 - q.alpha) * (d * sm + c_delta * sigma) + zeta_f);
  double s = sm * phi_max + (sm + c_delta) * sigma;
  q.C = -eta * eta * (s * s - zeta_f * zeta_f);
  double disc = q.B * q.B - 4 * q.A * q.C;
  if (disc < 0) throw std::domain_error("kappa_constraint_rhs: negative discriminant");
  q.root = (-q.B + std::sqrt(disc)) / (2 * q.A);
  return q;
}

inline double kappa_constraint_rhs(double eta, double lambda, double m_P, double d, std::size_t m,
                                   double c_delta, double sigma, double zeta_f, double phi_max) {
  return kappa_quadratic(eta, lambda, m_P, d, m, c_delta, sigma, zeta_f, phi_max).root;
}

// Learning-rate-free sufficient condition for the kappa constraint.
inline bool stronger_kappa_feasible(double Theta, double kappa, double lambda, double m_P,
                                    double d, std::size_t m, double c_delta, double sigma,
                                    double zeta_f, double phi_max) {
  const double sm = std::sqrt(static_cast<double>(m));
  double u = d * sm + c_delta * sigma + zeta_f;
  double s = sm * phi_max + (sm + c_delta) * sigma;
  double rhs = (2 * u + std::sqrt(8 * u * u + 4 * (s * s - zeta_f * zeta_f))) / (2 * lambda * m_P);
  return std::sqrt((1 - kappa) * Theta) >= rhs;
}

// Everything train --algo noclip needs, as produced by the selection loop.
struct ParamBundle {
  std::size_t m = 0;
  BarrierParams bp;
  TrainConfig cfg;
  DPParams dp;
  ApproxSpec sigmoid_fit;
  ApproxSpec barrier_fit;
  std::size_t q = 0;
  double E_f = 0.0;
  double d = 1.0;
  bool release_d = false;
  FeasibilityReport report;
  int rounds = 0;
};

// Recomputes every condition for a bundle from its primary quantities
// (Theta, lambda, kappa, P_kappa, eta, sigmoid fit, privacy inputs).
inline FeasibilityReport evaluate_feasibility(const ParamBundle& b) {
  FeasibilityReport r;
  const std::size_t m = b.m;
  const double sm = std::sqrt(static_cast<double>(m));
  const auto& bp = b.bp;
  const double kT = bp.kappa * bp.Theta;
  const double phi = phi_prime_max();
  r.e_f = sup_error(b.sigmoid_fit.poly, Target::Sigmoid, b.sigmoid_fit.interval);
  r.e_B = sup_error(bp.P_kappa, Target::Reciprocal, {kT, bp.Theta});
  const double zeta_f = r.e_f * sm;
  std::size_t n_eff = b.cfg.batch_n ? std::min(b.cfg.batch_n, b.dp.N) : b.dp.N;
  r.sigma = calibrate_sigma(sensitivity_delta2(r.e_f, m, phi),
                            privacy_budget_with_release(b.cfg.T, b.release_d), b.dp.epsilon,
                            b.dp.delta, n_eff);
  r.c_delta = c_delta(b.cfg.T, b.dp.delta);
  r.R = compute_R(bp.Theta, bp.kappa, b.cfg.eta, phi, zeta_f, bp.lambda, r.e_B, m, r.c_delta,
                  r.sigma);
  const Interval barrier_iv{std::min(bp.Theta - r.R * r.R, kT), kT};
  auto ex = extrema_on_interval(bp.P_kappa, barrier_iv);
  r.m_P = ex.min;
  r.M_P = ex.max;
  r.monotone_ok = is_monotone_decreasing(bp.P_kappa, barrier_iv);
  r.mP_nonneg_ok = r.m_P >= 0;
  try {
    r.eta_max = eta_upper_bound(bp.kappa, bp.Theta, bp.lambda, r.M_P, r.m_P, phi, b.d, m);
  } catch (const std::domain_error&) {
    r.eta_max = 0;
  }
  r.eta_ok = b.cfg.eta <= r.eta_max;
  r.kappa_lhs = std::sqrt((1 - bp.kappa) * bp.Theta);
  r.alpha_step = 2 * b.cfg.eta * bp.lambda * r.m_P;
  try {
    auto q = kappa_quadratic(b.cfg.eta, bp.lambda, r.m_P, b.d, m, r.c_delta, r.sigma, zeta_f, phi);
    r.A = q.A;
    r.B_q = q.B;
    r.C_q = q.C;
    r.kappa_rhs = q.root;
    r.kappa_ok = r.kappa_lhs >= q.root;
  } catch (const std::domain_error&) {
    r.kappa_rhs = std::numeric_limits<double>::infinity();
    r.kappa_ok = false;
  }
  // The sigmoid fit must cover every reachable z and meet its error target.
  const double zmax = sm * r.R;
  r.error_ok = r.e_f <= b.E_f && b.sigmoid_fit.interval.a <= -zmax &&
               b.sigmoid_fit.interval.b >= zmax;
  return r;
}

struct SelectionInput {
  std::size_t m = 0;
  double epsilon = 1.0;
  double delta = 1e-5;
  double E_f = 0.05;
  std::size_t N = 0;
  std::size_t T = 100;
  std::size_t batch_n = 0;
  bool release_d = false;
  double d = 1.0;
  FitMethod sigmoid_method = FitMethod::Minimax;
  std::size_t sigmoid_min_degree = 3;
  std::size_t sigmoid_max_degree = 15;
  std::size_t barrier_base_degree = 4;
  std::size_t max_rounds = 50;
  PKappaOptions pk;
};

namespace detail {

// e_B for the current (kappa, Theta): twice the error of the base
// least-squares fit on [kappa Theta, Theta], slightly inflated so the
// construction accepts that same fit.
inline double measured_e_B(double kappa, double Theta, std::size_t deg) {
  const double kT = kappa * Theta;
  ApproxSpec s = fit_least_squares(Target::Reciprocal, {kT / 2, Theta}, deg);
  return 2 * sup_error(s.poly, Target::Reciprocal, {kT, Theta}) * (1 + 1e-9);
}

}  // namespace detail

// Data-independent selection loop. Starts from eta = 2/m, Theta = m,
// lambda = 0.001, kappa = 0.01 and adjusts multiplicatively (Theta x0.8,
// lambda x2, kappa x0.5, eta x0.5) until every condition holds.
inline ParamBundle select_hyperparameters(const SelectionInput& in) {
  if (in.m == 0 || in.N == 0 || in.T == 0) throw std::invalid_argument("select_hyperparameters: m, N, T must be positive");
  const std::size_t m = in.m;
  const double sm = std::sqrt(static_cast<double>(m));
  const double phi = phi_prime_max();
  double eta = 2.0 / static_cast<double>(m);
  double Theta = static_cast<double>(m);
  double lambda = 0.001;
  double kappa = 0.01;
  std::size_t n_eff = in.batch_n ? std::min(in.batch_n, in.N) : in.N;
  const std::size_t T_budget = privacy_budget_with_release(in.T, in.release_d);
  const double sigma_E = calibrate_sigma(sensitivity_delta2(in.E_f, m, phi), T_budget, in.epsilon, in.delta, n_eff);
  const double cd = c_delta(in.T, in.delta);
  const double zeta_E = in.E_f * sm;
  std::string binding = "none";

  for (std::size_t round = 1; round <= in.max_rounds; ++round) {
    ParamBundle b;
    b.m = m;
    b.E_f = in.E_f;
    b.d = in.d;
    b.release_d = in.release_d;
    b.cfg.eta = eta;
    b.cfg.T = in.T;
    b.cfg.batch_n = in.batch_n;
    b.cfg.d = in.d;
    b.rounds = static_cast<int>(round);
    b.bp.Theta = Theta;
    b.bp.lambda = lambda;
    b.bp.kappa = kappa;

    // Barrier polynomial and the radius it must cover, iterated until the
    // radius implied by the measured e_B fits inside the construction radius.
    PKappaResult pk;
    double R = compute_R(Theta, kappa, eta, phi, zeta_E, lambda, 0.0, m, cd, sigma_E);
    double R_tilde = R;
    bool built = false;
    try {
      double eB_target = detail::measured_e_B(kappa, Theta, in.barrier_base_degree);
      for (int it = 0; it < 30; ++it) {
        pk = construct_P_kappa(kappa, Theta, R_tilde, eB_target, in.barrier_base_degree, in.pk);
        R = compute_R(Theta, kappa, eta, phi, zeta_E, lambda, pk.e_B_actual, m, cd, sigma_E);
        if (R <= R_tilde) {
          built = true;
          break;
        }
        R_tilde = R;
      }
    } catch (const InfeasibleError& e) {
      binding = e.what();
    }
    if (!built) {
      if (binding == "none") binding = "barrier radius fixed point";
      Theta *= 0.8;
      continue;
    }
    b.bp.P_kappa = pk.P;
    b.bp.e_B = pk.e_B_actual;
    b.q = pk.q;
    b.barrier_fit.target = Target::Reciprocal;
    b.barrier_fit.method = FitMethod::LeastSquares;
    b.barrier_fit.interval = {kappa * Theta, Theta};
    b.barrier_fit.degree = pk.P.degree();
    b.barrier_fit.poly = pk.P;
    b.barrier_fit.sup_error = pk.e_B_actual;

    // Sigmoid fit on the reachable range [-sqrt(m) R, sqrt(m) R].
    Interval siv{-sm * R, sm * R};
    bool fitted = false;
    for (std::size_t deg = in.sigmoid_min_degree; deg <= in.sigmoid_max_degree; ++deg) {
      ApproxSpec s;
      try {
        s = fit(Target::Sigmoid, siv, deg, in.sigmoid_method);
      } catch (const FitError&) {
        continue;
      }
      if (s.sup_error <= in.E_f) {
        b.sigmoid_fit = s;
        fitted = true;
        break;
      }
    }
    if (!fitted) {
      binding = "sigmoid error above E_f at the maximum degree";
      Theta *= 0.8;
      continue;
    }

    b.dp.epsilon = in.epsilon;
    b.dp.delta = in.delta;
    b.dp.N = in.N;
    b.report = evaluate_feasibility(b);
    const auto& r = b.report;
    b.bp.m_P = r.m_P;
    b.bp.M_P = r.M_P;
    b.dp.T = in.T;
    b.dp.Delta2 = sensitivity_delta2(r.e_f, m, phi);
    b.dp.sigma = r.sigma;
    b.dp.c_delta = r.c_delta;
    if (r.feasible()) return b;

    if (!r.monotone_ok || !r.mP_nonneg_ok) {
      binding = "barrier polynomial monotonicity / m_P >= 0";
      Theta *= 0.8;
    } else if (!r.eta_ok || r.alpha_step >= 1) {
      binding = "learning-rate bound";
      eta *= 0.5;
    } else if (!r.kappa_ok) {
      binding = "kappa constraint";
      lambda *= 2;
      if (round % 4 == 0) kappa *= 0.5;
    } else {
      binding = "sigmoid interval / error";
      Theta *= 0.8;
    }
  }
  throw InfeasibleError("select_hyperparameters: no feasible bundle within " +
                        std::to_string(in.max_rounds) + " rounds; binding constraint: " + binding);
}

}  // namespace fhedp

#endif  // FHEDP_PARAMS_HPP_
