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

#ifndef FHEDP_DP_HPP_
#define FHEDP_DP_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fhedp/objective.hpp"
#include "fhedp/rng.hpp"

namespace fhedp {

struct DPParams {
  double epsilon = 1.0;
  double delta = 1e-5;
  std::size_t N = 0;
  std::size_t T = 0;
  double Delta2 = 0.0;
  double sigma = 0.0;
  double c_delta = 0.0;
  double clip_C = 1.0;
};

// N times the l2 sensitivity of the approximate gradient under replace-one.
inline double sensitivity_delta2(double e_f, std::size_t m, double phi_max) {
  if (e_f < 0 || phi_max < 0) throw std::invalid_argument("sensitivity_delta2: negative input");
  return 2.0 * (phi_max + e_f) * std::sqrt(static_cast<double>(m));
}

inline double calibrate_sigma(double Delta2, std::size_t T, double eps, double delta,
                              std::size_t N) {
  if (!(Delta2 >= 0 && T > 0 && eps > 0 && delta > 0 && N > 0)) {
    throw std::invalid_argument("calibrate_sigma: inputs must be positive");
  }
  return 2.0 * Delta2 * std::sqrt(static_cast<double>(T) * std::log(3.0 / delta)) /
         (eps * static_cast<double>(N));
}

inline double c_delta(std::size_t T, double delta) {
  if (!(T > 0 && delta > 0)) throw std::invalid_argument("c_delta: inputs must be positive");
  return std::sqrt(2.0 * std::log(3.0 * static_cast<double>(T) / delta));
}

// min{1, C/|g|} g; vectors already inside the ball are returned unchanged.
inline Weights clip(const Weights& g, double C) {
  if (!(C > 0)) throw std::invalid_argument("clip: C must be positive");
  double n = norm(g);
  if (n <= C) return g;
  double s = C / n;
  Weights out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out[j] = s * g[j];
  return out;
}

// i.i.d. N(0, sigma^2) entries drawn by Box-Muller from the run's generator.
inline Weights gaussian_vector(std::size_t m, double sigma, Rng& rng) {
  if (sigma < 0) throw std::invalid_argument("gaussian_vector: sigma must be nonnegative");
  Weights v(m, 0.0);
  for (double& x : v) x = sigma * rng.normal();
  if (sigma == 0) std::fill(v.begin(), v.end(), 0.0);
  return v;
}

// Releasing d = |grad f(0)|/sqrt(m) costs one extra gradient query.
inline std::size_t privacy_budget_with_release(std::size_t T, bool release_d) {
  if (T < 1) throw std::invalid_argument("privacy_budget_with_release: T must be >= 1");
  return release_d ? T + 1 : T;
}

// Classical Gaussian mechanism scale for a single release.
inline double gaussian_mechanism_sigma(double l2_sensitivity, double eps, double delta) {
  return l2_sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / eps;
}

inline DPParams make_dp_params(double eps, double delta, std::size_t N, std::size_t T,
                               double e_f, std::size_t m, bool release_d = false) {
  DPParams p;
  p.epsilon = eps;
  p.delta = delta;
  p.N = N;
  p.T = T;
  p.Delta2 = sensitivity_delta2(e_f, m, phi_prime_max());
  p.sigma = calibrate_sigma(p.Delta2, privacy_budget_with_release(T, release_d), eps, delta, N);
  p.c_delta = c_delta(T, delta);
  return p;
}

}  // namespace fhedp

#endif  // FHEDP_DP_HPP_
