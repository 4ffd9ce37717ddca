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

#ifndef FHEDP_OBJECTIVE_HPP_
#define FHEDP_OBJECTIVE_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fhedp/poly.hpp"
#include "fhedp/rng.hpp"

namespace fhedp {

using Weights = std::vector<double>;

// Row-major N x m design matrix with binary labels.
struct Dataset {
  std::size_t N = 0;
  std::size_t m = 0;
  std::vector<double> X;
  std::vector<double> y;

  Dataset() = default;
  Dataset(std::size_t n, std::size_t dim) : N(n), m(dim), X(n * dim, 0.0), y(n, 0.0) {}

  const double* row(std::size_t i) const { return X.data() + i * m; }
  double* row(std::size_t i) { return X.data() + i * m; }
  double x(std::size_t i, std::size_t j) const { return X[i * m + j]; }
};

// Polynomial replacements for the two branches of the loss derivative:
// p0 approximates sigma(z) (label 0) and p1 approximates sigma(z) - 1.
struct LossDerivApprox {
  Polynomial p0;
  Polynomial p1;
  Interval interval;
  double e_f = 0.0;
  bool shared = false;  // p1 == p0 - 1
};

inline LossDerivApprox make_loss_deriv(const ApproxSpec& sigmoid_fit) {
  LossDerivApprox d;
  d.p0 = sigmoid_fit.poly;
  d.p1 = sigmoid_fit.poly - Polynomial({1.0});
  d.interval = sigmoid_fit.interval;
  d.e_f = sigmoid_fit.sup_error;
  d.shared = true;
  return d;
}

struct BarrierParams {
  double Theta = 0.0;
  double lambda = 0.0;
  double kappa = 0.0;
  Polynomial P_kappa;
  double e_B = 0.0;
  double m_P = 0.0;
  double M_P = 0.0;
};

struct ConvergenceParams {
  double beta_g = 0.0;
  double mu = 0.0;
  double nu = std::numeric_limits<double>::quiet_NaN();
  double zeta = 0.0;
  double zeta_f = 0.0;
  double alpha_obj = std::numeric_limits<double>::quiet_NaN();
  double L = 0.0;
  double R = 0.0;
};

// Bound on |d/dz loss(z, y)| for the logistic loss.
inline double phi_prime_max() { return 1.0; }

inline double dot(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += a[j] * b[j];
  return s;
}

inline double norm2(const Weights& w) {
  double s = 0.0;
  for (double v : w) s += v * v;
  return s;
}

inline double norm(const Weights& w) { return std::sqrt(norm2(w)); }

inline void check_dims(const Weights& w, const Dataset& D) {
  if (w.size() != D.m) throw std::invalid_argument("weight dimension does not match dataset");
}

// Polynomial evaluation and gradient kernels used by every approximate
// training loop. The circuit simulator repeats exactly these operations, in
// this order, on tracked ciphertexts.

// x^k for k = 1..d from the minimum-depth product tree
// x^(2^a + r) = x^(2^a) * x^r, written to pw[1..d]; pw[0] is set to 1.
inline void power_tree(double x, std::size_t d, double* pw) {
  pw[0] = 1.0;
  if (d == 0) return;
  pw[1] = x;
  for (std::size_t k = 2; k <= d; ++k) {
    std::size_t hi = 1;
    while (hi * 2 <= k) hi *= 2;
    std::size_t r = k - hi;
    pw[k] = r == 0 ? pw[hi / 2] * pw[hi / 2] : pw[hi] * pw[r];
  }
}

inline std::vector<double> power_tree(double x, std::size_t d) {
  std::vector<double> pw(d + 1);
  power_tree(x, d, pw.data());
  return pw;
}

// (c_1 x + c_2 x^2 + ... + c_d x^d) + c_0, powers from power_tree.
inline double eval_power_tree(const Polynomial& p, double x) {
  constexpr std::size_t kStack = 64;
  const auto& c = p.coeffs();
  std::size_t d = c.size() - 1;
  if (d == 0) return c[0];
  double buf[kStack + 1];
  std::vector<double> heap;
  double* pw = buf;
  if (d > kStack) {
    heap.resize(d + 1);
    pw = heap.data();
  }
  power_tree(x, d, pw);
  double acc = c[1] * pw[1];
  for (std::size_t k = 2; k <= d; ++k) acc = acc + c[k] * pw[k];
  return acc + c[0];
}

// Loss-derivative factor of one record. With a shared fit it is the
// prediction error p0(z) - y; otherwise y p1(z) + (1 - y) p0(z).
inline double loss_deriv(const LossDerivApprox& d, double z, double y) {
  if (d.shared) return eval_power_tree(d.p0, z) - y;
  return y * eval_power_tree(d.p1, z) + (1.0 - y) * eval_power_tree(d.p0, z);
}

// Data term of the approximate gradient over the records in `batch`:
//   (1/n) sum_i loss_deriv(z_i, y_i) x_i,  z_i = <w, x_i>,
// summed left to right in batch order.
inline Weights approx_data_gradient(const Weights& w, const Dataset& D,
                                    const std::vector<std::size_t>& batch,
                                    const LossDerivApprox& d) {
  const std::size_t m = w.size();
  Weights acc(m, 0.0);
  bool first = true;
  for (std::size_t i : batch) {
    const double* x = D.row(i);
    double z = x[0] * w[0];
    for (std::size_t j = 1; j < m; ++j) z = z + x[j] * w[j];
    double coef = loss_deriv(d, z, D.y[i]);
    for (std::size_t j = 0; j < m; ++j) {
      double term = x[j] * coef;
      acc[j] = first ? term : acc[j] + term;
    }
    first = false;
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& a : acc) a = inv_n * a;
  return acc;
}

// Barrier term of the update: (2 lambda P_kappa(Theta - |w|^2)) w.
inline Weights barrier_term(const Weights& w, const BarrierParams& bp) {
  double sq = w[0] * w[0];
  for (std::size_t j = 1; j < w.size(); ++j) sq = sq + w[j] * w[j];
  double coef = (2.0 * bp.lambda) * eval_power_tree(bp.P_kappa, bp.Theta - sq);
  Weights out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = coef * w[j];
  return out;
}

// ---------------------------------------------------------------------------

inline double loss_f(const Weights& w, const Dataset& D) {
  check_dims(w, D);
  double s = 0.0;
  for (std::size_t i = 0; i < D.N; ++i) {
    double z = dot(D.row(i), w.data(), D.m);
    // -[y ln sigma(z) + (1-y) ln(1 - sigma(z))] = softplus(z) - y z
    double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    s += sp - D.y[i] * z;
  }
  return s / static_cast<double>(D.N);
}

// Per-record gradient (sigma(z) - y) x written into out.
inline void record_grad_f(const Weights& w, const Dataset& D, std::size_t i, double* out) {
  double z = dot(D.row(i), w.data(), D.m);
  double r = sigmoid(z) - D.y[i];
  const double* x = D.row(i);
  for (std::size_t j = 0; j < D.m; ++j) out[j] = r * x[j];
}

inline Weights grad_f(const Weights& w, const Dataset& D) {
  check_dims(w, D);
  Weights acc(D.m, 0.0), g(D.m);
  for (std::size_t i = 0; i < D.N; ++i) {
    record_grad_f(w, D, i, g.data());
    if (i == 0) {
      acc = g;
    } else {
      for (std::size_t j = 0; j < D.m; ++j) acc[j] = acc[j] + g[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(D.N);
  for (double& a : acc) a = inv_n * a;
  return acc;
}

inline std::vector<std::size_t> all_records(std::size_t N) {
  std::vector<std::size_t> idx(N);
  for (std::size_t i = 0; i < N; ++i) idx[i] = i;
  return idx;
}

inline Weights grad_g(const Weights& w, const Dataset& D, const LossDerivApprox& d) {
  check_dims(w, D);
  return approx_data_gradient(w, D, all_records(D.N), d);
}

inline Weights grad_g(const Weights& w, const Dataset& D, const Polynomial& p0,
                      const Polynomial& p1) {
  LossDerivApprox d;
  d.p0 = p0;
  d.p1 = p1;
  return grad_g(w, D, d);
}

// Scalar objective g whose gradient is grad_g: the mean of the
// antiderivatives of p0 / p1 (constant terms are irrelevant).
inline double loss_g(const Weights& w, const Dataset& D, const LossDerivApprox& d) {
  check_dims(w, D);
  Polynomial a0 = antidifferentiate(d.p0, 0.0), a1 = antidifferentiate(d.p1, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < D.N; ++i) {
    double z = dot(D.row(i), w.data(), D.m);
    s += D.y[i] * a1.eval(z) + (1.0 - D.y[i]) * a0.eval(z);
  }
  return s / static_cast<double>(D.N);
}

// F_kappa: 1/x on [kappa*Theta, Theta], and the shifted P_kappa below.
inline double F_kappa_extended(double x, const BarrierParams& bp, double R) {
  const double lo = bp.Theta - R * R, kT = bp.kappa * bp.Theta;
  if (x < lo || x > bp.Theta) throw std::domain_error("F_kappa_extended: x outside [Theta-R^2, Theta]");
  if (x >= kT) return 1.0 / x;
  return (1.0 / kT - bp.P_kappa.eval(kT)) + bp.P_kappa.eval(x);
}

// B_kappa: antiderivative of F_kappa with B(x) = ln x on [kappa*Theta, Theta].
inline double B_kappa(double x, const BarrierParams& bp) {
  const double kT = bp.kappa * bp.Theta;
  if (x >= kT) return std::log(x);
  Polynomial A = antidifferentiate(bp.P_kappa, 0.0);
  double shift = 1.0 / kT - bp.P_kappa.eval(kT);
  return std::log(kT) + shift * (x - kT) + A.eval(x) - A.eval(kT);
}

// f(w) - lambda B_kappa(Theta - |w|^2).
inline double loss_f_barrier(const Weights& w, const Dataset& D, const BarrierParams& bp) {
  return loss_f(w, D) - bp.lambda * B_kappa(bp.Theta - norm2(w), bp);
}

inline Weights grad_f_barrier(const Weights& w, const Dataset& D, const BarrierParams& bp,
                              double R) {
  check_dims(w, D);
  double n2 = norm2(w);
  if (n2 > R * R) throw std::domain_error("grad_f_barrier: |w| exceeds R");
  Weights g = grad_f(w, D);
  double c = 2.0 * bp.lambda * F_kappa_extended(bp.Theta - n2, bp, R);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] += c * w[j];
  return g;
}

inline Weights grad_g_barrier(const Weights& w, const Dataset& D, const BarrierParams& bp,
                              const LossDerivApprox& d) {
  Weights g = grad_g(w, D, d);
  Weights bar = barrier_term(w, bp);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] + bar[j];
  return g;
}

// Strong convexity, smoothness and gradient-distance bounds of the
// barrier-augmented objective.
inline ConvergenceParams curvature_report(const BarrierParams& bp, double R, double mu_f,
                                          double beta_f, double zeta_f) {
  const double kT = bp.kappa * bp.Theta, lo = bp.Theta - R * R;
  ConvergenceParams c;
  c.R = R;
  c.zeta_f = zeta_f;
  c.mu = mu_f + 2.0 * bp.lambda / bp.Theta;
  double shift = 1.0 / kT - bp.P_kappa.eval(kT);
  double left = 0.0;
  if (lo < kT) {
    double m_Fp = extrema_on_interval(differentiate(bp.P_kappa), {lo, kT}).min;
    left = -4.0 * bp.lambda * m_Fp + shift + bp.P_kappa.eval(lo);
  }
  double right = 4.0 * bp.lambda * (1.0 - bp.kappa) * bp.Theta / (kT * kT) + 1.0 / kT;
  c.beta_g = beta_f + std::max(left, right);
  c.zeta = zeta_f + 2.0 * bp.lambda * bp.e_B * R;
  return c;
}

// Monte-Carlo estimate of the expected-curvature constant around w_star:
// the smallest, over the probe points, of
//   E<grad f(w + chi), w + chi - w*> / E|w + chi - w*|^2,  chi ~ N(0, s^2 I).
inline double estimate_nu(const Dataset& D, const Weights& w_star, double noise_std,
                          const std::vector<Weights>& probes, std::size_t draws, Rng& rng) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& w : probes) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
      Weights v = w;
      for (double& x : v) x += noise_std * rng.normal();
      Weights g = grad_f(v, D);
      for (std::size_t j = 0; j < v.size(); ++j) {
        double diff = v[j] - w_star[j];
        num += g[j] * diff;
        den += diff * diff;
      }
    }
    if (den > 0) best = std::min(best, num / den);
  }
  return best;
}

}  // namespace fhedp

#endif  // FHEDP_OBJECTIVE_HPP_
