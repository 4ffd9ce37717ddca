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

#ifndef FHEDP_POLY_HPP_
#define FHEDP_POLY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fhedp/errors.hpp"

namespace fhedp {

// Dense polynomial in the monomial basis, coeffs[i] multiplies x^i.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }

  const std::vector<double>& coeffs() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }
  double operator[](std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : 0.0; }

  std::size_t degree() const {
    for (std::size_t i = coeffs_.size(); i-- > 0;) {
      if (coeffs_[i] != 0.0) return i;
    }
    return 0;
  }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    double acc = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
    return acc;
  }

  bool operator==(const Polynomial& o) const {
    std::size_t n = std::max(size(), o.size());
    for (std::size_t i = 0; i < n; ++i) {
      if ((*this)[i] != o[i]) return false;
    }
    return true;
  }

 private:
  std::vector<double> coeffs_;
};

inline double eval(const Polynomial& p, double x) { return p.eval(x); }

inline Polynomial differentiate(const Polynomial& p) {
  const auto& c = p.coeffs();
  if (c.size() <= 1) return Polynomial({0.0});
  std::vector<double> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
  return Polynomial(std::move(d));
}

inline Polynomial antidifferentiate(const Polynomial& p, double c0) {
  const auto& c = p.coeffs();
  std::vector<double> a(c.size() + 1);
  a[0] = c0;
  for (std::size_t i = 0; i < c.size(); ++i) a[i + 1] = c[i] / static_cast<double>(i + 1);
  return Polynomial(std::move(a));
}

inline Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
  return Polynomial(std::move(c));
}

inline Polynomial operator-(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] - b[i];
  return Polynomial(std::move(c));
}

inline Polynomial operator*(double s, const Polynomial& p) {
  std::vector<double> c = p.coeffs();
  for (double& v : c) v *= s;
  return Polynomial(std::move(c));
}

inline Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  }
  return Polynomial(std::move(c));
}

// (u + v x)^k expanded in the monomial basis.
inline Polynomial linear_power(double u, double v, std::size_t k) {
  Polynomial r({1.0});
  Polynomial lin({u, v});
  for (std::size_t i = 0; i < k; ++i) r = r * lin;
  return r;
}

// p(u + v x) expanded in the monomial basis.
inline Polynomial compose_linear(const Polynomial& p, double u, double v) {
  Polynomial r({0.0});
  const auto& c = p.coeffs();
  for (std::size_t i = c.size(); i-- > 0;) r = r * Polynomial({u, v}) + Polynomial({c[i]});
  return r;
}

enum class Target { Sigmoid, Reciprocal, Sqrt, InvSqrt };
enum class FitMethod { Minimax, LeastSquares, Taylor };

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline std::function<double(double)> target_function(Target t) {
  switch (t) {
    case Target::Sigmoid: return [](double x) { return sigmoid(x); };
    case Target::Reciprocal: return [](double x) { return 1.0 / x; };
    case Target::Sqrt: return [](double x) { return std::sqrt(x); };
    case Target::InvSqrt: return [](double x) { return 1.0 / std::sqrt(x); };
  }
  throw std::invalid_argument("unknown target id");
}

inline std::string target_name(Target t) {
  switch (t) {
    case Target::Sigmoid: return "sigmoid";
    case Target::Reciprocal: return "reciprocal";
    case Target::Sqrt: return "sqrt";
    case Target::InvSqrt: return "invsqrt";
  }
  throw std::invalid_argument("unknown target id");
}

inline Target target_from_name(const std::string& s) {
  if (s == "sigmoid") return Target::Sigmoid;
  if (s == "reciprocal") return Target::Reciprocal;
  if (s == "sqrt") return Target::Sqrt;
  if (s == "invsqrt") return Target::InvSqrt;
  throw std::invalid_argument("unknown target id: " + s);
}

inline std::string method_name(FitMethod m) {
  switch (m) {
    case FitMethod::Minimax: return "minimax";
    case FitMethod::LeastSquares: return "least_squares";
    case FitMethod::Taylor: return "taylor";
  }
  return "";
}

inline FitMethod method_from_name(const std::string& s) {
  if (s == "minimax" || s == "mm") return FitMethod::Minimax;
  if (s == "least_squares" || s == "ls") return FitMethod::LeastSquares;
  if (s == "taylor") return FitMethod::Taylor;
  throw std::invalid_argument("unknown fit method: " + s);
}

struct Interval {
  double a = 0.0;
  double b = 0.0;
  double width() const { return b - a; }
};

struct ApproxSpec {
  Target target = Target::Sigmoid;
  Interval interval;
  std::size_t degree = 0;
  FitMethod method = FitMethod::Minimax;
  double sup_error = 0.0;
  Polynomial poly;
  int rounds = 0;  // exchange rounds used by Remez, 0 otherwise
};

namespace detail {

template <class F>
double golden_max(F&& g, double lo, double hi, double* argmax) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = g(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = g(x2);
    }
  }
  if (f1 >= f2) {
    *argmax = x1;
    return f1;
  }
  *argmax = x2;
  return f2;
}

inline std::vector<double> uniform_grid(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g[n - 1] = b;
  return g;
}

// Monomial coefficients (in t) of T_0..T_n.
inline std::vector<std::vector<double>> chebyshev_monomials(std::size_t n) {
  std::vector<std::vector<double>> T(n + 1, std::vector<double>(n + 1, 0.0));
  T[0][0] = 1.0;
  if (n >= 1) T[1][1] = 1.0;
  for (std::size_t k = 2; k <= n; ++k) {
    for (std::size_t i = 0; i <= n; ++i) {
      double v = -T[k - 2][i];
      if (i >= 1) v += 2.0 * T[k - 1][i - 1];
      T[k][i] = v;
    }
  }
  return T;
}

// Converts sum a_k T_k((x - c) / h) into monomial coefficients in x.
inline Polynomial chebyshev_to_monomial(const std::vector<double>& a, double c, double h) {
  std::size_t n = a.size() - 1;
  auto T = chebyshev_monomials(n);
  std::vector<double> in_t(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i <= n; ++i) in_t[i] += a[k] * T[k][i];
  }
  return compose_linear(Polynomial(in_t), -c / h, 1.0 / h);
}

inline void chebyshev_row(double t, std::size_t n, double* out) {
  out[0] = 1.0;
  if (n >= 1) out[1] = t;
  for (std::size_t k = 2; k <= n; ++k) out[k] = 2.0 * t * out[k - 1] - out[k - 2];
}

}  // namespace detail

constexpr std::size_t kDefaultSupGrid = 8192;

// Maximum of |p(x) - f(x)| on [a, b] from a uniform grid refined by a
// golden-section search around the grid maximum.
inline double sup_error(const Polynomial& p, const std::function<double(double)>& f,
                        Interval iv, std::size_t grid = kDefaultSupGrid) {
  if (grid < 1001) throw std::invalid_argument("sup_error: grid must be at least 1001");
  auto err = [&](double x) { return std::abs(p.eval(x) - f(x)); };
  auto xs = detail::uniform_grid(iv.a, iv.b, grid);
  std::size_t best = 0;
  double bv = -1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = err(xs[i]);
    if (e > bv) {
      bv = e;
      best = i;
    }
  }
  double lo = xs[best == 0 ? 0 : best - 1];
  double hi = xs[best + 1 < xs.size() ? best + 1 : best];
  double arg = 0.0;
  double polished = detail::golden_max(err, lo, hi, &arg);
  return std::max(bv, polished);
}

inline double sup_error(const Polynomial& p, Target t, Interval iv,
                        std::size_t grid = kDefaultSupGrid) {
  return sup_error(p, target_function(t), iv, grid);
}

struct RemezOptions {
  std::size_t max_rounds = 100;
  std::size_t grid = 20001;
  double tolerance = 1e-9;  // relative gap between sup error and levelled error
};

// Best uniform approximation by Remez exchange. The reference starts at the
// first degree+2 extrema of the Chebyshev polynomial of degree degree+2, and
// each round swaps in the single point of largest error (leftmost on ties).
inline ApproxSpec fit_minimax(const std::function<double(double)>& f, Interval iv,
                              std::size_t degree, const RemezOptions& opt = {}) {
  if (degree < 1) throw std::invalid_argument("fit_minimax: degree must be >= 1");
  if (!(iv.a < iv.b)) throw std::invalid_argument("fit_minimax: empty interval");
  const std::size_t n = degree;
  const double c = 0.5 * (iv.a + iv.b), h = 0.5 * (iv.b - iv.a);
  std::vector<double> ref(n + 2);
  for (std::size_t k = 0; k < n + 2; ++k) {
    ref[k] = c - h * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n + 2));
  }
  auto xs = detail::uniform_grid(iv.a, iv.b, opt.grid);

  std::vector<double> a(n + 1);
  double E = 0.0;
  Polynomial p;
  for (std::size_t round = 1; round <= opt.max_rounds; ++round) {
    Eigen::MatrixXd A(n + 2, n + 2);
    Eigen::VectorXd rhs(n + 2);
    std::vector<double> row(n + 1);
    for (std::size_t k = 0; k < n + 2; ++k) {
      detail::chebyshev_row((ref[k] - c) / h, n, row.data());
      for (std::size_t j = 0; j <= n; ++j) A(k, j) = row[j];
      A(k, n + 1) = (k % 2 == 0) ? 1.0 : -1.0;
      rhs(k) = f(ref[k]);
    }
    Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
    if (!sol.allFinite()) throw FitError("fit_minimax: singular reference system");
    for (std::size_t j = 0; j <= n; ++j) a[j] = sol(j);
    E = sol(n + 1);
    auto approx = [&](double x) {
      std::vector<double> r(n + 1);
      detail::chebyshev_row((x - c) / h, n, r.data());
      double s = 0.0;
      for (std::size_t j = 0; j <= n; ++j) s += a[j] * r[j];
      return s;
    };
    auto err = [&](double x) { return f(x) - approx(x); };

    // Global maximum of |err|, leftmost on ties, then polished.
    std::size_t best = 0;
    double bv = -1.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double v = std::abs(err(xs[i]));
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    double xstar = xs[best];
    {
      double s = err(xstar) >= 0 ? 1.0 : -1.0;
      double lo = xs[best == 0 ? 0 : best - 1], hi = xs[best + 1 < xs.size() ? best + 1 : best];
      double arg = xstar;
      double v = detail::golden_max([&](double x) { return s * err(x); }, lo, hi, &arg);
      if (v > bv) {
        bv = v;
        xstar = arg;
      }
    }
    double absE = std::abs(E);
    if (bv - absE <= opt.tolerance * std::max(absE, 1e-300) || bv <= 1e-15) {
      p = detail::chebyshev_to_monomial(a, c, h);
      ApproxSpec out;
      out.interval = iv;
      out.degree = n;
      out.method = FitMethod::Minimax;
      out.poly = p;
      out.sup_error = sup_error(p, f, iv);
      out.rounds = static_cast<int>(round);
      return out;
    }

    double es = err(xstar);
    auto same = [&](std::size_t k) { return (err(ref[k]) >= 0) == (es >= 0); };
    if (xstar < ref.front()) {
      if (same(0)) {
        ref[0] = xstar;
      } else {
        ref.pop_back();
        ref.insert(ref.begin(), xstar);
      }
    } else if (xstar > ref.back()) {
      if (same(n + 1)) {
        ref[n + 1] = xstar;
      } else {
        ref.erase(ref.begin());
        ref.push_back(xstar);
      }
    } else {
      std::size_t k = 0;
      while (k + 1 < ref.size() && ref[k + 1] < xstar) ++k;
      if (same(k)) {
        ref[k] = xstar;
      } else {
        ref[k + 1] = xstar;
      }
    }
  }
  throw FitError("fit_minimax: Remez exchange did not converge within " +
                 std::to_string(opt.max_rounds) + " rounds");
}

inline ApproxSpec fit_minimax(Target t, Interval iv, std::size_t degree,
                              const RemezOptions& opt = {}) {
  ApproxSpec s = fit_minimax(target_function(t), iv, degree, opt);
  s.target = t;
  return s;
}

constexpr std::size_t kDefaultLsGrid = 4001;

// Discrete least squares on a uniform grid, solved through the normal
// equations of the Chebyshev basis mapped to the interval.
inline ApproxSpec fit_least_squares(const std::function<double(double)>& f, Interval iv,
                                    std::size_t degree, std::size_t grid = kDefaultLsGrid) {
  if (grid < 10 * degree) throw std::invalid_argument("fit_least_squares: grid < 10*degree");
  if (!(iv.a < iv.b)) throw std::invalid_argument("fit_least_squares: empty interval");
  const std::size_t n = degree;
  const double c = 0.5 * (iv.a + iv.b), h = 0.5 * (iv.b - iv.a);
  auto xs = detail::uniform_grid(iv.a, iv.b, grid);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n + 1);
  std::vector<double> row(n + 1);
  for (double x : xs) {
    detail::chebyshev_row((x - c) / h, n, row.data());
    double fx = f(x);
    for (std::size_t i = 0; i <= n; ++i) {
      r(i) += row[i] * fx;
      for (std::size_t j = 0; j <= n; ++j) G(i, j) += row[i] * row[j];
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw FitError("fit_least_squares: singular normal system");
  Eigen::VectorXd sol = llt.solve(r);
  if (!sol.allFinite()) throw FitError("fit_least_squares: singular normal system");
  std::vector<double> a(sol.data(), sol.data() + sol.size());
  ApproxSpec out;
  out.interval = iv;
  out.degree = n;
  out.method = FitMethod::LeastSquares;
  out.poly = detail::chebyshev_to_monomial(a, c, h);
  out.sup_error = sup_error(out.poly, f, iv);
  return out;
}

inline ApproxSpec fit_least_squares(Target t, Interval iv, std::size_t degree,
                                    std::size_t grid = kDefaultLsGrid) {
  ApproxSpec s = fit_least_squares(target_function(t), iv, degree, grid);
  s.target = t;
  return s;
}

// Taylor expansion of 1/x about `center`, which is strictly decreasing on
// (-inf, center] for odd degree.
inline ApproxSpec fit_taylor_reciprocal(Interval iv, std::size_t degree, double center) {
  if (center <= 0) throw std::invalid_argument("fit_taylor_reciprocal: center must be positive");
  Polynomial acc({0.0});
  for (std::size_t k = 0; k <= degree; ++k) {
    double coef = ((k % 2 == 0) ? 1.0 : -1.0) / std::pow(center, static_cast<double>(k + 1));
    acc = acc + coef * linear_power(-center, 1.0, k);
  }
  ApproxSpec out;
  out.target = Target::Reciprocal;
  out.interval = iv;
  out.degree = degree;
  out.method = FitMethod::Taylor;
  out.poly = acc;
  out.sup_error = sup_error(acc, Target::Reciprocal, iv);
  return out;
}

inline ApproxSpec fit(Target t, Interval iv, std::size_t degree, FitMethod m) {
  switch (m) {
    case FitMethod::Minimax: return fit_minimax(t, iv, degree);
    case FitMethod::LeastSquares: return fit_least_squares(t, iv, degree);
    case FitMethod::Taylor:
      if (t != Target::Reciprocal) throw std::invalid_argument("taylor fits support reciprocal only");
      return fit_taylor_reciprocal(iv, degree, iv.b);
  }
  throw std::invalid_argument("unknown fit method");
}

struct Extrema {
  double min;
  double max;
};

constexpr std::size_t kExtremaGrid = 8192;

// Min and max of p on [a, b]: endpoints, grid samples, and the roots of p'
// located by sign changes on the grid and refined by bisection.
inline Extrema extrema_on_interval(const Polynomial& p, Interval iv) {
  if (iv.a > iv.b) throw std::invalid_argument("extrema_on_interval: a > b");
  Extrema ex{std::min(p.eval(iv.a), p.eval(iv.b)), std::max(p.eval(iv.a), p.eval(iv.b))};
  if (iv.a == iv.b) return ex;
  auto take = [&](double x) {
    double v = p.eval(x);
    ex.min = std::min(ex.min, v);
    ex.max = std::max(ex.max, v);
  };
  Polynomial dp = differentiate(p);
  auto xs = detail::uniform_grid(iv.a, iv.b, kExtremaGrid);
  double prev = dp.eval(xs[0]);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    take(xs[i]);
    double cur = dp.eval(xs[i]);
    if (cur == 0.0) {
      take(xs[i]);
    } else if ((prev < 0) != (cur < 0) && prev != 0.0) {
      double lo = xs[i - 1], hi = xs[i], flo = prev;
      while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        double fm = dp.eval(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      take(0.5 * (lo + hi));
    }
    prev = cur;
  }
  return ex;
}

inline bool is_monotone_decreasing(const Polynomial& p, Interval iv) {
  return extrema_on_interval(differentiate(p), iv).max <= 0.0;
}

struct PKappaResult {
  Polynomial P;
  double e_B_actual = 0.0;
  std::size_t q = 0;
  std::size_t base_degree_used = 0;
};

struct PKappaOptions {
  std::size_t degree_cap = 30;
  std::size_t q_cap = 64;
};

// Monotone inverse approximation: a least-squares fit of 1/x on
// [kappa*Theta/2, Theta], accurate to e_B/2 on [kappa*Theta, Theta] and
// decreasing on [kappa*Theta/2, kappa*Theta], plus the correction
// h(x) = (e_B/2) (1 - (x - kappa*Theta)/M)^(q+1), which keeps the sum
// decreasing down to Theta - R_tilde^2.
inline PKappaResult construct_P_kappa(double kappa, double Theta, double R_tilde,
                                      double e_B_target, std::size_t base_degree,
                                      const PKappaOptions& opt = {}) {
  if (!(kappa > 0 && kappa < 1)) throw std::invalid_argument("construct_P_kappa: kappa not in (0,1)");
  if (!(Theta > 0)) throw std::invalid_argument("construct_P_kappa: Theta must be positive");
  if (!(e_B_target > 0)) throw std::invalid_argument("construct_P_kappa: e_B_target must be positive");
  const double kT = kappa * Theta;
  const double lo = Theta - R_tilde * R_tilde;
  const Interval base_iv{kT / 2, Theta};
  const Interval upper{kT / 2, kT};

  Polynomial Pt;
  std::size_t deg = std::max<std::size_t>(base_degree, 1);
  for (;; ++deg) {
    if (deg > opt.degree_cap) {
      throw InfeasibleError("construct_P_kappa: base fit degree exceeds cap " +
                            std::to_string(opt.degree_cap) + " for sup error <= e_B/2");
    }
    ApproxSpec s = fit_least_squares(Target::Reciprocal, base_iv, deg);
    double err = sup_error(s.poly, Target::Reciprocal, {kT, Theta});
    if (err <= e_B_target / 2 && is_monotone_decreasing(s.poly, upper)) {
      Pt = s.poly;
      break;
    }
  }

  const double M = std::max(std::abs(lo), (1 - kappa) * Theta);
  const Polynomial dPt = differentiate(Pt);
  std::size_t q = 0;
  if (lo < kT / 2) {
    for (;; ++q) {
      if (q > opt.q_cap) {
        throw InfeasibleError("construct_P_kappa: q exceeds cap " + std::to_string(opt.q_cap));
      }
      Polynomial g = dPt - (e_B_target * static_cast<double>(q + 1) / (2 * M)) *
                               linear_power(1 + kT / M, -1.0 / M, q);
      if (extrema_on_interval(g, {lo, kT / 2}).max <= -1.0) break;
    }
  }
  Polynomial ht = (e_B_target / 2) * linear_power(1 + kT / M, -1.0 / M, q + 1);
  PKappaResult out;
  out.P = Pt + ht;
  out.q = q;
  out.base_degree_used = deg;
  out.e_B_actual = sup_error(out.P, Target::Reciprocal, {kT, Theta});
  if (!is_monotone_decreasing(out.P, {std::min(lo, kT), kT})) {
    throw InfeasibleError("construct_P_kappa: result not decreasing on [Theta-R^2, kappa*Theta]");
  }
  if (out.e_B_actual > e_B_target) {
    throw InfeasibleError("construct_P_kappa: measured e_B exceeds target");
  }
  return out;
}

}  // namespace fhedp

#endif  // FHEDP_POLY_HPP_
