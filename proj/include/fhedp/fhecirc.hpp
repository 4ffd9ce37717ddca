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

#ifndef FHEDP_FHECIRC_HPP_
#define FHEDP_FHECIRC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fhedp/dp.hpp"
#include "fhedp/objective.hpp"
#include "fhedp/poly.hpp"
#include "fhedp/rng.hpp"
#include "fhedp/trainer.hpp"

namespace fhedp {

// A ciphertext stand-in: the exact plaintext value plus the multiplicative
// depth consumed to produce it.
struct CipherVal {
  double value = 0.0;
  int depth = 0;
};

inline CipherVal encrypt(double v) { return {v, 0}; }

inline CipherVal c_add(const CipherVal& a, const CipherVal& b) {
  return {a.value + b.value, std::max(a.depth, b.depth)};
}

inline CipherVal c_sub(const CipherVal& a, const CipherVal& b) {
  return {a.value - b.value, std::max(a.depth, b.depth)};
}

inline CipherVal c_mul(const CipherVal& a, const CipherVal& b) {
  return {a.value * b.value, std::max(a.depth, b.depth) + 1};
}

// Plaintext constants sit at depth 0; multiplying by one still costs a level.
inline CipherVal c_mul_const(double c, const CipherVal& a) { return c_mul(encrypt(c), a); }
inline CipherVal c_add_const(const CipherVal& a, double c) { return c_add(a, encrypt(c)); }
inline CipherVal c_const_sub(double c, const CipherVal& a) { return c_sub(encrypt(c), a); }

// Balanced power-tree evaluation: x^k from the minimum-depth product tree,
// one multiplication by the coefficients, then the sum.
inline CipherVal c_eval_poly(const Polynomial& p, const CipherVal& x) {
  const auto& c = p.coeffs();
  const std::size_t d = c.size() - 1;
  if (d == 0) throw std::invalid_argument("c_eval_poly: degree must be >= 1");
  std::vector<CipherVal> pw(d + 1);
  pw[1] = x;
  for (std::size_t k = 2; k <= d; ++k) {
    std::size_t hi = 1;
    while (hi * 2 <= k) hi *= 2;
    std::size_t r = k - hi;
    pw[k] = r == 0 ? c_mul(pw[hi / 2], pw[hi / 2]) : c_mul(pw[hi], pw[r]);
  }
  CipherVal acc = c_mul_const(c[1], pw[1]);
  for (std::size_t k = 2; k <= d; ++k) acc = c_add(acc, c_mul_const(c[k], pw[k]));
  return c_add_const(acc, c[0]);
}

// Depth contributed by c_eval_poly on a depth-0 input.
inline int poly_depth(std::size_t degree) {
  int lg = 0;
  while ((std::size_t{1} << lg) < degree) ++lg;
  return lg + 1;
}

enum class CircuitAlgo { ClippedAlg4, NoClipAlg5, OutputGD };

inline std::string algo_name(CircuitAlgo a) {
  switch (a) {
    case CircuitAlgo::ClippedAlg4: return "clipped";
    case CircuitAlgo::NoClipAlg5: return "noclip";
    case CircuitAlgo::OutputGD: return "output";
  }
  return "";
}

// Polynomial degrees used inside one iteration.
struct CircuitDegrees {
  std::size_t sigmoid = 7;
  std::size_t sqrt = 7;
  std::size_t max_abs = 31;  // |t| approximation inside max{C, |g|}
  std::size_t inv_sqrt = 4;
  std::size_t barrier = 4;
};

struct DepthStep {
  std::string label;
  char path = 'A';      // 'A' gradient path, 'B' barrier path, '-' after the join
  int charged = 0;      // depth added according to the cost table
  int analytic = -1;    // depth added by raw add/mul accounting, -1 if not computed
  int running = 0;      // depth of the path's value after this step
};

struct DepthTrace {
  CircuitAlgo algo = CircuitAlgo::NoClipAlg5;
  std::vector<DepthStep> steps;
  int path_a = 0;
  int path_b = -1;  // -1 when there is no barrier path
  int critical = 0;
  int total = 0;

  std::vector<const DepthStep*> discrepancies() const {
    std::vector<const DepthStep*> out;
    for (const auto& s : steps) {
      if (s.analytic >= 0 && s.analytic != s.charged) out.push_back(&s);
    }
    return out;
  }
};

// Row labels of the per-iteration depth cost table.
namespace labels {
inline const char* kInner = "z = <w, x> (Inner Product)";
inline const char* kSigmoid = "Sigmoid Poly";
inline const char* kGradient = "Gradient ((y_pred-y)*x)";
inline const char* kNorm = "||grad_i||^2 (Norm)";
inline const char* kSqrt = "sqrt(norm) (Sqrt Poly)";
inline const char* kMax = "max{C, ||grad_i||}";
inline const char* kInvSqrt = "Inverse sqrt(norm) (using TS)";
inline const char* kScale = "Scaling Logic (grad_i*scal)";
inline const char* kAverage = "Average Gradient";
inline const char* kWNorm = "||w||^2 (Squared Norm)";
inline const char* kInverse = "Inverse Term (using LS)";
inline const char* kBarrier = "Barrier Term";
inline const char* kCritical = "Critical Path Depth";
inline const char* kUpdate = "Weight Update (grad * lr)";
inline const char* kTotal = "Total Cost per Iteration";
}  // namespace labels

namespace detail {

// Charged depth of each table primitive.
inline int charge_of(const std::string& label) {
  static const std::map<std::string, int> table = {
      {labels::kInner, 1},   {labels::kSigmoid, 4},  {labels::kGradient, 2},
      {labels::kNorm, 1},    {labels::kSqrt, 4},     {labels::kMax, 6},
      {labels::kInvSqrt, 3}, {labels::kScale, 1},    {labels::kAverage, 1},
      {labels::kWNorm, 1},   {labels::kInverse, 3},  {labels::kBarrier, 2},
      {labels::kUpdate, 1},
  };
  auto it = table.find(label);
  if (it == table.end()) throw std::invalid_argument("unknown primitive: " + label);
  return it->second;
}

// Generic polynomial with every coefficient 1/(k+1); only its degree matters
// for depth, and it keeps shadow values bounded on small inputs.
inline Polynomial probe_poly(std::size_t degree) {
  std::vector<double> c(degree + 1);
  for (std::size_t k = 0; k <= degree; ++k) c[k] = 1.0 / static_cast<double>(k + 1);
  return Polynomial(c);
}

struct Builder {
  bool charged;
  DepthTrace* tr;

  // Applies one table step to a set of values that all sit on the same path.
  // In charged mode each output's depth is input depth + table charge; in
  // analytic mode the op's own accounting stands and is compared.
  template <class Op>
  std::vector<CipherVal> step(const char* label, char path, const std::vector<CipherVal>& in,
                              Op&& op) {
    int before = 0;
    for (const auto& v : in) before = std::max(before, v.depth);
    std::vector<CipherVal> out = op(in);
    int after = 0;
    for (const auto& v : out) after = std::max(after, v.depth);
    DepthStep s;
    s.label = label;
    s.path = path;
    s.charged = charge_of(label);
    if (charged) {
      for (auto& v : out) v.depth = before + s.charged;
      s.running = before + s.charged;
    } else {
      s.analytic = after - before;
      s.running = after;
    }
    tr->steps.push_back(s);
    return out;
  }
};

}  // namespace detail

// One iteration of clipped DP-GD / no-clip DP-GD / Output-GD on fresh symbolic
// ciphertexts, for one representative record of the batch (records are
// independent until the sum, which is addition only).
inline DepthTrace build_iteration_circuit(CircuitAlgo algo, std::size_t m, const CircuitDegrees& deg,
                                          bool charged) {
  if (m == 0) throw std::invalid_argument("circuit needs m >= 1");
  DepthTrace tr;
  tr.algo = algo;
  detail::Builder b{charged, &tr};
  using V = std::vector<CipherVal>;
  Rng rng(1);
  V x(m), w(m);
  for (std::size_t j = 0; j < m; ++j) {
    x[j] = encrypt(2 * rng.uniform() - 1);
    w[j] = encrypt(0.1 * (2 * rng.uniform() - 1));
  }
  CipherVal y = encrypt(1.0);

  // Path A: per-record gradient.
  V in = x;
  in.insert(in.end(), w.begin(), w.end());
  V z = b.step(labels::kInner, 'A', in, [&](const V& v) {
    CipherVal acc = c_mul(v[0], v[m]);
    for (std::size_t j = 1; j < m; ++j) acc = c_add(acc, c_mul(v[j], v[m + j]));
    return V{acc};
  });
  V pred = b.step(labels::kSigmoid, 'A', z, [&](const V& v) {
    return V{c_eval_poly(detail::probe_poly(deg.sigmoid), v[0])};
  });
  V g = b.step(labels::kGradient, 'A', pred, [&](const V& v) {
    CipherVal err = c_sub(v[0], y);
    V out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = c_mul(x[j], err);
    return out;
  });
  if (algo == CircuitAlgo::ClippedAlg4) {
    V nrm = b.step(labels::kNorm, 'A', g, [&](const V& v) {
      CipherVal acc = c_mul(v[0], v[0]);
      for (std::size_t j = 1; j < m; ++j) acc = c_add(acc, c_mul(v[j], v[j]));
      return V{acc};
    });
    V rt = b.step(labels::kSqrt, 'A', nrm, [&](const V& v) {
      return V{c_eval_poly(detail::probe_poly(deg.sqrt), v[0])};
    });
    // max{C, t} = (C + t)/2 + |t - C|/2 with |.| a polynomial approximation.
    const double C = 1.0;
    V mx = b.step(labels::kMax, 'A', rt, [&](const V& v) {
      CipherVal diff = c_add_const(v[0], -C);
      CipherVal ab = c_eval_poly(detail::probe_poly(deg.max_abs), diff);
      return V{c_add(c_add_const(v[0], C), ab)};
    });
    V inv = b.step(labels::kInvSqrt, 'A', mx, [&](const V& v) {
      return V{c_eval_poly(detail::probe_poly(deg.inv_sqrt), v[0])};
    });
    V joined = g;
    joined.push_back(inv[0]);
    g = b.step(labels::kScale, 'A', joined, [&](const V& v) {
      V out(m);
      for (std::size_t j = 0; j < m; ++j) out[j] = c_mul(v[j], v[m]);
      return out;
    });
  }
  V avg = b.step(labels::kAverage, 'A', g, [&](const V& v) {
    V out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = c_mul_const(0.01, v[j]);
    return out;
  });
  for (const auto& v : avg) tr.path_a = std::max(tr.path_a, v.depth);

  V dir = avg;
  if (algo == CircuitAlgo::NoClipAlg5) {
    V sq = b.step(labels::kWNorm, 'B', w, [&](const V& v) {
      CipherVal acc = c_mul(v[0], v[0]);
      for (std::size_t j = 1; j < m; ++j) acc = c_add(acc, c_mul(v[j], v[j]));
      return V{acc};
    });
    V pk = b.step(labels::kInverse, 'B', sq, [&](const V& v) {
      return V{c_eval_poly(detail::probe_poly(deg.barrier), c_const_sub(4.0, v[0]))};
    });
    V joined = pk;
    joined.insert(joined.end(), w.begin(), w.end());
    V bar = b.step(labels::kBarrier, 'B', joined, [&](const V& v) {
      CipherVal coef = c_mul_const(2 * 0.001, v[0]);
      V out(m);
      for (std::size_t j = 0; j < m; ++j) out[j] = c_mul(coef, v[1 + j]);
      return out;
    });
    tr.path_b = 0;
    for (const auto& v : bar) tr.path_b = std::max(tr.path_b, v.depth);
    for (std::size_t j = 0; j < m; ++j) dir[j] = c_add(dir[j], bar[j]);
  }
  tr.critical = std::max(tr.path_a, tr.path_b);
  for (std::size_t j = 0; j < m; ++j) dir[j] = c_add(dir[j], encrypt(0.0));  // fresh noise
  V upd = b.step(labels::kUpdate, '-', dir, [&](const V& v) {
    V out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = c_sub(w[j], c_mul_const(0.1, v[j]));
    return out;
  });
  for (const auto& v : upd) tr.total = std::max(tr.total, v.depth);
  return tr;
}

inline DepthTrace run_iteration_circuit(CircuitAlgo algo, std::size_t m = 4,
                                        const CircuitDegrees& deg = {}) {
  return build_iteration_circuit(algo, m, deg, true);
}

inline DepthTrace analytic_depth_mode(CircuitAlgo algo, const CircuitDegrees& deg = {},
                                      std::size_t m = 4) {
  return build_iteration_circuit(algo, m, deg, false);
}

struct DepthTableRow {
  std::string step;
  std::string clipped;
  std::string noclip;
  std::string output;
};

// The per-iteration cost table for the three algorithms, in the row order
// and notation of the published table.
inline std::vector<DepthTableRow> depth_table(const CircuitDegrees& deg = {}) {
  DepthTrace t[3] = {run_iteration_circuit(CircuitAlgo::ClippedAlg4, 4, deg),
                     run_iteration_circuit(CircuitAlgo::NoClipAlg5, 4, deg),
                     run_iteration_circuit(CircuitAlgo::OutputGD, 4, deg)};
  auto cell = [&](int k, const char* label) -> std::string {
    for (const auto& s : t[k].steps) {
      if (s.label == label) return "+" + std::to_string(s.charged);
    }
    return "---";
  };
  std::vector<DepthTableRow> rows;
  for (const char* l : {labels::kInner, labels::kSigmoid, labels::kGradient, labels::kNorm,
                        labels::kSqrt, labels::kMax, labels::kInvSqrt, labels::kScale,
                        labels::kAverage, labels::kWNorm, labels::kInverse, labels::kBarrier}) {
    rows.push_back({l, cell(0, l), cell(1, l), cell(2, l)});
  }
  auto crit = [&](int k) -> std::string {
    if (t[k].path_b < 0) return std::to_string(t[k].critical);
    return "max(" + std::to_string(t[k].path_a) + ", " + std::to_string(t[k].path_b) +
           ")=" + std::to_string(t[k].critical);
  };
  rows.push_back({labels::kCritical, crit(0), crit(1), crit(2)});
  rows.push_back({labels::kUpdate, cell(0, labels::kUpdate), cell(1, labels::kUpdate),
                  cell(2, labels::kUpdate)});
  rows.push_back({labels::kTotal, std::to_string(t[0].total), std::to_string(t[1].total),
                  std::to_string(t[2].total)});
  return rows;
}

struct ShadowRun {
  Weights w;
  int max_depth = 0;  // depth of the weights after the last iteration
  std::size_t iterations = 0;
};

// No-clip DP-GD executed value-for-value on tracked ciphertexts: the server
// sees encrypted records, labels, weights and per-iteration noise vectors
// and uses only c_add / c_sub / c_mul / c_eval_poly. Batches and noise come
// from the same seeded stream as the plaintext trainer.
inline ShadowRun shadow_noclip_run(const Dataset& D, const BarrierParams& bp,
                                   const LossDerivApprox& d, const TrainConfig& cfg,
                                   const DPParams& dp) {
  const std::size_t m = D.m;
  std::vector<CipherVal> X(D.X.size()), Y(D.N), w(m, encrypt(0.0));
  for (std::size_t k = 0; k < D.X.size(); ++k) X[k] = encrypt(D.X[k]);
  for (std::size_t i = 0; i < D.N; ++i) Y[i] = encrypt(D.y[i]);
  Rng rng(cfg.seed);
  ShadowRun out;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    auto batch = sample_batch(D.N, cfg.batch_n, rng);
    std::vector<CipherVal> sum(m);
    bool first = true;
    for (std::size_t i : batch) {
      const CipherVal* x = X.data() + i * m;
      CipherVal logit = c_mul(x[0], w[0]);
      for (std::size_t j = 1; j < m; ++j) logit = c_add(logit, c_mul(x[j], w[j]));
      CipherVal err;
      if (d.shared) {
        err = c_sub(c_eval_poly(d.p0, logit), Y[i]);
      } else {
        err = c_add(c_mul(Y[i], c_eval_poly(d.p1, logit)),
                    c_mul(c_const_sub(1.0, Y[i]), c_eval_poly(d.p0, logit)));
      }
      for (std::size_t j = 0; j < m; ++j) {
        CipherVal g = c_mul(x[j], err);
        sum[j] = first ? g : c_add(sum[j], g);
      }
      first = false;
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    CipherVal sq = c_mul(w[0], w[0]);
    for (std::size_t j = 1; j < m; ++j) sq = c_add(sq, c_mul(w[j], w[j]));
    CipherVal barrier = c_eval_poly(bp.P_kappa, c_const_sub(bp.Theta, sq));
    CipherVal coef = c_mul_const(2.0 * bp.lambda, barrier);
    Weights noise = gaussian_vector(m, dp.sigma, rng);
    for (std::size_t j = 0; j < m; ++j) {
      CipherVal grad = c_add(c_add(c_mul_const(inv_n, sum[j]), c_mul(coef, w[j])), encrypt(noise[j]));
      w[j] = c_sub(w[j], c_mul_const(cfg.eta, grad));
    }
    out.iterations = t + 1;
  }
  out.w.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    out.w[j] = w[j].value;
    out.max_depth = std::max(out.max_depth, w[j].depth);
  }
  return out;
}

}  // namespace fhedp

#endif  // FHEDP_FHECIRC_HPP_
