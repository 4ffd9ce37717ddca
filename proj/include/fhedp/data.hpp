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

#ifndef FHEDP_DATA_HPP_
#define FHEDP_DATA_HPP_

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fhedp/objective.hpp"
#include "fhedp/rng.hpp"

namespace fhedp {

// A rectangular table of raw string cells with a header row.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw std::invalid_argument("no column named '" + name + "'");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// One CSV record with RFC 4180 quoting; fields are trimmed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

inline bool is_missing(const std::string& s) { return s.empty() || s == "?" || s == "NA"; }

// Min-max map onto [-1, 1]; endpoints land exactly on -1 and 1 and a
// column already spanning [-1, 1] is reproduced bit for bit.
inline void scale_column(std::vector<double>& v) {
  if (v.empty()) return;
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  for (double& x : v) {
    if (lo == hi) {
      x = 0.0;
    } else if (x == lo) {
      x = -1.0;
    } else if (x == hi) {
      x = 1.0;
    } else {
      x = std::clamp((2.0 * x - (hi + lo)) / (hi - lo), -1.0, 1.0);
    }
  }
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline RawTable read_csv(std::istream& in) {
  RawTable t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " fields, got " +
                               std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw std::runtime_error("csv: empty input");
  return t;
}

inline RawTable read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_csv(f);
}

struct PreprocessInfo {
  std::vector<std::string> feature_names;
  std::size_t dropped_rows = 0;
  std::string positive_label;
};

// Drops rows with a missing cell, integer-codes categorical columns in order
// of first appearance, min-max scales every feature to [-1, 1] and codes the
// label as 0/1. A label column holding exactly {0, 1} keeps that coding;
// any other two-valued column maps its lexicographically larger value (or
// `positive`, when given) to 1.
inline Dataset preprocess(const RawTable& t, const std::string& label_column,
                          PreprocessInfo* info = nullptr, const std::string& positive = "") {
  const std::size_t lc = t.column(label_column);
  std::vector<const std::vector<std::string>*> kept;
  std::size_t dropped = 0;
  for (const auto& r : t.rows) {
    bool miss = false;
    for (const auto& c : r) miss = miss || detail::is_missing(c);
    if (miss) {
      ++dropped;
    } else {
      kept.push_back(&r);
    }
  }
  if (kept.empty()) throw std::invalid_argument("preprocess: no rows left after dropping missing");

  std::vector<std::string> labels;
  for (const auto* r : kept) {
    const auto& v = (*r)[lc];
    if (std::find(labels.begin(), labels.end(), v) == labels.end()) labels.push_back(v);
  }
  if (labels.size() > 2) throw std::invalid_argument("preprocess: label column is not binary");
  std::string pos;
  bool numeric01 = true;
  for (const auto& l : labels) {
    double v;
    numeric01 = numeric01 && detail::parse_double(l, &v) && (v == 0.0 || v == 1.0);
  }
  if (!positive.empty()) {
    pos = positive;
  } else if (numeric01) {
    pos.clear();
  } else {
    pos = *std::max_element(labels.begin(), labels.end());
  }

  const std::size_t N = kept.size();
  const std::size_t m = t.header.size() - 1;
  Dataset D(N, m);
  PreprocessInfo pi;
  pi.dropped_rows = dropped;
  pi.positive_label = numeric01 && positive.empty() ? "1" : pos;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& v = (*kept[i])[lc];
    if (numeric01 && positive.empty()) {
      double y;
      detail::parse_double(v, &y);
      D.y[i] = y;
    } else {
      D.y[i] = v == pos ? 1.0 : 0.0;
    }
  }

  std::size_t j = 0;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == lc) continue;
    std::vector<double> col(N);
    bool numeric = true;
    for (std::size_t i = 0; i < N && numeric; ++i) {
      numeric = detail::parse_double((*kept[i])[c], &col[i]);
    }
    if (!numeric) {
      std::map<std::string, double> codes;
      for (std::size_t i = 0; i < N; ++i) {
        const auto& s = (*kept[i])[c];
        auto it = codes.find(s);
        if (it == codes.end()) it = codes.emplace(s, static_cast<double>(codes.size())).first;
        col[i] = it->second;
      }
    }
    detail::scale_column(col);
    for (std::size_t i = 0; i < N; ++i) D.X[i * m + j] = col[i];
    pi.feature_names.push_back(t.header[c]);
    ++j;
  }
  if (info) *info = pi;
  return D;
}

// Canonical dataset table: features, then the label as the last column.
inline RawTable to_table(const Dataset& D, const std::vector<std::string>& names = {}) {
  RawTable t;
  for (std::size_t j = 0; j < D.m; ++j) {
    t.header.push_back(j < names.size() ? names[j] : "x" + std::to_string(j));
  }
  t.header.push_back("label");
  for (std::size_t i = 0; i < D.N; ++i) {
    std::vector<std::string> r;
    for (std::size_t j = 0; j < D.m; ++j) r.push_back(detail::format_double(D.x(i, j)));
    r.push_back(D.y[i] == 1.0 ? "1" : "0");
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline void write_csv(std::ostream& out, const RawTable& t) {
  auto put = [&](const std::vector<std::string>& r) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out << ',';
      out << r[j];
    }
    out << '\n';
  };
  put(t.header);
  for (const auto& r : t.rows) put(r);
}

inline void write_dataset_csv(const std::string& path, const Dataset& D,
                              const std::vector<std::string>& names = {}) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_csv(f, to_table(D, names));
}

// Reads a canonical dataset CSV (label last) and checks the [-1, 1] domain.
inline Dataset read_dataset_csv(const std::string& path) {
  RawTable t = read_csv_file(path);
  if (t.header.size() < 2) throw std::runtime_error(path + ": need at least one feature");
  Dataset D(t.rows.size(), t.header.size() - 1);
  for (std::size_t i = 0; i < D.N; ++i) {
    for (std::size_t j = 0; j <= D.m; ++j) {
      double v;
      if (!detail::parse_double(t.rows[i][j], &v)) {
        throw std::runtime_error(path + ": non-numeric cell in row " + std::to_string(i + 1));
      }
      if (j == D.m) {
        if (v != 0.0 && v != 1.0) throw std::runtime_error(path + ": label not in {0,1}");
        D.y[i] = v;
      } else {
        if (v < -1.0 || v > 1.0) throw std::runtime_error(path + ": feature outside [-1,1]");
        D.X[i * D.m + j] = v;
      }
    }
  }
  return D;
}

// Keeps rows whose label is `a` or `b` and recodes them as 0 and 1.
inline RawTable filter_binarize(const RawTable& t, const std::string& label_column,
                                const std::string& a, const std::string& b) {
  const std::size_t lc = t.column(label_column);
  RawTable out;
  out.header = t.header;
  for (const auto& r : t.rows) {
    if (r[lc] != a && r[lc] != b) continue;
    auto row = r;
    row[lc] = r[lc] == a ? "0" : "1";
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw std::invalid_argument("filter_binarize: no rows with either label");
  return out;
}

struct PcaResult {
  Dataset data;
  std::vector<double> variances;  // component variances before rescaling, descending
  Eigen::MatrixXd components;     // m x k, columns are unit eigenvectors
};

// Projects centred features onto the top-k eigenvectors of their covariance,
// then rescales each component to [-1, 1]. Eigenvector signs are fixed so
// that the entry of largest magnitude is positive.
inline PcaResult pca_reduce(const Dataset& D, std::size_t k) {
  if (k == 0 || k > D.m) throw std::invalid_argument("pca_reduce: need 1 <= k <= m");
  if (D.N == 0) throw std::invalid_argument("pca_reduce: empty dataset");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
      D.X.data(), D.N, D.m);
  Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::MatrixXd C = X.rowwise() - mean;
  Eigen::MatrixXd cov = (C.transpose() * C) / static_cast<double>(D.N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("pca_reduce: eigensolver failed");
  std::vector<std::size_t> order(D.m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  PcaResult r;
  r.components.resize(D.m, k);
  for (std::size_t c = 0; c < k; ++c) {
    Eigen::VectorXd v = es.eigenvectors().col(order[c]);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.components.col(c) = v;
    r.variances.push_back(std::max(0.0, es.eigenvalues()(order[c])));
  }
  Eigen::MatrixXd P = C * r.components;
  r.data = Dataset(D.N, k);
  r.data.y = D.y;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> col(D.N);
    for (std::size_t i = 0; i < D.N; ++i) col[i] = P(i, c);
    detail::scale_column(col);
    for (std::size_t i = 0; i < D.N; ++i) r.data.X[i * k + c] = col[i];
  }
  return r;
}

// x ~ U[-1, 1]^m and y ~ Bernoulli(sigmoid(<w_true, x>)).
inline Dataset synthetic_logistic(std::size_t m, std::size_t N, const Weights& w_true,
                                  std::uint64_t seed) {
  if (w_true.size() != m) throw std::invalid_argument("synthetic_logistic: w_true has wrong size");
  for (double v : w_true) {
    if (!std::isfinite(v)) throw std::invalid_argument("synthetic_logistic: non-finite w_true");
  }
  Rng rng(seed);
  Dataset D(N, m);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < m; ++j) D.X[i * m + j] = 2.0 * rng.uniform() - 1.0;
    D.y[i] = rng.uniform() < sigmoid(dot(D.row(i), w_true.data(), m)) ? 1.0 : 0.0;
  }
  return D;
}

inline Dataset subset(const Dataset& D, const std::vector<std::size_t>& idx) {
  Dataset out(idx.size(), D.m);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy(D.row(idx[k]), D.row(idx[k]) + D.m, out.row(k));
    out.y[k] = D.y[idx[k]];
  }
  return out;
}

// Seeded disjoint partition; the test side gets round(N * fraction) rows.
inline std::pair<Dataset, Dataset> split(const Dataset& D, double test_fraction,
                                         std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) {
    throw std::invalid_argument("split: fraction must be in (0, 1)");
  }
  std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * D.N));
  if (n_test == 0 || n_test >= D.N) throw std::invalid_argument("split: one side would be empty");
  std::vector<std::size_t> idx(D.N);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t k = D.N - 1; k > 0; --k) {
    std::swap(idx[k], idx[static_cast<std::size_t>(rng.below(k + 1))]);
  }
  std::vector<std::size_t> te(idx.begin(), idx.begin() + n_test);
  std::vector<std::size_t> tr(idx.begin() + n_test, idx.end());
  std::sort(te.begin(), te.end());
  std::sort(tr.begin(), tr.end());
  return {subset(D, tr), subset(D, te)};
}

// Fraction of records with (z >= 0) == y.
inline double accuracy(const Weights& w, const Dataset& D) {
  if (D.N == 0) throw std::invalid_argument("accuracy: empty dataset");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < D.N; ++i) {
    double pred = dot(D.row(i), w.data(), D.m) >= 0 ? 1.0 : 0.0;
    ok += pred == D.y[i];
  }
  return static_cast<double>(ok) / static_cast<double>(D.N);
}

// Area under the ROC curve of the scores <w, x> (Mann-Whitney, ties count 1/2).
inline double auc(const Weights& w, const Dataset& D) {
  std::vector<std::pair<double, double>> s(D.N);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < D.N; ++i) {
    s[i] = {dot(D.row(i), w.data(), D.m), D.y[i]};
    pos += D.y[i] == 1.0;
  }
  const std::size_t neg = D.N - pos;
  if (pos == 0 || neg == 0) return std::nan("");
  std::sort(s.begin(), s.end());
  double rank_sum = 0.0;
  for (std::size_t a = 0; a < s.size();) {
    std::size_t b = a;
    while (b < s.size() && s[b].first == s[a].first) ++b;
    double avg_rank = 0.5 * static_cast<double>(a + 1 + b);
    for (std::size_t k = a; k < b; ++k) {
      if (s[k].second == 1.0) rank_sum += avg_rank;
    }
    a = b;
  }
  double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1) / 2) / (p * n);
}

}  // namespace fhedp

#endif  // FHEDP_DATA_HPP_
