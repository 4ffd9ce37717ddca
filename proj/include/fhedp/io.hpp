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

#ifndef FHEDP_IO_HPP_
#define FHEDP_IO_HPP_

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "fhedp/data.hpp"
#include "fhedp/feasibility.hpp"
#include "fhedp/params.hpp"
#include "fhedp/poly.hpp"
#include "fhedp/trainer.hpp"

namespace fhedp {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON forms.

inline json to_json(const Polynomial& p) { return p.coeffs(); }

inline Polynomial polynomial_from_json(const json& j) {
  return Polynomial(j.get<std::vector<double>>());
}

inline json to_json(const ApproxSpec& s) {
  // Exact zeros above the nominal degree are dropped.
  std::vector<double> c = s.poly.coeffs();
  while (c.size() > s.degree + 1 && c.back() == 0.0) c.pop_back();
  return json{{"target", target_name(s.target)},
              {"method", method_name(s.method)},
              {"degree", s.degree},
              {"interval", {s.interval.a, s.interval.b}},
              {"sup_error", s.sup_error},
              {"rounds", s.rounds},
              {"coeffs", c}};
}

inline ApproxSpec approx_spec_from_json(const json& j) {
  ApproxSpec s;
  s.target = target_from_name(j.at("target").get<std::string>());
  if (j.contains("method")) s.method = method_from_name(j.at("method").get<std::string>());
  s.interval = {j.at("interval").at(0).get<double>(), j.at("interval").at(1).get<double>()};
  s.poly = polynomial_from_json(j.at("coeffs"));
  s.degree = j.value("degree", s.poly.degree());
  s.sup_error = j.at("sup_error").get<double>();
  s.rounds = j.value("rounds", 0);
  return s;
}

inline json to_json(const DPParams& p) {
  return json{{"epsilon", p.epsilon}, {"delta", p.delta},   {"N", p.N},
              {"T", p.T},             {"Delta2", p.Delta2}, {"sigma", p.sigma},
              {"c_delta", p.c_delta}, {"clip_C", p.clip_C}};
}

inline DPParams dp_params_from_json(const json& j) {
  DPParams p;
  p.epsilon = j.at("epsilon").get<double>();
  p.delta = j.at("delta").get<double>();
  p.N = j.at("N").get<std::size_t>();
  p.T = j.at("T").get<std::size_t>();
  p.Delta2 = j.at("Delta2").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.c_delta = j.at("c_delta").get<double>();
  p.clip_C = j.value("clip_C", 1.0);
  return p;
}

inline json to_json(const FeasibilityReport& r) {
  return json{{"R", r.R},
              {"m_P", r.m_P},
              {"M_P", r.M_P},
              {"alpha_step", r.alpha_step},
              {"A", r.A},
              {"B", r.B_q},
              {"C", r.C_q},
              {"eta_max", r.eta_max},
              {"kappa_lhs", r.kappa_lhs},
              {"kappa_rhs", r.kappa_rhs},
              {"sigma", r.sigma},
              {"c_delta", r.c_delta},
              {"e_f", r.e_f},
              {"e_B", r.e_B},
              {"eta_ok", r.eta_ok},
              {"kappa_ok", r.kappa_ok},
              {"monotone_ok", r.monotone_ok},
              {"mP_nonneg_ok", r.mP_nonneg_ok},
              {"error_ok", r.error_ok},
              {"feasible", r.feasible()}};
}

inline json to_json(const ParamBundle& b) {
  return json{{"m", b.m},
              {"Theta", b.bp.Theta},
              {"lambda", b.bp.lambda},
              {"kappa", b.bp.kappa},
              {"eta", b.cfg.eta},
              {"T", b.cfg.T},
              {"batch_n", b.cfg.batch_n},
              {"q", b.q},
              {"E_f", b.E_f},
              {"d", b.d},
              {"release_d", b.release_d},
              {"rounds", b.rounds},
              {"sigmoid_fit", to_json(b.sigmoid_fit)},
              {"barrier_fit", to_json(b.barrier_fit)},
              {"dp", to_json(b.dp)},
              {"report", to_json(b.report)}};
}

// Restores a bundle and recomputes its report from the primary quantities,
// so a hand-edited file cannot claim feasibility it does not have.
inline ParamBundle bundle_from_json(const json& j) {
  ParamBundle b;
  b.m = j.at("m").get<std::size_t>();
  b.bp.Theta = j.at("Theta").get<double>();
  b.bp.lambda = j.at("lambda").get<double>();
  b.bp.kappa = j.at("kappa").get<double>();
  b.cfg.eta = j.at("eta").get<double>();
  b.cfg.T = j.at("T").get<std::size_t>();
  b.cfg.batch_n = j.value("batch_n", std::size_t{0});
  b.q = j.value("q", std::size_t{0});
  b.E_f = j.at("E_f").get<double>();
  b.d = j.value("d", 1.0);
  b.cfg.d = b.d;
  b.release_d = j.value("release_d", false);
  b.rounds = j.value("rounds", 0);
  b.sigmoid_fit = approx_spec_from_json(j.at("sigmoid_fit"));
  b.barrier_fit = approx_spec_from_json(j.at("barrier_fit"));
  b.bp.P_kappa = b.barrier_fit.poly;
  b.dp = dp_params_from_json(j.at("dp"));
  b.report = evaluate_feasibility(b);
  b.bp.m_P = b.report.m_P;
  b.bp.M_P = b.report.M_P;
  b.bp.e_B = b.report.e_B;
  return b;
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return json::parse(f);
}

// ---------------------------------------------------------------------------
// Content hashing.

// Hex SHA-1 of `bytes`.
inline std::string sha1_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr)) {
    throw std::runtime_error("sha1 failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof(buf), "%02x", md[k]);
    out += buf;
  }
  return out;
}

// Object id git would assign to a blob with these contents.
inline std::string git_blob_hash(const std::string& bytes) {
  return sha1_hex("blob " + std::to_string(bytes.size()) + '\0' + bytes);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// What produced an artifact: subcommand, effective settings and input
// contents. The hash covers all three and nothing time- or host-dependent.
struct RunManifest {
  std::string subcommand;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::map<std::string, std::string> settings;
  std::map<std::string, std::string> input_hashes;  // path -> blob hash

  void add_input(const std::string& path) { input_hashes[path] = git_blob_hash(read_file_bytes(path)); }

  std::string hash() const {
    std::string s = "subcommand=" + subcommand + "\nseed=" + std::to_string(seed) + "\n";
    for (const auto& [k, v] : settings) s += "setting:" + k + "=" + v + "\n";
    for (const auto& [k, v] : input_hashes) s += "input:" + v + "\n";
    return git_blob_hash(s);
  }

  json to_json() const {
    json set = json::object();
    for (const auto& [k, v] : settings) set[k] = v;
    json in = json::object();
    for (const auto& [k, v] : input_hashes) in[k] = v;
    return json{{"subcommand", subcommand}, {"config", config_path}, {"seed", seed},
                {"out_dir", out_dir},       {"settings", set},       {"inputs", in},
                {"hash", hash()}};
  }
};

// ---------------------------------------------------------------------------
// Flat key = value configuration files.

// Lines are `key = value`; '#' starts a comment; blank lines are ignored.
inline std::vector<std::pair<std::string, std::string>> read_kv_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace output.

inline void write_trace_csv(std::ostream& out, const RunTrace& tr, const std::string& manifest_hash) {
  out << "# manifest " << manifest_hash << '\n';
  out << "iter,loss,grad_norm,w_norm,z_min,z_max\n";
  for (const auto& r : tr.rows) {
    out << r.iter << ',' << detail::format_double(r.loss) << ','
        << detail::format_double(r.grad_norm) << ',' << detail::format_double(r.w_norm) << ','
        << detail::format_double(r.z_min) << ',' << detail::format_double(r.z_max) << '\n';
  }
}

}  // namespace fhedp

#endif  // FHEDP_IO_HPP_
