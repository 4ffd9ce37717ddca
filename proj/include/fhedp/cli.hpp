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

#ifndef FHEDP_CLI_HPP_
#define FHEDP_CLI_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fhedp/data.hpp"
#include "fhedp/dp.hpp"
#include "fhedp/errors.hpp"
#include "fhedp/fhecirc.hpp"
#include "fhedp/io.hpp"
#include "fhedp/objective.hpp"
#include "fhedp/params.hpp"
#include "fhedp/poly.hpp"
#include "fhedp/trainer.hpp"

namespace fhedp::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kInfeasible = 2,
  kDiverged = 3,
  kFitFailed = 4,
};

// Thrown by a subcommand that finished writing its outputs but must report
// a diverged run through the exit status.
struct DivergedExit {
  std::string reason;
};

struct CommonOpts {
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

struct DataOpts {
  std::string path;
  std::string label;     // empty: canonical dataset CSV with the label last
  std::string positive;  // label value coded as 1
  std::size_t pca = 0;   // 0: no reduction
};

struct ApproxOpts {
  std::string target = "sigmoid";
  std::string method = "minimax";
  std::size_t degree = 7;
  std::vector<double> interval{-8.0, 8.0};
  double rho = 0.1;
  std::size_t dim = 1;
};

struct SelectOpts {
  DataOpts data;
  std::size_t m = 0;
  std::size_t N = 0;
  double epsilon = 1.0;
  double delta = 1e-5;
  double E_f = 0.05;
  std::size_t T = 100;
  std::size_t batch = 0;
  bool release_d = false;
  double d = 1.0;
  std::string method = "minimax";
};

struct TrainOpts {
  DataOpts data;
  std::string algo;
  std::string bundle;
  std::string poly;
  std::string method = "minimax";
  std::size_t degree = 7;
  std::vector<double> interval;
  double eta = 0.0;  // 0: from the bundle or the smoothness estimate
  std::size_t T = 0;
  double rho = 0.1;
  std::size_t batch = 0;
  double epsilon = 1.0;
  double delta = 1e-5;
  double sigma = -1.0;  // < 0: calibrated
  double clip = 1.0;
  double ridge = 0.01;
  bool no_barrier = false;
  double divergence_norm = 1e6;
  std::size_t trace_every = 1;
};

struct DepthOpts {
  bool analytic = false;
};

struct BenchOpts {
  std::vector<std::string> data;
  std::vector<std::string> labels;
  std::vector<std::string> names;
  std::size_t pca = 0;
  std::size_t runs = 100;
  double epsilon = 1.0;
  double delta = 1e-5;
  double test_fraction = 0.2;
  std::size_t T = 100;
  double eta_clip = 1.0;
  double clip = 1.0;
  double E_f = 0.05;
  double ridge = 0.01;
  std::size_t threads = 0;
};

namespace detail {

inline std::string fmt(double v) { return fhedp::detail::format_double(v); }

inline std::string fixed(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

inline std::filesystem::path out_path(const CommonOpts& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return std::filesystem::path(c.out_dir) / name;
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

inline RunManifest make_manifest(const std::string& sub, const CommonOpts& c) {
  RunManifest m;
  m.subcommand = sub;
  m.config_path = c.config;
  m.seed = c.seed;
  m.out_dir = c.out_dir;
  if (!c.config.empty()) m.add_input(c.config);
  return m;
}

inline Dataset load_dataset(const DataOpts& o, RunManifest& man,
                            std::vector<std::string>* names = nullptr) {
  if (o.path.empty()) throw std::invalid_argument("a --data file is required");
  man.add_input(o.path);
  man.settings["label"] = o.label;
  man.settings["positive"] = o.positive;
  man.settings["pca"] = std::to_string(o.pca);
  Dataset D;
  if (o.label.empty()) {
    D = read_dataset_csv(o.path);
  } else {
    PreprocessInfo info;
    D = preprocess(read_csv_file(o.path), o.label, &info, o.positive);
    if (names) *names = info.feature_names;
  }
  if (o.pca > 0) {
    D = pca_reduce(D, o.pca).data;
    if (names) names->clear();
  }
  return D;
}

inline void add_common(CLI::App* s, CommonOpts& c) {
  s->add_option("--config", c.config, "flat key = value file; flags override it");
  s->add_option("--out", c.out_dir, "output directory");
  s->add_option("--seed", c.seed, "random seed");
}

inline void add_data(CLI::App* s, DataOpts& d) {
  s->add_option("--data", d.path, "headered CSV file");
  s->add_option("--label", d.label, "label column of a raw CSV (omit for a canonical dataset CSV)");
  s->add_option("--positive", d.positive, "label value coded as 1");
  s->add_option("--pca", d.pca, "reduce features to this many principal components");
}

// Splices a --config file in front of the command-line flags so that the
// flags, parsed later, take precedence.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string cfg;
  for (std::size_t k = 0; k + 1 < args.size(); ++k) {
    if (args[k] == "--config") cfg = args[k + 1];
  }
  for (const auto& a : args) {
    if (a.rfind("--config=", 0) == 0) cfg = a.substr(9);
  }
  if (cfg.empty() || args.size() < 2) return args;
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  for (const auto& [k, v] : read_kv_config(cfg)) {
    if (k == "config") continue;
    if (v == "true") {
      out.push_back("--" + k);
      continue;
    }
    if (v == "false") continue;
    out.push_back("--" + k);
    std::istringstream ss(v);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

inline LossDerivApprox sigmoid_from(const ApproxSpec& s) {
  if (s.target != Target::Sigmoid) throw std::invalid_argument("polynomial file is not a sigmoid fit");
  return make_loss_deriv(s);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_approx(const ApproxOpts& o, const CommonOpts& c, std::ostream& out) {
  if (o.interval.size() != 2) throw std::invalid_argument("--interval takes two numbers");
  RunManifest man = detail::make_manifest("approx", c);
  const Target t = target_from_name(o.target);
  const FitMethod meth = method_from_name(o.method);
  const Interval iv{o.interval[0], o.interval[1]};
  man.settings = {{"target", o.target},         {"method", method_name(meth)},
                  {"degree", std::to_string(o.degree)}, {"a", detail::fmt(iv.a)},
                  {"b", detail::fmt(iv.b)},     {"rho", detail::fmt(o.rho)},
                  {"dim", std::to_string(o.dim)}};
  ApproxSpec s = fit(t, iv, o.degree, meth);

  json j = to_json(s);
  std::string row;
  if (t == Target::Sigmoid) {
    EtaT e = estimate_eta_T(make_loss_deriv(s), iv, o.dim, o.rho);
    j["smoothness"] = e.beta_approx;
    j["beta_over_m"] = e.beta_approx / static_cast<double>(o.dim);
    j["eta_est"] = e.eta;
    j["T_rho2_est"] = e.beta_approx * 2.0 * std::log(2.0);
    j["T_est"] = e.T;
    row = detail::fmt(e.beta_approx) + "," + detail::fmt(e.beta_approx / static_cast<double>(o.dim)) +
          "," + detail::fmt(e.eta) + "," + detail::fmt(e.beta_approx * 2.0 * std::log(2.0)) + "," +
          std::to_string(e.T);
  } else {
    row = ",,,,";
  }
  j["manifest"] = man.to_json();
  const std::string base = "approx_" + target_name(t) + "_" + method_name(meth) + "_d" +
                           std::to_string(o.degree);
  detail::write_json(detail::out_path(c, base + ".json"), j);

  std::ofstream csv(detail::out_path(c, base + ".csv"));
  csv << "# manifest " << man.hash() << '\n';
  csv << "target,method,degree,a,b,error,smoothness,beta_over_m,eta_est,T_rho2_est,T_est\n";
  csv << target_name(t) << ',' << method_name(meth) << ',' << o.degree << ',' << detail::fmt(iv.a)
      << ',' << detail::fmt(iv.b) << ',' << detail::fmt(s.sup_error) << ',' << row << '\n';
  out << method_name(meth) << " degree " << o.degree << " on [" << iv.a << ", " << iv.b
      << "]: sup error " << detail::fixed(s.sup_error, 4);
  if (t == Target::Sigmoid) {
    out << ", smoothness " << detail::fixed(j["smoothness"].get<double>(), 4) << ", eta "
        << detail::fixed(j["eta_est"].get<double>(), 4) << ", T*rho^2 "
        << detail::fixed(j["T_rho2_est"].get<double>(), 2);
  }
  out << '\n';
  return kOk;
}

inline int cmd_select_params(const SelectOpts& o, const CommonOpts& c, std::ostream& out) {
  RunManifest man = detail::make_manifest("select-params", c);
  SelectionInput in;
  in.m = o.m;
  in.N = o.N;
  if (!o.data.path.empty()) {
    Dataset D = detail::load_dataset(o.data, man);
    in.m = D.m;
    in.N = D.N;
  }
  in.epsilon = o.epsilon;
  in.delta = o.delta;
  in.E_f = o.E_f;
  in.T = o.T;
  in.batch_n = o.batch;
  in.release_d = o.release_d;
  in.d = o.d;
  in.sigmoid_method = method_from_name(o.method);
  man.settings["m"] = std::to_string(in.m);
  man.settings["N"] = std::to_string(in.N);
  man.settings["epsilon"] = detail::fmt(in.epsilon);
  man.settings["delta"] = detail::fmt(in.delta);
  man.settings["E_f"] = detail::fmt(in.E_f);
  man.settings["T"] = std::to_string(in.T);
  man.settings["batch"] = std::to_string(in.batch_n);
  man.settings["release_d"] = in.release_d ? "1" : "0";
  man.settings["d"] = detail::fmt(in.d);
  man.settings["method"] = method_name(in.sigmoid_method);

  ParamBundle b = select_hyperparameters(in);
  json j = to_json(b);
  j["manifest"] = man.to_json();
  detail::write_json(detail::out_path(c, "bundle.json"), j);
  out << "feasible bundle after " << b.rounds << " rounds: Theta " << b.bp.Theta << ", lambda "
      << b.bp.lambda << ", kappa " << b.bp.kappa << ", eta " << b.cfg.eta << ", R "
      << detail::fixed(b.report.R, 4) << ", sigma " << detail::fixed(b.report.sigma, 6)
      << ", sigmoid degree " << b.sigmoid_fit.degree << " on [" << b.sigmoid_fit.interval.a << ", "
      << b.sigmoid_fit.interval.b << "]\n";
  return kOk;
}

inline int cmd_train(const TrainOpts& o, const CommonOpts& c, std::ostream& out) {
  static const std::vector<std::string> algos = {"approx", "dp", "noclip", "clipped", "output"};
  if (std::find(algos.begin(), algos.end(), o.algo) == algos.end()) {
    throw std::invalid_argument("--algo must be one of approx|dp|noclip|clipped|output");
  }
  RunManifest man = detail::make_manifest("train", c);
  Dataset D = detail::load_dataset(o.data, man);
  man.settings["algo"] = o.algo;

  std::optional<ParamBundle> bundle;
  if (!o.bundle.empty()) {
    man.add_input(o.bundle);
    bundle = bundle_from_json(read_json_file(o.bundle));
    if (bundle->m != D.m) throw std::invalid_argument("bundle dimension does not match the data");
  }
  if (o.algo == "noclip") {
    if (!bundle) throw InfeasibleError("train --algo noclip requires a feasibility bundle (--bundle)");
    if (!bundle->report.feasible()) throw InfeasibleError("bundle does not pass the feasibility checks");
    if (bundle->dp.N != D.N) {
      throw InfeasibleError("bundle was calibrated for N = " + std::to_string(bundle->dp.N) +
                            " records, data has " + std::to_string(D.N));
    }
  }

  // The sigmoid polynomial: an explicit file, a fit from flags, or the bundle's.
  std::optional<ApproxSpec> spec;
  if (!o.poly.empty()) {
    man.add_input(o.poly);
    spec = approx_spec_from_json(read_json_file(o.poly));
  } else if (o.interval.size() == 2) {
    man.settings["fit"] = o.method + ":" + std::to_string(o.degree) + ":" +
                          detail::fmt(o.interval[0]) + ":" + detail::fmt(o.interval[1]);
    spec = fit(Target::Sigmoid, {o.interval[0], o.interval[1]}, o.degree, method_from_name(o.method));
  } else if (bundle) {
    spec = bundle->sigmoid_fit;
  }
  const bool needs_poly = o.algo == "approx" || o.algo == "dp" || o.algo == "noclip";
  if (needs_poly && !spec) throw std::invalid_argument("no sigmoid polynomial: pass --poly, --interval or --bundle");
  if (o.algo == "noclip" && spec && !(spec->poly == bundle->sigmoid_fit.poly)) {
    throw InfeasibleError("noclip must use the bundle's own sigmoid polynomial");
  }

  TrainConfig cfg;
  cfg.seed = c.seed;
  cfg.rho = o.rho;
  cfg.batch_n = o.batch;
  cfg.lambda_ridge = o.ridge;
  cfg.divergence_norm = o.divergence_norm;
  cfg.trace_every = o.trace_every;
  std::optional<LossDerivApprox> d;
  if (spec) d = detail::sigmoid_from(*spec);
  if (bundle && (o.algo == "noclip" || o.algo == "approx")) {
    cfg.eta = bundle->cfg.eta;
    cfg.T = bundle->cfg.T;
    cfg.batch_n = o.algo == "noclip" ? bundle->cfg.batch_n : cfg.batch_n;
  } else if (d) {
    EtaT e = estimate_eta_T(*d, d->interval, D.m, o.rho);
    cfg.eta = e.eta;
    cfg.T = e.T;
  } else {
    cfg.eta = 1.0;
    cfg.T = 100;
  }
  if (o.eta > 0) cfg.eta = o.eta;
  if (o.T > 0) cfg.T = o.T;
  if (o.algo == "noclip" && (cfg.eta != bundle->cfg.eta || cfg.T != bundle->cfg.T)) {
    throw InfeasibleError("noclip must use the bundle's eta and T");
  }
  man.settings["eta"] = detail::fmt(cfg.eta);
  man.settings["T"] = std::to_string(cfg.T);
  man.settings["batch"] = std::to_string(cfg.batch_n);
  man.settings["rho"] = detail::fmt(cfg.rho);
  man.settings["epsilon"] = detail::fmt(o.epsilon);
  man.settings["delta"] = detail::fmt(o.delta);
  man.settings["sigma"] = detail::fmt(o.sigma);
  man.settings["clip"] = detail::fmt(o.clip);
  man.settings["ridge"] = detail::fmt(o.ridge);
  man.settings["no_barrier"] = o.no_barrier ? "1" : "0";
  man.settings["trace_every"] = std::to_string(o.trace_every);
  man.settings["divergence_norm"] = detail::fmt(o.divergence_norm);

  RunTrace tr;
  double sigma = 0.0;
  bool barrier = false;
  std::size_t n_eff = cfg.batch_n ? std::min(cfg.batch_n, D.N) : D.N;
  if (o.algo == "approx") {
    if (bundle && !o.no_barrier) {
      DPParams dp = bundle->dp;
      dp.sigma = 0.0;
      barrier = true;
      tr = noclip_dp_gd(D, bundle->bp, *d, cfg, dp, &bundle->report);
    } else {
      tr = approx_gd(D, *d, cfg);
    }
  } else if (o.algo == "dp") {
    DPParams dp = make_dp_params(o.epsilon, o.delta, n_eff, cfg.T, d->e_f, D.m);
    if (o.sigma >= 0) dp.sigma = o.sigma;
    sigma = dp.sigma;
    tr = dp_approx_gd(D, *d, cfg, dp);
  } else if (o.algo == "noclip") {
    barrier = true;
    sigma = bundle->dp.sigma;
    tr = noclip_dp_gd(D, bundle->bp, *d, cfg, bundle->dp, &bundle->report);
  } else if (o.algo == "clipped") {
    DPParams dp;
    dp.epsilon = o.epsilon;
    dp.delta = o.delta;
    dp.clip_C = std::isfinite(o.clip) ? o.clip : std::numeric_limits<double>::max();
    dp.sigma = std::isfinite(o.clip) ? clipped_sigma(o.clip, cfg.T, o.epsilon, o.delta, n_eff) : 0.0;
    if (o.sigma >= 0) dp.sigma = o.sigma;
    sigma = dp.sigma;
    tr = clipped_dp_gd(D, spec ? &*d : nullptr, cfg, dp);
  } else {
    sigma = o.sigma >= 0 ? o.sigma
                         : output_perturbation_sigma(D.N, D.m, o.ridge, o.epsilon, o.delta);
    tr = output_perturbation_gd(D, cfg, sigma);
  }

  // A z outside the polynomial's interval voids the approximation.
  bool z_escape = false;
  double bound = 0.0;
  if (d && (o.algo != "clipped" || spec) && o.algo != "output") {
    bound = std::min(-d->interval.a, d->interval.b);
    z_escape = tr.max_abs_z > bound;
  }
  const bool diverged = tr.diverged || z_escape;
  std::string reason = tr.diverged ? tr.divergence_reason : (z_escape ? "z left the approximation interval" : "");

  json j;
  j["algo"] = o.algo;
  j["barrier"] = barrier;
  j["N"] = D.N;
  j["m"] = D.m;
  j["eta"] = cfg.eta;
  j["T"] = cfg.T;
  j["sigma"] = sigma;
  j["iterations"] = tr.iterations;
  j["diverged"] = diverged;
  j["divergence_reason"] = reason;
  j["max_abs_z"] = tr.max_abs_z;
  j["interval_bound"] = bound;
  j["max_w_norm"] = tr.max_w_norm;
  if (!tr.rows.empty()) {
    j["final_loss"] = tr.rows.back().loss;
    j["final_grad_norm"] = tr.rows.back().grad_norm;
  }
  bool finite = std::all_of(tr.w.begin(), tr.w.end(), [](double v) { return std::isfinite(v); });
  if (finite) {
    j["train_accuracy"] = accuracy(tr.w, D);
    j["train_auc"] = auc(tr.w, D);
  }
  j["w"] = tr.w;
  j["manifest"] = man.to_json();
  detail::write_json(detail::out_path(c, "train_" + o.algo + ".json"), j);
  std::ofstream tf(detail::out_path(c, "trace_" + o.algo + ".csv"));
  write_trace_csv(tf, tr, man.hash());

  out << o.algo << (barrier ? " (barrier)" : "") << ": " << tr.iterations << " iterations, max |z| "
      << detail::fixed(tr.max_abs_z, 4);
  if (finite) out << ", train accuracy " << detail::fixed(j["train_accuracy"].get<double>(), 4);
  out << (diverged ? ", DIVERGED: " + reason : "") << '\n';
  if (diverged) throw DivergedExit{reason};
  return kOk;
}

inline int cmd_depth_report(const DepthOpts& o, const CommonOpts& c, std::ostream& out) {
  RunManifest man = detail::make_manifest("depth-report", c);
  man.settings["analytic"] = o.analytic ? "1" : "0";
  auto rows = depth_table();
  std::ofstream csv(detail::out_path(c, "depth_report.csv"));
  csv << "# manifest " << man.hash() << '\n';
  csv << "step,clipped,noclip,output\n";
  out << std::left << std::setw(34) << "Step" << std::setw(14) << "clipped" << std::setw(14)
      << "noclip" << "output\n";
  for (const auto& r : rows) {
    csv << '"' << r.step << "\"," << r.clipped << ',' << r.noclip << ',' << r.output << '\n';
    out << std::left << std::setw(34) << r.step << std::setw(14) << r.clipped << std::setw(14)
        << r.noclip << r.output << '\n';
  }
  if (o.analytic) {
    std::ofstream a(detail::out_path(c, "depth_analytic.csv"));
    a << "# manifest " << man.hash() << '\n';
    a << "algo,step,charged,analytic,differs\n";
    for (auto algo : {CircuitAlgo::ClippedAlg4, CircuitAlgo::NoClipAlg5, CircuitAlgo::OutputGD}) {
      DepthTrace t = analytic_depth_mode(algo);
      for (const auto& s : t.steps) {
        a << algo_name(algo) << ",\"" << s.label << "\"," << s.charged << ',' << s.analytic << ','
          << (s.analytic != s.charged ? 1 : 0) << '\n';
      }
      a << algo_name(algo) << ",\"" << labels::kTotal << "\","
        << run_iteration_circuit(algo).total << ',' << t.total << ",1\n";
      for (const DepthStep* s : t.discrepancies()) {
        out << "analytic " << algo_name(algo) << ": '" << s->label << "' costs +" << s->analytic
            << " against +" << s->charged << " charged\n";
      }
    }
  }
  return kOk;
}

struct BenchRow {
  std::string dataset;
  std::string model;
  std::vector<double> acc;
  std::vector<double> auc;
};

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  double mean = s / static_cast<double>(v.size());
  double q = 0;
  for (double x : v) q += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(q / static_cast<double>(v.size() - 1)) : 0.0};
}

// Runs `job(k)` for k in [0, n) on a pool of workers; results are written by
// index so the output does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t n, std::size_t threads, Job&& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex mu;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next++) < n;) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Clipped DP-GD, no-clip DP-GD and output perturbation on a seeded split,
// mean and standard deviation over `runs` noise seeds.
inline std::vector<BenchRow> run_bench_dataset(const std::string& name, const Dataset& D,
                                               const BenchOpts& o, std::uint64_t seed) {
  auto [train, test] = split(D, o.test_fraction, seed);

  SelectionInput in;
  in.m = train.m;
  in.N = train.N;
  in.epsilon = o.epsilon;
  in.delta = o.delta;
  in.E_f = o.E_f;
  in.T = o.T;
  ParamBundle b = select_hyperparameters(in);
  LossDerivApprox d = make_loss_deriv(b.sigmoid_fit);

  TrainConfig clip_cfg;
  clip_cfg.eta = o.eta_clip;
  clip_cfg.T = o.T;
  clip_cfg.record_trace = false;
  DPParams clip_dp;
  clip_dp.clip_C = o.clip;
  clip_dp.sigma = clipped_sigma(o.clip, o.T, o.epsilon, o.delta, train.N);

  TrainConfig out_cfg;
  out_cfg.eta = o.eta_clip;
  out_cfg.T = o.T;
  out_cfg.lambda_ridge = o.ridge;
  out_cfg.record_trace = false;
  const double sigma_out = output_perturbation_sigma(train.N, train.m, o.ridge, o.epsilon, o.delta);
  // The pre-noise ridge model is deterministic; only its release noise varies.
  TrainConfig pre = out_cfg;
  pre.eta = std::min(out_cfg.eta, 1.0 / (logistic_smoothness(train) + o.ridge));
  const Weights w_ridge = exact_gd(train, pre, o.ridge).w;

  std::vector<BenchRow> rows = {{name, "model1_dpgd", {}, {}},
                                {name, "model2_noclipping", {}, {}},
                                {name, "model3_output_GD", {}, {}}};
  for (auto& r : rows) {
    r.acc.assign(o.runs, 0.0);
    r.auc.assign(o.runs, 0.0);
  }
  parallel_for(o.runs, o.threads, [&](std::size_t k) {
    const std::uint64_t s = seed + 1 + k;
    TrainConfig c1 = clip_cfg;
    c1.seed = s;
    Weights w1 = clipped_dp_gd(train, nullptr, c1, clip_dp).w;
    TrainConfig c2 = b.cfg;
    c2.seed = s;
    c2.record_trace = false;
    Weights w2 = noclip_dp_gd(train, b.bp, d, c2, b.dp, &b.report).w;
    Rng rng(s);
    Weights chi = gaussian_vector(train.m, sigma_out, rng);
    Weights w3 = w_ridge;
    for (std::size_t j = 0; j < w3.size(); ++j) w3[j] = w3[j] + chi[j];
    const Weights* ws[3] = {&w1, &w2, &w3};
    for (int r = 0; r < 3; ++r) {
      rows[r].acc[k] = accuracy(*ws[r], test);
      rows[r].auc[k] = auc(*ws[r], test);
    }
  });
  return rows;
}

inline int cmd_bench(const BenchOpts& o, const CommonOpts& c, std::ostream& out) {
  if (o.data.empty()) throw std::invalid_argument("bench needs at least one --data file");
  if (o.labels.size() != o.data.size()) {
    throw std::invalid_argument("give one --label per --data (use '-' for canonical CSVs)");
  }
  RunManifest man = detail::make_manifest("bench", c);
  man.settings["runs"] = std::to_string(o.runs);
  man.settings["epsilon"] = detail::fmt(o.epsilon);
  man.settings["delta"] = detail::fmt(o.delta);
  man.settings["test_fraction"] = detail::fmt(o.test_fraction);
  man.settings["T"] = std::to_string(o.T);
  man.settings["eta_clip"] = detail::fmt(o.eta_clip);
  man.settings["clip"] = detail::fmt(o.clip);
  man.settings["E_f"] = detail::fmt(o.E_f);
  man.settings["ridge"] = detail::fmt(o.ridge);
  std::vector<BenchRow> all;
  for (std::size_t k = 0; k < o.data.size(); ++k) {
    DataOpts dopt;
    dopt.path = o.data[k];
    dopt.label = o.labels[k] == "-" ? "" : o.labels[k];
    dopt.pca = o.pca;
    Dataset D = detail::load_dataset(dopt, man);
    std::string name = k < o.names.size() ? o.names[k]
                                          : std::filesystem::path(o.data[k]).stem().string();
    auto rows = run_bench_dataset(name, D, o, c.seed);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  const std::string h = man.hash();
  std::ofstream csv(detail::out_path(c, "bench.csv"));
  csv << "# manifest " << h << '\n';
  csv << "dataset,model,runs,acc_mean,acc_std,auc_mean,auc_std\n";
  std::ofstream per(detail::out_path(c, "bench_runs.csv"));
  per << "# manifest " << h << '\n';
  per << "dataset,model,run,accuracy,auc\n";
  for (const auto& r : all) {
    auto [am, as] = mean_std(r.acc);
    auto [um, us] = mean_std(r.auc);
    csv << r.dataset << ',' << r.model << ',' << r.acc.size() << ',' << detail::fmt(am) << ','
        << detail::fmt(as) << ',' << detail::fmt(um) << ',' << detail::fmt(us) << '\n';
    for (std::size_t k = 0; k < r.acc.size(); ++k) {
      per << r.dataset << ',' << r.model << ',' << k << ',' << detail::fmt(r.acc[k]) << ','
          << detail::fmt(r.auc[k]) << '\n';
    }
    out << std::left << std::setw(10) << r.dataset << std::setw(20) << r.model << "accuracy "
        << detail::fixed(am, 4) << " +- " << detail::fixed(as, 4) << "  auc " << detail::fixed(um, 4)
        << " +- " << detail::fixed(us, 4) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private logistic regression under polynomial approximation"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  CommonOpts common;
  ApproxOpts ao;
  SelectOpts so;
  TrainOpts to;
  DepthOpts dopt;
  BenchOpts bo;

  auto* a = app.add_subcommand("approx", "fit a polynomial and estimate step size and steps");
  detail::add_common(a, common);
  a->add_option("--target", ao.target, "sigmoid|reciprocal|sqrt|invsqrt");
  a->add_option("--method", ao.method, "minimax|ls|taylor");
  a->add_option("--degree", ao.degree);
  a->add_option("--interval", ao.interval)->expected(2);
  a->add_option("--rho", ao.rho, "gradient-norm tolerance");
  a->add_option("--dim", ao.dim, "feature dimension m");

  auto* s = app.add_subcommand("select-params", "data-independent hyperparameter selection");
  detail::add_common(s, common);
  detail::add_data(s, so.data);
  s->add_option("--m", so.m);
  s->add_option("--N", so.N);
  s->add_option("--epsilon", so.epsilon);
  s->add_option("--delta", so.delta);
  s->add_option("--E-f", so.E_f, "target sigmoid approximation error");
  s->add_option("--T", so.T);
  s->add_option("--batch", so.batch, "0 for full batch");
  s->add_flag("--release-d", so.release_d);
  s->add_option("--d", so.d);
  s->add_option("--method", so.method, "sigmoid fit: minimax|ls");

  auto* t = app.add_subcommand("train", "train one model");
  detail::add_common(t, common);
  detail::add_data(t, to.data);
  t->add_option("--algo", to.algo, "approx|dp|noclip|clipped|output")->required();
  t->add_option("--bundle", to.bundle, "bundle from select-params");
  t->add_option("--poly", to.poly, "sigmoid fit JSON from approx");
  t->add_option("--method", to.method, "fit method when --interval is given");
  t->add_option("--degree", to.degree);
  t->add_option("--interval", to.interval, "fit the sigmoid on this interval")->expected(2);
  t->add_option("--eta", to.eta);
  t->add_option("--T", to.T);
  t->add_option("--rho", to.rho);
  t->add_option("--batch", to.batch);
  t->add_option("--epsilon", to.epsilon);
  t->add_option("--delta", to.delta);
  t->add_option("--sigma", to.sigma, "override the calibrated noise scale");
  t->add_option("--clip", to.clip, "clipping norm C (inf disables clipping)");
  t->add_option("--ridge", to.ridge, "ridge strength for output perturbation");
  t->add_flag("--no-barrier", to.no_barrier);
  t->add_option("--divergence-norm", to.divergence_norm);
  t->add_option("--trace-every", to.trace_every, "store a trace row every k iterations");

  auto* d = app.add_subcommand("depth-report", "multiplicative depth per iteration");
  detail::add_common(d, common);
  d->add_flag("--analytic", dopt.analytic, "also account depth from raw operations");

  auto* b = app.add_subcommand("bench", "accuracy and AUC over repeated private runs");
  detail::add_common(b, common);
  b->add_option("--data", bo.data)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  b->add_option("--label", bo.labels)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  b->add_option("--name", bo.names)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  b->add_option("--pca", bo.pca);
  b->add_option("--runs", bo.runs);
  b->add_option("--epsilon", bo.epsilon);
  b->add_option("--delta", bo.delta);
  b->add_option("--test-fraction", bo.test_fraction);
  b->add_option("--T", bo.T);
  b->add_option("--eta-clip", bo.eta_clip);
  b->add_option("--clip", bo.clip);
  b->add_option("--E-f", bo.E_f);
  b->add_option("--ridge", bo.ridge);
  b->add_option("--threads", bo.threads);

  std::vector<std::string> args;
  try {
    args = detail::expand_config(raw_args);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOther;
  }
  std::vector<const char*> argv;
  for (const auto& x : args) argv.push_back(x.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kOther;
  }

  try {
    if (a->parsed()) return cmd_approx(ao, common, out);
    if (s->parsed()) return cmd_select_params(so, common, out);
    if (t->parsed()) return cmd_train(to, common, out);
    if (d->parsed()) return cmd_depth_report(dopt, common, out);
    if (b->parsed()) return cmd_bench(bo, common, out);
  } catch (const DivergedExit&) {
    return kDiverged;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << '\n';
    return kFitFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}

}  // namespace fhedp::cli

#endif  // FHEDP_CLI_HPP_
