// Copyright 2026 The PS-CARE Authors.
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

#include "pscare/cli.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "pscare/bench.h"
#include "pscare/estimator.h"
#include "pscare/io.h"
#include "pscare/mdl.h"
#include "pscare/pelt.h"
#include "pscare/simulator.h"

namespace pscare {
namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int DefaultThreads() {
  if (const char* env = std::getenv("PSCARE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096) {
      return static_cast<int>(v);
    }
    throw InputError(std::string("PSCARE_THREADS must be a positive integer, "
                                 "got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string Join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    s += (k ? ", " : "") + std::to_string(v[k]);
  }
  return "[" + s + "]";
}

// Options shared by the commands that fit.
struct FitOptions {
  int max_iters = FitConfig{}.max_iters;
  double grad_tol = FitConfig{}.grad_tol;
  double ridge = 0;

  void Register(CLI::App* app) {
    app->add_option("--max-iters", max_iters, "Gradient iterations per fit")
        ->capture_default_str();
    app->add_option("--grad-tol", grad_tol,
                    "Projected-gradient sup-norm at convergence")
        ->capture_default_str();
    app->add_option("--ridge", ridge, "L2 penalty weight")
        ->capture_default_str();
  }
  FitConfig Config() const {
    FitConfig c;
    c.max_iters = max_iters;
    c.grad_tol = grad_tol;
    c.ridge = ridge;
    c.Validate();
    return c;
  }
};

struct MdlOptions {
  std::string nll_scale = "log2e";
  std::string param_count = "full";

  void Register(CLI::App* app) {
    app->add_option("--nll-scale", nll_scale,
                    "log2e (NLL times log2 e) or natural")
        ->capture_default_str();
    app->add_option("--param-count", param_count,
                    "full (n+d-1) or constrained (n-1)")
        ->capture_default_str();
  }
  MdlConfig Config() const {
    MdlConfig c;
    c.nll_scale = ParseNllScale(nll_scale);
    c.param_count_rule = ParseParamCountRule(param_count);
    return c;
  }
};

struct SimulateCommand {
  int n = 10;
  int d = 0;
  int k = 3;
  int delta = 400;
  uint64_t seed = 1;
  std::string out_dir;

  void Register(CLI::App* app) {
    app->add_option("--n", n, "Number of items")->required();
    app->add_option("--d", d, "Covariate dimension")->capture_default_str();
    app->add_option("--k", k, "Number of change points")->capture_default_str();
    app->add_option("--delta", delta, "Segment length")->required();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--out-dir", out_dir, "Output directory")->required();
  }

  int Run(std::ostream& out) const {
    SimSpec spec;
    spec.n = n;
    spec.d = d;
    spec.K = k;
    spec.delta = delta;
    spec.seed = seed;
    const SimOutput sim = GenDataset(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw InputError("cannot create " + out_dir + ": " + ec.message());
    const std::filesystem::path dir(out_dir);
    {
      std::ofstream f(dir / "comparisons.csv");
      if (!f) throw InputError("cannot write " + (dir / "comparisons.csv").string());
      WriteComparisonsCsv(sim.dataset, f);
    }
    {
      std::ofstream f(dir / "covariates.csv");
      if (!f) throw InputError("cannot write " + (dir / "covariates.csv").string());
      WriteCovariatesCsv(sim.dataset, f);
    }
    WriteJsonFile(TruthToJson(spec, sim), (dir / "truth.json").string());
    out << "wrote " << sim.dataset.T() << " comparisons of " << n
        << " items (d=" << d << ") to " << out_dir << "; change points "
        << Join(sim.true_changepoints) << '\n';
    return kExitOk;
  }
};

struct DetectCommand {
  std::string comparisons;
  std::string covariates;
  std::string out_path;
  int min_seg_len = 0;
  double gamma = 0;
  double prune_constant = 0;
  std::string prune_rule = "safe";
  int max_changepoints = 0;
  int prefix = 0;
  int threads = 0;
  bool no_prune = false;
  bool oracle = false;
  FitOptions fit;
  MdlOptions mdl;
  CLI::Option* min_seg_len_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* prune_opt = nullptr;
  CLI::Option* max_cp_opt = nullptr;
  CLI::Option* prefix_opt = nullptr;
  CLI::Option* threads_opt = nullptr;

  void Register(CLI::App* app) {
    app->add_option("--comparisons", comparisons, "comparisons.csv")
        ->required();
    app->add_option("--covariates", covariates, "covariates.csv (optional if d=0)");
    app->add_option("--out", out_path, "report.json")->required();
    min_seg_len_opt = app->add_option("--min-seg-len", min_seg_len,
                                      "L (default max(30, 2(n+d)))");
    gamma_opt = app->add_option("--gamma", gamma,
                                "Penalty per segment (default log T)");
    prune_opt = app->add_option("--prune-constant", prune_constant,
                                "R (overrides --prune-rule)");
    app->add_option("--prune-rule", prune_rule,
                    "safe: R = -p/2 log(T/4); aggressive: R = p/2 log(8 pi / T)")
        ->capture_default_str();
    max_cp_opt = app->add_option("--max-changepoints", max_changepoints,
                                 "M (default ceil(T/L) + 1)");
    prefix_opt = app->add_option("--prefix", prefix,
                                 "Use only comparisons 1..prefix");
    threads_opt = app->add_option(
        "--threads", threads,
        "Fitting threads (default PSCARE_THREADS or all cores)");
    app->add_flag("--no-prune", no_prune, "Disable candidate pruning");
    app->add_flag("--oracle", oracle,
                  "Cross-check against the exhaustive search (T <= 60)");
    fit.Register(app);
    mdl.Register(app);
  }

  int Run(std::ostream& out) const {
    const auto t0 = Clock::now();
    ComparisonDataset data = ReadDataset(comparisons, covariates);
    if (prefix_opt->count() > 0) data = data.Prefix(prefix);
    PhaseTimings timings;
    timings.ingest_s = Since(t0);

    DetectConfig dc;
    if (min_seg_len_opt->count() > 0) dc.min_seg_len = min_seg_len;
    if (gamma_opt->count() > 0) dc.gamma = gamma;
    dc.prune_rule = ParsePruneRule(prune_rule);
    if (prune_opt->count() > 0) dc.prune_constant = prune_constant;
    if (max_cp_opt->count() > 0) dc.max_changepoints = max_changepoints;
    dc.pruning_enabled = !no_prune;
    dc.threads = threads_opt->count() > 0 ? threads : DefaultThreads();
    const FitConfig fit_config = fit.Config();
    const MdlConfig mdl_config = mdl.Config();
    if (oracle && data.T() > 60) {
      throw InputError("--oracle needs T <= 60, got T=" +
                       std::to_string(data.T()) + " (see --prefix)");
    }

    FitCache cache(data, fit_config);
    const auto t1 = Clock::now();
    const Segmentation seg = Detect(data, dc, fit_config, mdl_config, &cache);
    const double detect_s = Since(t1);
    timings.fitting_s = seg.final_fit_seconds;
    timings.search_s = detect_s - seg.final_fit_seconds;

    nlohmann::json oracle_json;
    if (oracle) {
      const auto t2 = Clock::now();
      const Segmentation brute =
          BruteForceDetect(data, dc, fit_config, mdl_config, &cache);
      timings.oracle_s = Since(t2);
      const double diff = std::abs(brute.objective - seg.objective);
      const bool match = brute.tau_hat == seg.tau_hat && diff <= 1e-8;
      oracle_json = {{"match", match},
                     {"tau_hat", brute.tau_hat},
                     {"objective", brute.objective},
                     {"objective_abs_diff", diff}};
      out << "oracle: " << (match ? "match" : "MISMATCH") << " (exhaustive tau "
          << Join(brute.tau_hat) << ", objective difference " << std::scientific
          << std::setprecision(2) << diff << std::defaultfloat << ")\n";
    }

    nlohmann::json report =
        ReportToJson(seg, data, fit_config, comparisons, covariates, timings);
    if (oracle) report["oracle"] = oracle_json;
    WriteJsonFile(report, out_path);

    out << "K_hat = " << seg.K_hat << ", tau_hat = " << Join(seg.tau_hat)
        << ", MDL = " << std::fixed << std::setprecision(4) << seg.mdl.total
        << std::defaultfloat << '\n';
    int flagged = 0;
    for (const SegmentResult& r : seg.segments) {
      flagged += !r.fit.converged || r.fit.separated || r.fit.ridge_fallback;
    }
    if (flagged > 0) {
      out << flagged << " segment fit(s) flagged; see " << out_path << '\n';
    }
    out << "report written to " << out_path << '\n';
    return kExitOk;
  }
};

struct FitCommand {
  std::string comparisons;
  std::string covariates;
  std::string json_path;
  int start = 0;
  int end = 0;
  FitOptions fit;

  void Register(CLI::App* app) {
    app->add_option("--comparisons", comparisons, "comparisons.csv")
        ->required();
    app->add_option("--covariates", covariates, "covariates.csv");
    app->add_option("--start", start, "First comparison (1-based)")
        ->required();
    app->add_option("--end", end, "Last comparison (inclusive)")->required();
    app->add_option("--json", json_path, "Also write the fit as JSON");
    fit.Register(app);
  }

  int Run(std::ostream& out) const {
    const ComparisonDataset data = ReadDataset(comparisons, covariates);
    const SegmentSpan span{start, end};
    ValidateSpan(span, data.T());
    const SegmentFit f = FitSegment(data, span, fit.Config());
    const Eigen::VectorXd theta = f.xi_hat.Scores(data.covariates());
    out << "span [" << start << ", " << end << "]  nll = " << std::setprecision(17)
        << f.nll << std::setprecision(6) << "  iters = " << f.iters
        << "  converged = " << (f.converged ? "yes" : "no")
        << "  grad_norm = " << f.grad_norm << '\n';
    out << "item  alpha  theta\n";
    for (int i = 0; i < data.n(); ++i) {
      out << data.labels()[i] << "  " << std::setprecision(17) << f.xi_hat.alpha[i]
          << "  " << theta[i] << '\n';
    }
    for (int j = 0; j < data.d(); ++j) {
      out << "beta[" << j + 1 << "]  " << f.xi_hat.beta[j] << '\n';
    }
    if (!f.diagnostic.empty()) out << "note: " << f.diagnostic << '\n';
    if (!json_path.empty()) WriteJsonFile(SegmentFitToJson(f, data), json_path);
    return kExitOk;
  }
};

struct RankCommand {
  std::string report;

  void Register(CLI::App* app) {
    app->add_option("--report", report, "report.json from detect")->required();
  }

  int Run(std::ostream& out) const {
    PrintRankings(RankingsFromReport(ReadJsonFile(report)), out);
    return kExitOk;
  }
};

struct BenchCommand {
  BenchSpec spec;
  int threads = 0;
  std::string json_path;
  std::string prune_rule = "safe";
  MdlOptions mdl;
  CLI::Option* threads_opt = nullptr;

  void Register(CLI::App* app) {
    app->add_option("--setting", spec.setting, "1 (d=0) or 2 (d=5)")
        ->capture_default_str();
    app->add_option("--n", spec.n, "Number of items")->capture_default_str();
    app->add_option("--k", spec.K, "Number of change points")
        ->capture_default_str();
    app->add_option("--delta", spec.delta, "Segment length")
        ->capture_default_str();
    app->add_option("--reps", spec.reps, "Replications")->capture_default_str();
    app->add_option("--seed", spec.seed, "Master seed")->capture_default_str();
    threads_opt = app->add_option("--threads", threads, "Fitting threads");
    app->add_option("--json", json_path, "Also write per-replication results");
    app->add_option("--prune-rule", prune_rule, "safe or aggressive")
        ->capture_default_str();
    mdl.Register(app);
  }

  int Run(std::ostream& out) {
    spec.mdl = mdl.Config();
    spec.detect.prune_rule = ParsePruneRule(prune_rule);
    spec.detect.threads = threads_opt->count() > 0 ? threads : DefaultThreads();
    const BenchSummary summary = RunBench(spec);
    out << FormatBenchTable(summary);
    if (!json_path.empty()) WriteJsonFile(BenchToJson(summary), json_path);
    return kExitOk;
  }
};

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app("Change-point detection for pairwise comparison data", "pscare");
  app.require_subcommand(1);
  SimulateCommand simulate;
  DetectCommand detect;
  FitCommand fit;
  RankCommand rank;
  BenchCommand bench;
  CLI::App* simulate_app =
      app.add_subcommand("simulate", "Generate a synthetic dataset");
  CLI::App* detect_app = app.add_subcommand("detect", "Detect change points");
  CLI::App* fit_app = app.add_subcommand("fit", "Fit one segment");
  CLI::App* rank_app =
      app.add_subcommand("rank", "Print per-segment rankings from a report");
  CLI::App* bench_app =
      app.add_subcommand("bench", "Monte-Carlo detection benchmark");
  simulate.Register(simulate_app);
  detect.Register(detect_app);
  fit.Register(fit_app);
  rank.Register(rank_app);
  bench.Register(bench_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    const std::string usage = sub != nullptr ? sub->help() : app.help();
    if (dynamic_cast<const CLI::CallForHelp*>(&e) != nullptr) {
      out << usage;
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << usage;
    return kExitInputError;
  }

  try {
    if (simulate_app->parsed()) return simulate.Run(out);
    if (detect_app->parsed()) return detect.Run(out);
    if (fit_app->parsed()) return fit.Run(out);
    if (rank_app->parsed()) return rank.Run(out);
    if (bench_app->parsed()) return bench.Run(out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    err << "internal failure: " << e.what() << '\n';
    return kExitNumericalError;
  }
  return kExitInputError;
}

}  // namespace pscare
