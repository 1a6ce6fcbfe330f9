#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ifest/errors.hpp"
#include "ifest/estimators.hpp"
#include "ifest/parallel.hpp"
#include "ifest/rng.hpp"
#include "ifest/samples.hpp"
#include "ifest/stats.hpp"
#include "ifest/synthdata.hpp"

namespace {

using namespace ifest;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOpts {
  std::string functional;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  int zdim = 0;
  int xdim = 0;
  std::string bandwidth = "auto";
  int kernel_order = 2;
  std::string clamp;
  std::uint64_t seed = 0;
  int grid = 0;
  std::string boundary = "mirror";
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool with_functional) {
  if (with_functional) {
    cmd->add_option("--functional", o.functional, "functional tag")->required();
    cmd->add_option("--alpha", o.alpha, "alpha parameter");
    cmd->add_option("--beta", o.beta, "second exponent (power_integral)");
    cmd->add_option("--zdim", o.zdim, "conditioning block width");
    cmd->add_option("--xdim", o.xdim, "X block width for MI kinds");
  }
  cmd->add_option("--bandwidth", o.bandwidth, "auto or h[,h2]");
  cmd->add_option("--kernel-order", o.kernel_order, "kernel order (0..6)")
      ->check(CLI::Range(0, 6));
  cmd->add_option("--clamp", o.clamp, "truncation bounds B',B (B may be inf)");
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--grid", o.grid, "quadrature points per axis");
  cmd->add_option("--boundary", o.boundary, "mirror or none")
      ->check(CLI::IsMember({"mirror", "none"}));
}

FunctionalSpec make_spec(const CommonOpts& o) {
  FunctionalSpec spec;
  spec.kind = kind_from_name(o.functional);
  if (spec.kind == Kind::f_divergence) {
    throw std::invalid_argument(
        "f_divergence takes user callbacks and is library-only");
  }
  if (spec.needs_alpha() || spec.kind == Kind::power_integral) {
    if (std::isnan(o.alpha)) {
      throw std::invalid_argument("--alpha is required for this functional");
    }
    spec.alpha = o.alpha;
  }
  if (spec.kind == Kind::power_integral) {
    spec.beta_exponent = std::isnan(o.beta) ? 1.0 - o.alpha : o.beta;
  }
  spec.z_dim = o.zdim;
  spec.x_dim = o.xdim;
  spec.validate();
  return spec;
}

EstimatorConfig make_config(const CommonOpts& o) {
  EstimatorConfig cfg;
  if (o.bandwidth != "auto") {
    cfg.bandwidth.auto_cv = false;
    std::stringstream ss(o.bandwidth);
    std::string tok;
    std::vector<double> hs;
    while (std::getline(ss, tok, ',')) hs.push_back(std::stod(tok));
    if (hs.empty() || hs.size() > 2) {
      throw std::invalid_argument("--bandwidth expects auto or h[,h2]");
    }
    cfg.bandwidth.fixed_f = hs[0];
    cfg.bandwidth.fixed_g = hs.size() == 2 ? hs[1] : hs[0];
  }
  cfg.kernel_order = o.kernel_order;
  if (!o.clamp.empty()) {
    std::stringstream ss(o.clamp);
    std::string lo, hi;
    if (!std::getline(ss, lo, ',') || !std::getline(ss, hi)) {
      throw std::invalid_argument("--clamp expects B',B");
    }
    cfg.clamp.lower = std::stod(lo);
    cfg.clamp.upper = (hi == "inf" || hi == "+inf")
                          ? std::numeric_limits<double>::infinity()
                          : std::stod(hi);
    if (cfg.clamp.lower < 0.0 || cfg.clamp.upper <= cfg.clamp.lower) {
      throw std::invalid_argument("--clamp needs 0 <= B' < B");
    }
  }
  cfg.boundary = o.boundary == "none" ? Boundary::none : Boundary::mirror;
  cfg.grid_points = o.grid;
  cfg.seed = o.seed;
  return cfg;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  return file;
}

std::uint64_t trial_seed(std::uint64_t root, std::size_t n_idx,
                         std::size_t trial, std::uint64_t stream) {
  return derive_seed(root, 1 + n_idx * 1000003ull + trial, stream);
}

// ---------------------------------------------------------------------------

int cmd_estimate(const CommonOpts& common, const std::string& x_path,
                 const std::string& y_path, const std::string& method_name_str,
                 double ci_level, bool json_mode, bool rescale) {
  const FunctionalSpec spec = make_spec(common);
  const EstimatorConfig cfg = make_config(common);
  const Method method = method_from_name(method_name_str);

  SampleSet x = read_sample_csv(x_path);
  std::optional<SampleSet> y;
  if (!y_path.empty()) y = read_sample_csv(y_path);
  if (rescale) {
    x.rescale(0.01, 0.99);
    if (y) y->rescale(0.01, 0.99);
  }

  const Estimate e = estimate(spec, method, x, y ? &*y : nullptr, cfg);

  std::pair<double, double> ci{0, 0};
  const bool want_ci = ci_level > 0.0;
  if (want_ci && !e.degenerate) ci = confidence_interval(e, ci_level);

  if (json_mode) {
    nlohmann::json j;
    j["functional"] = kind_name(spec.kind);
    j["method"] = method_name(method);
    j["value"] = e.value;
    j["variance_f"] = e.variance_f;
    j["variance_g"] = e.variance_g;
    j["n"] = e.n_used;
    j["m"] = e.m_used;
    j["degenerate"] = e.degenerate;
    if (want_ci) {
      if (e.degenerate) {
        j["ci"] = "DEGENERATE";
      } else {
        j["ci"] = {ci.first, ci.second};
        j["ci_level"] = ci_level;
        j["ci_conjectural"] = e.ci_conjectural;
      }
    }
    j["bandwidth_f"] = e.bandwidth_f;
    j["bandwidth_g"] = e.bandwidth_g;
    j["kernel_order"] = e.kernel_order;
    j["seed"] = e.seed;
    j["grid"] = cfg.grid_points;
    j["boundary"] = common.boundary;
    j["clamp_lower"] = cfg.clamp.lower;
    j["clamp_upper"] = cfg.clamp.upper;
    if (spec.needs_alpha() || spec.kind == Kind::power_integral) {
      j["alpha"] = spec.alpha;
    }
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "functional: " << kind_name(spec.kind) << "\n";
    std::cout << "method: " << method_name(method) << "\n";
    std::cout << "value: " << fmt(e.value) << "\n";
    std::cout << "variance_f: " << fmt(e.variance_f) << "\n";
    if (e.m_used > 0) std::cout << "variance_g: " << fmt(e.variance_g) << "\n";
    std::cout << "n: " << e.n_used;
    if (e.m_used > 0) std::cout << " m: " << e.m_used;
    std::cout << "\n";
    std::cout << "degenerate: " << (e.degenerate ? "true" : "false") << "\n";
    if (want_ci) {
      if (e.degenerate) {
        std::cout << "ci: DEGENERATE\n";
      } else {
        std::cout << "ci_" << ci_level << ": [" << fmt(ci.first) << ", "
                  << fmt(ci.second) << "]"
                  << (e.ci_conjectural ? " (conjectural)" : "") << "\n";
      }
    }
    std::cout << "config: bandwidth_f=" << fmt(e.bandwidth_f);
    if (e.m_used > 0) std::cout << " bandwidth_g=" << fmt(e.bandwidth_g);
    std::cout << " kernel_order=" << e.kernel_order << " seed=" << e.seed
              << " grid=" << cfg.grid_points << " boundary=" << common.boundary
              << " clamp=[" << fmt(cfg.clamp.lower) << ","
              << fmt(cfg.clamp.upper) << "]\n";
  }
  if (want_ci && e.degenerate) {
    throw DegenerateCase("confidence interval requested in a degenerate case");
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& dist, std::size_t n, std::uint64_t seed,
            const std::string& out_path) {
  const AnalyticDensity dens = AnalyticDensity::parse(dist);
  const SampleSet s = dens.sample(n, seed);
  if (out_path.empty()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t c = 0; c < s.dim(); ++c) {
        std::cout << fmt(s(i, c)) << (c + 1 < s.dim() ? "," : "");
      }
      std::cout << "\n";
    }
  } else {
    write_sample_csv(out_path, s);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchTaskResult {
  std::vector<double> estimates;  // per method
  std::vector<double> seconds;
};

int cmd_bench(const CommonOpts& common, const std::string& dist,
              const std::string& dist2, const std::string& n_list_str,
              int trials, const std::string& methods_str,
              const std::string& out_path, bool timing) {
  const FunctionalSpec spec = make_spec(common);
  const EstimatorConfig base_cfg = make_config(common);
  if (trials < 1) throw std::invalid_argument("--trials must be >= 1");

  std::vector<std::size_t> n_list;
  {
    std::stringstream ss(n_list_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const long v = std::stol(tok);
      if (v < 2) throw std::invalid_argument("--n-list entries must be >= 2");
      n_list.push_back(static_cast<std::size_t>(v));
    }
    if (n_list.empty()) throw std::invalid_argument("--n-list is empty");
  }
  std::vector<Method> methods;
  {
    std::stringstream ss(methods_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) methods.push_back(method_from_name(tok));
    if (methods.empty()) throw std::invalid_argument("--methods is empty");
  }

  const AnalyticDensity da = AnalyticDensity::parse(dist);
  std::optional<AnalyticDensity> db;
  if (spec.arity() == 2) {
    if (dist2.empty()) {
      throw DimensionMismatch("two-sample functional needs --dist2");
    }
    db = AnalyticDensity::parse(dist2);
  } else if (!dist2.empty()) {
    throw DimensionMismatch("--dist2 given for a one-sample functional");
  }

  const double truth =
      oracle_truth(spec, da, db ? &*db : nullptr, GridSpec::oracle(da.dim()));

  const std::size_t tasks = n_list.size() * static_cast<std::size_t>(trials);
  std::vector<BenchTaskResult> results(tasks);
  parallel_for(tasks, thread_budget(), [&](std::size_t task) {
    const std::size_t n_idx = task / static_cast<std::size_t>(trials);
    const std::size_t trial = task % static_cast<std::size_t>(trials);
    const std::size_t n = n_list[n_idx];
    const SampleSet x = da.sample(n, trial_seed(common.seed, n_idx, trial, 1));
    std::optional<SampleSet> y;
    if (db) y = db->sample(n, trial_seed(common.seed, n_idx, trial, 2));
    EstimatorConfig cfg = base_cfg;
    cfg.seed = trial_seed(common.seed, n_idx, trial, 3);
    BenchTaskResult& r = results[task];
    for (Method method : methods) {
      const auto start = std::chrono::steady_clock::now();
      const Estimate e = estimate(spec, method, x, y ? &*y : nullptr, cfg);
      const std::chrono::duration<double> dt =
          std::chrono::steady_clock::now() - start;
      r.estimates.push_back(e.value);
      r.seconds.push_back(dt.count());
    }
  });

  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  out << "functional,method,n,m,trial,estimate,truth,abs_error,seconds\n";
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t n_idx = 0; n_idx < n_list.size(); ++n_idx) {
      for (std::size_t trial = 0; trial < static_cast<std::size_t>(trials);
           ++trial) {
        const BenchTaskResult& r =
            results[n_idx * static_cast<std::size_t>(trials) + trial];
        const double est = r.estimates[mi];
        const std::size_t m = db ? n_list[n_idx] : 0;
        out << kind_name(spec.kind) << ',' << method_name(methods[mi]) << ','
            << n_list[n_idx] << ',' << m << ',' << trial << ',' << fmt(est)
            << ',' << fmt(truth) << ',' << fmt(std::abs(est - truth)) << ',';
        if (timing) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.6f", r.seconds[mi]);
          out << buf;
        } else {
          out << 0;
        }
        out << "\n";
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_qq(const CommonOpts& common, const std::string& dist,
           const std::string& dist2, std::size_t n, int trials,
           const std::string& method_str, const std::string& out_path) {
  const FunctionalSpec spec = make_spec(common);
  const EstimatorConfig base_cfg = make_config(common);
  const Method method = method_from_name(method_str);
  if (method == Method::plugin) {
    throw std::invalid_argument("qq supports ds and loo methods");
  }
  if (trials < 1) throw std::invalid_argument("--trials must be >= 1");

  const AnalyticDensity da = AnalyticDensity::parse(dist);
  std::optional<AnalyticDensity> db;
  if (spec.arity() == 2) {
    if (dist2.empty()) {
      throw DimensionMismatch("two-sample functional needs --dist2");
    }
    db = AnalyticDensity::parse(dist2);
  }
  const double truth =
      oracle_truth(spec, da, db ? &*db : nullptr, GridSpec::oracle(da.dim()));
  // A divergence of a distribution against itself has identically vanishing
  // influence functions; the asymptotic variance target is zero and the
  // standardized values are meaningless.
  if (spec.arity() == 2 && std::abs(truth) < 1e-9) {
    throw DegenerateCase(
        "degenerate configuration: the divergence of the supplied pair is 0");
  }

  struct Row {
    double estimate = 0.0, z = 0.0;
    bool degenerate = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(trials));
  parallel_for(rows.size(), thread_budget(), [&](std::size_t t) {
    const SampleSet x = da.sample(n, trial_seed(common.seed, 0, t, 1));
    std::optional<SampleSet> y;
    if (db) y = db->sample(n, trial_seed(common.seed, 0, t, 2));
    EstimatorConfig cfg = base_cfg;
    cfg.seed = trial_seed(common.seed, 0, t, 3);
    const Estimate e = estimate(spec, method, x, y ? &*y : nullptr, cfg);
    Row& r = rows[t];
    r.estimate = e.value;
    r.degenerate = e.degenerate;
    if (!e.degenerate) {
      const double big_n =
          static_cast<double>(e.n_used + e.m_used);
      double s2 = big_n / static_cast<double>(e.n_used) * e.variance_f;
      if (e.m_used > 0) {
        s2 += big_n / static_cast<double>(e.m_used) * e.variance_g;
      }
      r.z = std::sqrt(big_n) * (e.value - truth) / std::sqrt(s2);
    }
  });

  for (const Row& r : rows) {
    if (r.degenerate) {
      throw DegenerateCase(
          "asymptotic variance estimate vanished in a qq trial");
    }
  }

  // Ranks of the standardized values pair them with normal quantiles.
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].z < rows[b].z;
  });
  std::vector<std::size_t> rank(rows.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k + 1;

  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  out << "trial,estimate,standardized,rank,normal_quantile\n";
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const double q = inverse_normal_cdf(
        (static_cast<double>(rank[t]) - 0.5) / static_cast<double>(rows.size()));
    out << t << ',' << fmt(rows[t].estimate) << ',' << fmt(rows[t].z) << ','
        << rank[t] << ',' << fmt(q) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_affinity(const CommonOpts& common, const std::string& inputs_str,
                 const std::string& divergence, const std::string& method_str,
                 double scale, const std::string& out_path, bool rescale) {
  if (divergence != "hellinger" && divergence != "tsallis_div" &&
      divergence != "renyi_div" && divergence != "hellinger_divergence" &&
      divergence != "tsallis_divergence" && divergence != "renyi_divergence") {
    throw std::invalid_argument(
        "--divergence must be hellinger, tsallis_div or renyi_div");
  }
  CommonOpts opts = common;
  opts.functional = divergence;
  const FunctionalSpec spec = make_spec(opts);
  const EstimatorConfig cfg = make_config(common);
  const Method method = method_from_name(method_str);
  if (method == Method::plugin) {
    throw std::invalid_argument("affinity supports ds and loo methods");
  }

  std::vector<std::string> paths;
  {
    std::stringstream ss(inputs_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) paths.push_back(tok);
    if (paths.size() < 2) {
      throw std::invalid_argument("--inputs needs at least two files");
    }
  }
  std::vector<SampleSet> sets;
  sets.reserve(paths.size());
  for (const auto& p : paths) {
    sets.push_back(read_sample_csv(p));
    if (rescale) sets.back().rescale(0.01, 0.99);
  }

  const std::size_t k = sets.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> affinity(pairs.size());
  parallel_for(pairs.size(), thread_budget(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double dij =
        estimate(spec, method, sets[i], &sets[j], cfg).value;
    const double dji =
        estimate(spec, method, sets[j], &sets[i], cfg).value;
    const double sym = std::max(0.5 * (dij + dji), 0.0);
    affinity[p] = std::exp(-scale * sym);
  });

  std::vector<std::vector<double>> a(k, std::vector<double>(k, 1.0));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    a[i][j] = affinity[p];
    a[j][i] = affinity[p];
  }
  std::ofstream file;
  std::ostream& out = open_out(file, out_path);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      out << fmt(a[i][j]) << (j + 1 < k ? "," : "");
    }
    out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"influence-function estimators for entropies, divergences and "
               "mutual informations"};
  app.require_subcommand(1);

  CommonOpts est_opts, bench_opts, qq_opts, aff_opts;

  // estimate
  auto* est = app.add_subcommand("estimate", "single-shot estimate from CSV");
  std::string est_x, est_y, est_method = "loo";
  double est_ci = 0.0;
  bool est_json = false, est_rescale = false;
  est->add_option("--x", est_x, "first sample CSV")->required();
  est->add_option("--y", est_y, "second sample CSV");
  est->add_option("--method", est_method)
      ->check(CLI::IsMember({"ds", "loo", "plugin"}));
  est->add_option("--ci", est_ci, "confidence level in (0,1)");
  est->add_flag("--json", est_json, "JSON-lines output");
  est->add_flag("--rescale", est_rescale, "min-max rescale to [0.01,0.99]");
  add_common_options(est, est_opts, true);

  // gen
  auto* gen = app.add_subcommand("gen", "generate synthetic samples");
  std::string gen_dist, gen_out;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--dist", gen_dist, "distribution spec")->required();
  gen->add_option("--n", gen_n, "sample count")->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out, "output CSV (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "convergence benchmark CSV");
  std::string bench_dist, bench_dist2, bench_nlist, bench_methods = "loo",
              bench_out;
  int bench_trials = 0;
  bool bench_timing = false;
  bench->add_option("--dist", bench_dist)->required();
  bench->add_option("--dist2", bench_dist2);
  bench->add_option("--n-list", bench_nlist)->required();
  bench->add_option("--trials", bench_trials)->required();
  bench->add_option("--methods", bench_methods);
  bench->add_option("--out", bench_out);
  bench->add_flag("--timing", bench_timing,
                  "emit wall-clock seconds (breaks byte determinism)");
  add_common_options(bench, bench_opts, true);

  // qq
  auto* qq = app.add_subcommand("qq", "normality study CSV");
  std::string qq_dist, qq_dist2, qq_method = "ds", qq_out;
  std::size_t qq_n = 0;
  int qq_trials = 0;
  qq->add_option("--dist", qq_dist)->required();
  qq->add_option("--dist2", qq_dist2);
  qq->add_option("--n", qq_n)->required()->check(CLI::PositiveNumber);
  qq->add_option("--trials", qq_trials)->required();
  qq->add_option("--method", qq_method)->check(CLI::IsMember({"ds", "loo"}));
  qq->add_option("--out", qq_out);
  add_common_options(qq, qq_opts, true);

  // affinity
  auto* aff = app.add_subcommand("affinity", "pairwise affinity matrix CSV");
  std::string aff_inputs, aff_div = "hellinger", aff_method = "loo", aff_out;
  double aff_scale = 1.0;
  bool aff_rescale = false;
  aff->add_option("--inputs", aff_inputs, "comma-separated sample CSVs")
      ->required();
  aff->add_option("--divergence", aff_div);
  aff->add_option("--method", aff_method)->check(CLI::IsMember({"ds", "loo"}));
  aff->add_option("--scale", aff_scale, "affinity scale gamma");
  aff->add_option("--out", aff_out);
  aff->add_flag("--rescale", aff_rescale);
  add_common_options(aff, aff_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (est->parsed()) {
      return cmd_estimate(est_opts, est_x, est_y, est_method, est_ci, est_json,
                          est_rescale);
    }
    if (gen->parsed()) return cmd_gen(gen_dist, gen_n, gen_seed, gen_out);
    if (bench->parsed()) {
      return cmd_bench(bench_opts, bench_dist, bench_dist2, bench_nlist,
                       bench_trials, bench_methods, bench_out, bench_timing);
    }
    if (qq->parsed()) {
      return cmd_qq(qq_opts, qq_dist, qq_dist2, qq_n, qq_trials, qq_method,
                    qq_out);
    }
    if (aff->parsed()) {
      return cmd_affinity(aff_opts, aff_inputs, aff_div, aff_method, aff_scale,
                          aff_out, aff_rescale);
    }
  } catch (const DegenerateCase& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const TooFewSamples& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
