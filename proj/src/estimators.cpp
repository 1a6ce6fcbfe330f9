#include "ifest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ifest/errors.hpp"
#include "ifest/rng.hpp"
#include "ifest/stats.hpp"

namespace ifest {

namespace {

constexpr double kDegenerateVariance = 1e-12;
constexpr std::uint64_t kCvStream = 101;
constexpr std::uint64_t kSplitStream = 103;

inline double power(double base, double a) {
  if (a == 1.0) return base;
  if (a == 2.0) return base * base;
  if (a == 0.5) return std::sqrt(base);
  return std::pow(base, a);
}

GridSpec grid_for(int dim, const EstimatorConfig& cfg) {
  GridSpec g;
  g.dim = dim;
  g.points_per_axis = cfg.grid_points;
  g.rule = QuadRule::midpoint;
  g.validate();
  return g;
}

void require_valid_inputs(const FunctionalSpec& spec, const SampleSet& x,
                          const SampleSet* y) {
  spec.validate();
  if (spec.arity() == 2) {
    if (y == nullptr) {
      throw DimensionMismatch(std::string(kind_name(spec.kind)) +
                              " needs a second sample set");
    }
    if (x.dim() != y->dim()) {
      throw DimensionMismatch("sample sets must share a dimension");
    }
  } else if (y != nullptr) {
    throw DimensionMismatch(std::string(kind_name(spec.kind)) +
                            " takes a single sample set");
  }
  int xd, yd, zd;
  spec.block_layout(static_cast<int>(x.dim()), xd, yd, zd);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

struct InfluenceArrays {
  std::vector<double> psi_f;
  std::vector<double> psi_g;
};

// Influence values at the sample points under the supplied densities; the
// source of the variance estimate for every method.
InfluenceArrays influence_values(const FunctionalSpec& spec,
                                 const DensitySet& ds, const GridSpec& grid,
                                 const SampleSet& x, const SampleSet* y) {
  const OffsetCache cache = make_offset_cache(spec, ds, grid);
  InfluenceArrays out;
  out.psi_f.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.psi_f.push_back(
        influence(spec, Which::first, x.row(i), ds, grid, &cache));
  }
  if (spec.arity() == 2 && y != nullptr) {
    out.psi_g.reserve(y->size());
    for (std::size_t j = 0; j < y->size(); ++j) {
      out.psi_g.push_back(
          influence(spec, Which::second, y->row(j), ds, grid, &cache));
    }
  }
  return out;
}

bool degenerate_from(const FunctionalSpec& spec, double var_f, double var_g) {
  if (spec.arity() == 1) return var_f < kDegenerateVariance;
  return var_f < kDegenerateVariance && var_g < kDegenerateVariance;
}

// ∫ (fhat_{-i} - ghat)^2 via the downdated grid sums of the first model.
double l2_loo_integral(const KdeModel& f, std::size_t i,
                       const GridDensityCache& fc,
                       std::span<const double> g_vals) {
  const std::size_t d = f.dim();
  const std::size_t m = fc.axis.nodes.size();
  const double n = static_cast<double>(f.size());
  const double inv_hd =
      std::pow(1.0 / f.bandwidth(), static_cast<double>(d));
  std::vector<std::vector<double>> w;
  std::vector<std::size_t> lo, hi;
  f.point_axis_weights(i, fc.axis.nodes, w, lo, hi);
  std::vector<std::size_t> idx(d, 0);
  PairwiseAccumulator acc;
  for (std::size_t flat = 0; flat < fc.raw.size(); ++flat) {
    double term = inv_hd;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t j = idx[c];
      if (j < lo[c] || j >= hi[c]) {
        term = 0.0;
        break;
      }
      term *= w[c][j];
    }
    const double down = f.clamp_value((n * fc.raw[flat] - term) / (n - 1.0));
    const double diff = down - g_vals[flat];
    acc.add(diff * diff);
    std::size_t c = d;
    while (c-- > 0) {
      if (++idx[c] < m) break;
      idx[c] = 0;
    }
  }
  return acc.total() / static_cast<double>(fc.raw.size());
}

int inner_quad_points(int block_dim) {
  if (block_dim <= 1) return 256;
  if (block_dim == 2) return 64;
  return 24;
}

// Downdated partial integrals of the conditional-MI summand.
struct CondMiParts {
  double jy = 0.0, jx = 0.0, jxy = 0.0;
};

CondMiParts cond_mi_loo_partials(const DensityPair& pair, std::size_t i,
                                 double alpha, std::span<const double> v) {
  const int xd = pair.x_dim, yd = pair.y_dim, zd = pair.z_dim;
  const double beta = 1.0 - alpha;
  const KdeModel& joint = *pair.first;
  CondMiParts parts;

  std::vector<double> point(v.begin(), v.end());
  std::vector<double> obs;

  {  // J_Y(x_i, z_i) = ∫ fhat_{-i}^a (x_i, y, z_i) myz_{-i}^b (y, z_i) dy
    const int m = inner_quad_points(yd);
    std::size_t total = 1;
    for (int c = 0; c < yd; ++c) total *= static_cast<std::size_t>(m);
    obs.assign(static_cast<std::size_t>(yd) + zd, 0.0);
    for (int c = 0; c < zd; ++c) {
      obs[static_cast<std::size_t>(yd) + c] = v[xd + yd + c];
    }
    std::vector<std::size_t> idx(yd, 0);
    PairwiseAccumulator acc;
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (int c = 0; c < yd; ++c) {
        const double node = (static_cast<double>(idx[c]) + 0.5) / m;
        point[xd + c] = node;
        obs[c] = node;
      }
      acc.add(power(joint.eval_loo_at(i, point), alpha) *
              power(pair.myz->eval_loo_at(i, obs), beta));
      std::size_t c = static_cast<std::size_t>(yd);
      while (c-- > 0) {
        if (++idx[c] < static_cast<std::size_t>(m)) break;
        idx[c] = 0;
      }
    }
    parts.jy = acc.total() / static_cast<double>(total);
    std::copy(v.begin(), v.end(), point.begin());
  }

  {  // J_X(y_i, z_i)
    const int m = inner_quad_points(xd);
    std::size_t total = 1;
    for (int c = 0; c < xd; ++c) total *= static_cast<std::size_t>(m);
    obs.assign(static_cast<std::size_t>(xd) + zd, 0.0);
    for (int c = 0; c < zd; ++c) {
      obs[static_cast<std::size_t>(xd) + c] = v[xd + yd + c];
    }
    std::vector<std::size_t> idx(xd, 0);
    PairwiseAccumulator acc;
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (int c = 0; c < xd; ++c) {
        const double node = (static_cast<double>(idx[c]) + 0.5) / m;
        point[c] = node;
        obs[c] = node;
      }
      acc.add(power(joint.eval_loo_at(i, point), alpha) *
              power(pair.mxz->eval_loo_at(i, obs), beta));
      std::size_t c = static_cast<std::size_t>(xd);
      while (c-- > 0) {
        if (++idx[c] < static_cast<std::size_t>(m)) break;
        idx[c] = 0;
      }
    }
    parts.jx = acc.total() / static_cast<double>(total);
    std::copy(v.begin(), v.end(), point.begin());
  }

  {  // J_XY(z_i) over both free blocks
    const int free_dim = xd + yd;
    const int m = inner_quad_points(free_dim);
    std::size_t total = 1;
    for (int c = 0; c < free_dim; ++c) total *= static_cast<std::size_t>(m);
    std::vector<double> xz(static_cast<std::size_t>(xd) + zd);
    std::vector<double> yz(static_cast<std::size_t>(yd) + zd);
    for (int c = 0; c < zd; ++c) {
      xz[static_cast<std::size_t>(xd) + c] = v[xd + yd + c];
      yz[static_cast<std::size_t>(yd) + c] = v[xd + yd + c];
    }
    std::vector<std::size_t> idx(free_dim, 0);
    PairwiseAccumulator acc;
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (int c = 0; c < free_dim; ++c) {
        const double node = (static_cast<double>(idx[c]) + 0.5) / m;
        point[c] = node;
        if (c < xd) {
          xz[c] = node;
        } else {
          yz[c - xd] = node;
        }
      }
      acc.add(power(joint.eval_loo_at(i, point), alpha) *
              power(pair.mxz->eval_loo_at(i, xz), beta) *
              power(pair.myz->eval_loo_at(i, yz), beta));
      std::size_t c = static_cast<std::size_t>(free_dim);
      while (c-- > 0) {
        if (++idx[c] < static_cast<std::size_t>(m)) break;
        idx[c] = 0;
      }
    }
    parts.jxy = acc.total() / static_cast<double>(total);
  }
  return parts;
}

Estimate base_estimate(const FunctionalSpec& spec, Method method,
                       const EstimatorConfig& cfg,
                       const FittedDensities& fitted) {
  Estimate e;
  e.method = method;
  e.seed = cfg.seed;
  e.kernel_order = cfg.kernel_order;
  e.bandwidth_f = fitted.bandwidth_f;
  e.bandwidth_g = fitted.bandwidth_g;
  e.ci_conjectural = method == Method::loo;
  (void)spec;
  return e;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::ds: return "ds";
    case Method::loo: return "loo";
    case Method::plugin: return "plugin";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "ds") return Method::ds;
  if (name == "loo") return Method::loo;
  if (name == "plugin") return Method::plugin;
  throw std::invalid_argument("unknown method: " + name);
}

double resolve_bandwidth(const SampleSet& samples, const EstimatorConfig& cfg,
                         bool second) {
  if (!cfg.bandwidth.auto_cv) {
    const double h = second && cfg.bandwidth.fixed_g > 0.0
                         ? cfg.bandwidth.fixed_g
                         : cfg.bandwidth.fixed_f;
    if (!(h > 0.0)) throw BadBandwidth("fixed bandwidth must be positive");
    return h;
  }
  const Kernel1D kernel = legendre_kernel(cfg.kernel_order);
  const std::vector<double> grid =
      cfg.cv_grid.empty() ? default_cv_grid() : cfg.cv_grid;
  CvOptions opts;
  opts.folds = cfg.cv_folds;
  // One fold stream for both sample sets: identical inputs then select
  // identical bandwidths, which the degeneracy detection relies on.
  opts.seed = derive_seed(cfg.seed, kCvStream);
  opts.boundary = cfg.boundary;
  opts.quad_points = cfg.grid_points;
  return cv_bandwidth(samples, kernel, grid, opts);
}

FittedDensities fit_densities(const FunctionalSpec& spec, const SampleSet& x,
                              const SampleSet* y, const EstimatorConfig& cfg) {
  require_valid_inputs(spec, x, y);
  FittedDensities fitted;
  const Kernel1D kernel = legendre_kernel(cfg.kernel_order);
  fitted.bandwidth_f = resolve_bandwidth(x, cfg, false);
  auto first = std::make_shared<const KdeModel>(KdeModel::fit(
      x, fitted.bandwidth_f, kernel, cfg.clamp, cfg.boundary));
  std::shared_ptr<const KdeModel> second;
  if (spec.arity() == 2) {
    fitted.bandwidth_g = resolve_bandwidth(*y, cfg, true);
    second = std::make_shared<const KdeModel>(KdeModel::fit(
        *y, fitted.bandwidth_g, kernel, cfg.clamp, cfg.boundary));
  }
  fitted.pair = make_density_pair(spec, std::move(first), std::move(second));
  fitted.grid = grid_for(static_cast<int>(x.dim()), cfg);
  return fitted;
}

std::pair<double, double> confidence_interval(const Estimate& e, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("confidence level must lie in (0,1)");
  }
  if (e.degenerate) {
    throw DegenerateCase(
        "influence variances vanish (f = g); no asymptotic interval");
  }
  const double z = inverse_normal_cdf(0.5 * (1.0 + level));
  double se2 = e.variance_f / static_cast<double>(e.n_used);
  if (e.m_used > 0) se2 += e.variance_g / static_cast<double>(e.m_used);
  const double half = z * std::sqrt(se2);
  return {e.value - half, e.value + half};
}

Estimate estimate_plugin(const FunctionalSpec& spec, const SampleSet& x,
                         const SampleSet* y, const EstimatorConfig& cfg) {
  if (x.size() < 2 || (spec.arity() == 2 && y != nullptr && y->size() < 2)) {
    throw TooFewSamples("plugin estimator needs n >= 2");
  }
  const FittedDensities fitted = fit_densities(spec, x, y, cfg);
  Estimate e = base_estimate(spec, Method::plugin, cfg, fitted);
  e.value = plugin_value(spec, fitted.pair.as_set(), fitted.grid);
  e.n_used = x.size();
  e.m_used = spec.arity() == 2 ? y->size() : 0;
  e.ci_conjectural = false;
  return e;
}

Estimate estimate_loo(const FunctionalSpec& spec, const SampleSet& x,
                      const SampleSet* y, const EstimatorConfig& cfg) {
  if (x.size() < 2 || (spec.arity() == 2 && y != nullptr && y->size() < 2)) {
    throw TooFewSamples("leave-one-out estimator needs n >= 2");
  }
  const FittedDensities fitted = fit_densities(spec, x, y, cfg);
  const DensityPair& pair = fitted.pair;
  const KdeModel& fm = *pair.first;
  const GridSpec& grid = fitted.grid;
  const std::size_t n = x.size();
  const double alpha = spec.alpha;

  Estimate e = base_estimate(spec, Method::loo, cfg, fitted);
  e.n_used = n;
  e.m_used = spec.arity() == 2 ? y->size() : 0;

  PairwiseAccumulator sum;
  switch (spec.kind) {
    case Kind::shannon_entropy: {
      for (std::size_t i = 0; i < n; ++i) {
        sum.add(closed_form_summand(spec, fm.eval_loo(i), 0, 0, 0, 0));
      }
      e.value = sum.total() / static_cast<double>(n);
      break;
    }
    case Kind::tsallis_entropy:
    case Kind::renyi_entropy: {
      const GridDensityCache cache = make_grid_cache(fm, grid);
      for (std::size_t i = 0; i < n; ++i) {
        const double s_i = integrate_power_loo(fm, i, alpha, grid, &cache);
        const double fx = fm.eval_loo(i);
        if (spec.kind == Kind::tsallis_entropy) {
          sum.add(closed_form_summand(spec, fx, 0, 0, 0, s_i));
        } else {
          sum.add((1.0 - alpha) * s_i + alpha * power(fx, alpha - 1.0));
        }
      }
      const double mean_val = sum.total() / static_cast<double>(n);
      e.value = spec.kind == Kind::tsallis_entropy
                    ? mean_val
                    : std::log(std::max(mean_val, kDensityFloor)) /
                          (1.0 - alpha);
      break;
    }
    case Kind::shannon_mi: {
      for (std::size_t i = 0; i < n; ++i) {
        sum.add(std::log(fm.eval_loo(i)) - std::log(pair.mx->eval_loo(i)) -
                std::log(pair.my->eval_loo(i)));
      }
      e.value = sum.total() / static_cast<double>(n);
      break;
    }
    case Kind::cond_tsallis_mi: {
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = x.row(i);
        const CondMiParts parts = cond_mi_loo_partials(pair, i, alpha, v);
        const double fj = fm.eval_loo(i);
        const double mxzv = pair.mxz->eval_loo(i);
        const double myzv = pair.myz->eval_loo(i);
        const double mzv = pair.mz->eval_loo(i);
        const double beta = 1.0 - alpha;
        const double pointwise =
            alpha * power(fj * mzv / (mxzv * myzv), alpha - 1.0);
        const double t2 =
            beta * power(mxzv, -alpha) * power(mzv, alpha - 1.0) * parts.jy;
        const double t3 =
            beta * power(myzv, -alpha) * power(mzv, alpha - 1.0) * parts.jx;
        const double t4 = (alpha - 1.0) * power(mzv, alpha - 2.0) * parts.jxy;
        sum.add(1.0 / (1.0 - alpha) +
                (pointwise + t2 + t3 + t4) / (alpha - 1.0));
      }
      e.value = sum.total() / static_cast<double>(n);
      break;
    }
    default: {  // two-sample kinds
      const KdeModel& gm = *pair.second;
      const std::size_t m = y->size();
      const std::size_t cycles = std::max(n, m);

      std::vector<double> raw_g_at_x(n), raw_f_at_y(m);
      for (std::size_t i = 0; i < n; ++i) raw_g_at_x[i] = gm.raw(x.row(i));
      for (std::size_t j = 0; j < m; ++j) raw_f_at_y[j] = fm.raw(y->row(j));

      const bool both_downdated = spec.kind == Kind::power_integral ||
                                  spec.kind == Kind::renyi_divergence;
      std::optional<GridDensityCache> f_cache;
      std::vector<double> g_vals;
      if (spec.kind == Kind::l2_divergence) {
        f_cache.emplace(make_grid_cache(fm, grid));
        g_vals = values_on_grid(gm, grid);
      }

      const double nn = static_cast<double>(n), mm = static_cast<double>(m);
      for (std::size_t k = 0; k < cycles; ++k) {
        const std::size_t i = k % n;
        const std::size_t j = k % m;
        const double fx = fm.eval_loo(i);
        const double gy = gm.eval_loo(j);
        double gx, fy;
        if (both_downdated) {
          gx = gm.clamp_value(
              (mm * raw_g_at_x[i] - gm.point_term(j, x.row(i))) / (mm - 1.0));
          fy = fm.clamp_value(
              (nn * raw_f_at_y[j] - fm.point_term(i, y->row(j))) / (nn - 1.0));
        } else {
          gx = gm.clamp_value(raw_g_at_x[i]);
          fy = fm.clamp_value(raw_f_at_y[j]);
        }
        double integral = 0.0;
        if (spec.kind == Kind::l2_divergence) {
          integral = l2_loo_integral(fm, i, *f_cache, g_vals);
        }
        if (spec.kind == Kind::renyi_divergence) {
          sum.add(power_integral_summand(alpha, 1.0 - alpha, fx, gx, fy, gy));
        } else {
          sum.add(closed_form_summand(spec, fx, gx, fy, gy, integral));
        }
      }
      const double mean_val = sum.total() / static_cast<double>(cycles);
      e.value = spec.kind == Kind::renyi_divergence
                    ? std::log(std::max(mean_val, kDensityFloor)) /
                          (alpha - 1.0)
                    : mean_val;
      break;
    }
  }

  const InfluenceArrays psi =
      influence_values(spec, pair.as_set(), grid, x, y);
  e.variance_f = sample_variance(psi.psi_f);
  e.variance_g = sample_variance(psi.psi_g);
  e.degenerate = degenerate_from(spec, e.variance_f, e.variance_g);
  return e;
}

Estimate estimate_ds(const FunctionalSpec& spec, const SampleSet& x,
                     const SampleSet* y, const EstimatorConfig& cfg) {
  require_valid_inputs(spec, x, y);
  if (x.size() < 4 || (spec.arity() == 2 && y->size() < 4)) {
    throw TooFewSamples("data-split estimator needs n >= 4");
  }
  const Kernel1D kernel = legendre_kernel(cfg.kernel_order);
  const double h_f = resolve_bandwidth(x, cfg, false);
  const double h_g = spec.arity() == 2 ? resolve_bandwidth(*y, cfg, true) : 0.0;

  // Seeded shuffle, then even/odd positions form the halves; an odd tail
  // point is dropped. The split stream depends only on the seed, so equal
  // sample sets split identically.
  const auto split = [&](const SampleSet& s) {
    const std::vector<std::size_t> perm =
        shuffled_indices(s.size(), derive_seed(cfg.seed, kSplitStream));
    const std::size_t pairs = s.size() / 2;
    std::vector<std::size_t> a, b;
    for (std::size_t k = 0; k < pairs; ++k) {
      a.push_back(perm[2 * k]);
      b.push_back(perm[2 * k + 1]);
    }
    return std::make_pair(s.take_rows(a), s.take_rows(b));
  };
  const auto [xa, xb] = split(x);
  SampleSet ya, yb;
  if (spec.arity() == 2) std::tie(ya, yb) = split(*y);

  const GridSpec grid = grid_for(static_cast<int>(x.dim()), cfg);
  std::vector<double> psi_f_all[2], psi_g_all[2];

  const auto half_value = [&](const SampleSet& fit_x, const SampleSet& avg_x,
                              const SampleSet& fit_y, const SampleSet& avg_y,
                              int swap) {
    auto first = std::make_shared<const KdeModel>(
        KdeModel::fit(fit_x, h_f, kernel, cfg.clamp, cfg.boundary));
    std::shared_ptr<const KdeModel> second;
    if (spec.arity() == 2) {
      second = std::make_shared<const KdeModel>(
          KdeModel::fit(fit_y, h_g, kernel, cfg.clamp, cfg.boundary));
    }
    const DensityPair pair =
        make_density_pair(spec, std::move(first), std::move(second));
    const DensitySet ds = pair.as_set();
    const OffsetCache cache = make_offset_cache(spec, ds, grid);
    double value = plugin_value(spec, ds, grid);
    PairwiseAccumulator acc_f;
    for (std::size_t i = 0; i < avg_x.size(); ++i) {
      const double p =
          influence(spec, Which::first, avg_x.row(i), ds, grid, &cache);
      psi_f_all[swap].push_back(p);
      acc_f.add(p);
    }
    value += acc_f.total() / static_cast<double>(avg_x.size());
    if (spec.arity() == 2) {
      PairwiseAccumulator acc_g;
      for (std::size_t j = 0; j < avg_y.size(); ++j) {
        const double p =
            influence(spec, Which::second, avg_y.row(j), ds, grid, &cache);
        psi_g_all[swap].push_back(p);
        acc_g.add(p);
      }
      value += acc_g.total() / static_cast<double>(avg_y.size());
    }
    return value;
  };

  const double v1 = half_value(xa, xb, ya, yb, 0);
  const double v2 = half_value(xb, xa, yb, ya, 1);

  FittedDensities meta;
  meta.bandwidth_f = h_f;
  meta.bandwidth_g = h_g;
  Estimate e = base_estimate(spec, Method::ds, cfg, meta);
  e.value = 0.5 * (v1 + v2);
  e.n_used = 2 * (x.size() / 2);
  e.m_used = spec.arity() == 2 ? 2 * (y->size() / 2) : 0;
  e.variance_f = pooled_variance(psi_f_all[0], psi_f_all[1]);
  e.variance_g = pooled_variance(psi_g_all[0], psi_g_all[1]);
  e.degenerate = degenerate_from(spec, e.variance_f, e.variance_g);
  e.ci_conjectural = false;
  return e;
}

Estimate estimate(const FunctionalSpec& spec, Method method,
                  const SampleSet& x, const SampleSet* y,
                  const EstimatorConfig& cfg) {
  switch (method) {
    case Method::ds:
      return estimate_ds(spec, x, y, cfg);
    case Method::loo:
      return estimate_loo(spec, x, y, cfg);
    case Method::plugin:
      return estimate_plugin(spec, x, y, cfg);
  }
  throw std::invalid_argument("unknown method");
}

Estimate estimate_power_integral(double a, double b, const SampleSet& x,
                                 const SampleSet& y,
                                 const EstimatorConfig& cfg) {
  FunctionalSpec spec;
  spec.kind = Kind::power_integral;
  spec.alpha = a;
  spec.beta_exponent = b;
  return estimate_loo(spec, x, &y, cfg);
}

double estimate_cond_tsallis_variance(const SampleSet& x, const SampleSet& y,
                                      double alpha,
                                      const EstimatorConfig& cfg) {
  if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 0.5 || alpha == 1.0) {
    throw BadAlpha(
        "conditional Tsallis variance needs alpha outside {0, 1/2, 1}");
  }
  const double beta = 1.0 - alpha;
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  const double big_n = n + m;

  // Three S(a,b) estimates over shared fits.
  const Kernel1D kernel = legendre_kernel(cfg.kernel_order);
  const double h_f = resolve_bandwidth(x, cfg, false);
  const double h_g = resolve_bandwidth(y, cfg, true);
  const KdeModel fm = KdeModel::fit(x, h_f, kernel, cfg.clamp, cfg.boundary);
  const KdeModel gm = KdeModel::fit(y, h_g, kernel, cfg.clamp, cfg.boundary);

  const std::size_t cycles = std::max(x.size(), y.size());
  std::vector<double> raw_g_at_x(x.size()), raw_f_at_y(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) raw_g_at_x[i] = gm.raw(x.row(i));
  for (std::size_t j = 0; j < y.size(); ++j) raw_f_at_y[j] = fm.raw(y.row(j));

  const auto s_hat = [&](double a, double b) {
    PairwiseAccumulator acc;
    for (std::size_t k = 0; k < cycles; ++k) {
      const std::size_t i = k % x.size();
      const std::size_t j = k % y.size();
      const double fx = fm.eval_loo(i);
      const double gy = gm.eval_loo(j);
      const double gx = gm.clamp_value(
          (m * raw_g_at_x[i] - gm.point_term(j, x.row(i))) / (m - 1.0));
      const double fy = fm.clamp_value(
          (n * raw_f_at_y[j] - fm.point_term(i, y.row(j))) / (n - 1.0));
      acc.add(power_integral_summand(a, b, fx, gx, fy, gy));
    }
    return acc.total() / static_cast<double>(cycles);
  };

  const double s1 = s_hat(2.0 * alpha - 1.0, 2.0 * beta);
  const double s2 = s_hat(2.0 * alpha, 2.0 * beta - 1.0);
  const double s3 = s_hat(alpha, beta);

  const double ratio2 = alpha * alpha / ((alpha - 1.0) * (alpha - 1.0));
  return big_n / n * ratio2 * s1 + big_n / m * s2 -
         big_n * (m * alpha * alpha + n * (alpha - 1.0) * (alpha - 1.0)) /
             (n * m * (alpha - 1.0) * (alpha - 1.0)) * s3 * s3;
}

}  // namespace ifest
