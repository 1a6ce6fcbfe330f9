#include "ifest/functionals.hpp"

#include <array>
#include <cmath>
#include <numeric>

#include "ifest/errors.hpp"
#include "ifest/stats.hpp"

namespace ifest {

namespace {

constexpr std::array<Kind, 15> kAllKinds = {
    Kind::shannon_entropy,      Kind::tsallis_entropy,
    Kind::renyi_entropy,        Kind::l2_divergence,
    Kind::hellinger_divergence, Kind::chi_squared_divergence,
    Kind::f_divergence,         Kind::kl_divergence,
    Kind::tsallis_divergence,   Kind::renyi_divergence,
    Kind::cond_kl_divergence,   Kind::cond_tsallis_divergence,
    Kind::shannon_mi,           Kind::cond_tsallis_mi,
    Kind::power_integral,
};

inline double power(double base, double a) {
  if (a == 1.0) return base;
  if (a == 2.0) return base * base;
  if (a == 0.5) return std::sqrt(base);
  return std::pow(base, a);
}

}  // namespace

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::shannon_entropy: return "shannon_entropy";
    case Kind::tsallis_entropy: return "tsallis_entropy";
    case Kind::renyi_entropy: return "renyi_entropy";
    case Kind::l2_divergence: return "l2_divergence";
    case Kind::hellinger_divergence: return "hellinger_divergence";
    case Kind::chi_squared_divergence: return "chi_squared_divergence";
    case Kind::f_divergence: return "f_divergence";
    case Kind::kl_divergence: return "kl_divergence";
    case Kind::tsallis_divergence: return "tsallis_divergence";
    case Kind::renyi_divergence: return "renyi_divergence";
    case Kind::cond_kl_divergence: return "cond_kl_divergence";
    case Kind::cond_tsallis_divergence: return "cond_tsallis_divergence";
    case Kind::shannon_mi: return "shannon_mi";
    case Kind::cond_tsallis_mi: return "cond_tsallis_mi";
    case Kind::power_integral: return "power_integral";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  for (Kind k : kAllKinds) {
    if (name == kind_name(k)) return k;
  }
  if (name == "shannon") return Kind::shannon_entropy;
  if (name == "tsallis_ent") return Kind::tsallis_entropy;
  if (name == "renyi_ent") return Kind::renyi_entropy;
  if (name == "l2" || name == "l2_div") return Kind::l2_divergence;
  if (name == "hellinger") return Kind::hellinger_divergence;
  if (name == "chi_squared" || name == "chi2") return Kind::chi_squared_divergence;
  if (name == "f_div") return Kind::f_divergence;
  if (name == "kl") return Kind::kl_divergence;
  if (name == "tsallis_div") return Kind::tsallis_divergence;
  if (name == "renyi_div") return Kind::renyi_divergence;
  if (name == "cond_kl") return Kind::cond_kl_divergence;
  if (name == "cond_tsallis") return Kind::cond_tsallis_divergence;
  throw std::invalid_argument("unknown functional: " + name);
}

std::span<const Kind> all_kinds() { return kAllKinds; }

int FunctionalSpec::arity() const {
  switch (kind) {
    case Kind::shannon_entropy:
    case Kind::tsallis_entropy:
    case Kind::renyi_entropy:
    case Kind::shannon_mi:
    case Kind::cond_tsallis_mi:
      return 1;
    default:
      return 2;
  }
}

bool FunctionalSpec::needs_alpha() const {
  switch (kind) {
    case Kind::tsallis_entropy:
    case Kind::renyi_entropy:
    case Kind::tsallis_divergence:
    case Kind::renyi_divergence:
    case Kind::cond_tsallis_divergence:
    case Kind::cond_tsallis_mi:
      return true;
    default:
      return false;
  }
}

bool FunctionalSpec::is_mi() const {
  return kind == Kind::shannon_mi || kind == Kind::cond_tsallis_mi;
}

bool FunctionalSpec::is_conditional() const {
  return kind == Kind::cond_kl_divergence ||
         kind == Kind::cond_tsallis_divergence || kind == Kind::cond_tsallis_mi;
}

void FunctionalSpec::validate() const {
  if (needs_alpha()) {
    if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0) {
      throw BadAlpha("alpha must be finite and not 0 or 1");
    }
  }
  if (kind == Kind::power_integral) {
    const double a = alpha, b = beta_exponent;
    if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a + b - 1.0) > 1e-12 ||
        a == 0.0 || a == 1.0 || b == 0.0 || b == 1.0) {
      throw BadExponents("power_integral needs a+b=1 with a,b not in {0,1}");
    }
  }
  if (kind == Kind::f_divergence && (!phi || !phi_prime)) {
    throw std::invalid_argument("f_divergence needs phi and phi_prime callbacks");
  }
  if (is_conditional() && z_dim < 1) {
    throw DimensionMismatch("conditional functional needs z_dim >= 1");
  }
  if (!is_conditional() && z_dim != 0) {
    throw DimensionMismatch("z_dim only applies to conditional kinds");
  }
}

void FunctionalSpec::block_layout(int d, int& xd, int& yd, int& zd) const {
  zd = is_conditional() ? z_dim : 0;
  if (zd >= d) throw DimensionMismatch("z_dim must be smaller than the dimension");
  if (is_mi()) {
    const int rest = d - zd;
    xd = x_dim > 0 ? x_dim : rest / 2;
    yd = rest - xd;
    if (x_dim == 0 && rest % 2 != 0) {
      throw DimensionMismatch(
          "cannot split an odd block evenly; set x_dim explicitly");
    }
    if (xd < 1 || yd < 1) throw DimensionMismatch("MI blocks must be nonempty");
  } else {
    xd = d - zd;
    yd = 0;
  }
}

Density density_of(const KdeModel& model) {
  return Density{[&model](std::span<const double> x) { return model.eval(x); },
                 &model};
}

DensitySet DensityPair::as_set() const {
  DensitySet ds;
  ds.dim = first ? static_cast<int>(first->dim()) : 0;
  ds.x_dim = x_dim;
  ds.y_dim = y_dim;
  ds.z_dim = z_dim;
  if (first) ds.f = density_of(*first);
  if (second) ds.g = density_of(*second);
  if (mx) ds.mx = density_of(*mx);
  if (my) ds.my = density_of(*my);
  if (mxz) ds.mxz = density_of(*mxz);
  if (myz) ds.myz = density_of(*myz);
  if (mz) ds.mz = density_of(*mz);
  return ds;
}

namespace {

std::shared_ptr<const KdeModel> project_fit(const KdeModel& joint,
                                            std::span<const std::size_t> cols) {
  const SampleSet proj = joint.points().project(cols);
  return std::make_shared<const KdeModel>(
      KdeModel::fit(proj, joint.bandwidth(), joint.kernel(), joint.clamp_spec(),
                    joint.boundary()));
}

std::vector<std::size_t> iota_cols(std::size_t from, std::size_t count) {
  std::vector<std::size_t> cols(count);
  std::iota(cols.begin(), cols.end(), from);
  return cols;
}

}  // namespace

DensityPair make_density_pair(const FunctionalSpec& spec,
                              std::shared_ptr<const KdeModel> first,
                              std::shared_ptr<const KdeModel> second) {
  spec.validate();
  DensityPair pair;
  pair.first = std::move(first);
  pair.second = std::move(second);
  if (spec.arity() == 2 && !pair.second) {
    throw DimensionMismatch(std::string(kind_name(spec.kind)) +
                            " needs two sample sets");
  }
  if (spec.arity() == 1 && pair.second) {
    throw DimensionMismatch(std::string(kind_name(spec.kind)) +
                            " takes a single sample set");
  }
  if (pair.second && pair.first->dim() != pair.second->dim()) {
    throw DimensionMismatch("sample sets must share a dimension");
  }
  const int d = static_cast<int>(pair.first->dim());
  int xd, yd, zd;
  spec.block_layout(d, xd, yd, zd);
  pair.x_dim = xd;
  pair.y_dim = yd;
  pair.z_dim = zd;
  if (spec.kind == Kind::shannon_mi) {
    pair.mx = project_fit(*pair.first, iota_cols(0, xd));
    pair.my = project_fit(*pair.first, iota_cols(xd, yd));
  } else if (spec.kind == Kind::cond_tsallis_mi) {
    std::vector<std::size_t> xz = iota_cols(0, xd);
    for (std::size_t c = 0; c < static_cast<std::size_t>(zd); ++c) {
      xz.push_back(static_cast<std::size_t>(xd + yd) + c);
    }
    std::vector<std::size_t> yz = iota_cols(xd, yd);
    for (std::size_t c = 0; c < static_cast<std::size_t>(zd); ++c) {
      yz.push_back(static_cast<std::size_t>(xd + yd) + c);
    }
    pair.mxz = project_fit(*pair.first, xz);
    pair.myz = project_fit(*pair.first, yz);
    pair.mz = project_fit(*pair.first, iota_cols(xd + yd, zd));
  }
  return pair;
}

namespace {

// ---------------------------------------------------------------------------
// Grid evaluation

std::vector<double> block_values(const Density& dens, const AxisRule& axis,
                                 int bdim) {
  if (dens.model != nullptr) {
    if (static_cast<int>(dens.model->dim()) != bdim) {
      throw DimensionMismatch("density model dimension mismatch on grid");
    }
    std::vector<double> vals = dens.model->raw_on_grid(axis.nodes);
    for (double& v : vals) v = dens.model->clamp_value(v);
    return vals;
  }
  const std::size_t m = axis.nodes.size();
  std::size_t total = 1;
  for (int c = 0; c < bdim; ++c) total *= m;
  std::vector<double> vals(total);
  std::vector<std::size_t> idx(bdim, 0);
  std::vector<double> x(bdim, axis.nodes[0]);
  for (std::size_t flat = 0; flat < total; ++flat) {
    vals[flat] = dens.fn(x);
    std::size_t c = static_cast<std::size_t>(bdim);
    while (c-- > 0) {
      if (++idx[c] < m) {
        x[c] = axis.nodes[idx[c]];
        break;
      }
      idx[c] = 0;
      x[c] = axis.nodes[0];
    }
  }
  return vals;
}

struct NodeValues {
  double f = 0.0, g = 0.0;
  double mx = 0.0, my = 0.0;
  double mxz = 0.0, myz = 0.0, mz = 0.0;
};

struct GridWalk {
  const FunctionalSpec& spec;
  const DensitySet& ds;
  GridSpec grid;
  AxisRule axis;
  std::vector<double> f, g, mx, my, mxz, myz, mz;

  GridWalk(const FunctionalSpec& s, const DensitySet& d, const GridSpec& gs)
      : spec(s), ds(d), grid(gs) {
    grid.dim = ds.dim;
    grid.validate();
    axis = axis_rule(grid);
    f = block_values(ds.f, axis, ds.dim);
    if (spec.arity() == 2) g = block_values(ds.g, axis, ds.dim);
    if (spec.kind == Kind::shannon_mi) {
      mx = block_values(ds.mx, axis, ds.x_dim);
      my = block_values(ds.my, axis, ds.y_dim);
    }
    if (spec.kind == Kind::cond_tsallis_mi) {
      mxz = block_values(ds.mxz, axis, ds.x_dim + ds.z_dim);
      myz = block_values(ds.myz, axis, ds.y_dim + ds.z_dim);
      mz = block_values(ds.mz, axis, ds.z_dim);
    }
  }

  // Integrates nu(values) over the grid with the pairwise reduction.
  template <class Nu>
  double reduce(Nu&& nu) const {
    const std::size_t d = static_cast<std::size_t>(ds.dim);
    const std::size_t m = axis.nodes.size();
    const std::size_t xd = static_cast<std::size_t>(ds.x_dim);
    const std::size_t yd = static_cast<std::size_t>(ds.y_dim);
    const std::size_t zd = static_cast<std::size_t>(ds.z_dim);
    const bool midpoint = grid.rule == QuadRule::midpoint;
    std::vector<std::size_t> idx(d, 0);
    PairwiseAccumulator acc;
    NodeValues v;
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
      v.f = f[flat];
      if (!g.empty()) v.g = g[flat];
      if (!mx.empty()) {
        std::size_t xflat = 0, yflat = 0;
        for (std::size_t c = 0; c < xd; ++c) xflat = xflat * m + idx[c];
        for (std::size_t c = 0; c < yd; ++c) yflat = yflat * m + idx[xd + c];
        v.mx = mx[xflat];
        v.my = my[yflat];
      }
      if (!mz.empty()) {
        std::size_t xzflat = 0, yzflat = 0, zflat = 0;
        for (std::size_t c = 0; c < xd; ++c) xzflat = xzflat * m + idx[c];
        for (std::size_t c = 0; c < yd; ++c) yzflat = yzflat * m + idx[xd + c];
        for (std::size_t c = 0; c < zd; ++c) {
          const std::size_t j = idx[xd + yd + c];
          xzflat = xzflat * m + j;
          yzflat = yzflat * m + j;
          zflat = zflat * m + j;
        }
        v.mxz = mxz[xzflat];
        v.myz = myz[yzflat];
        v.mz = mz[zflat];
      }
      double val = nu(v);
      if (!midpoint) {
        for (std::size_t c = 0; c < d; ++c) val *= axis.weights[idx[c]];
      }
      acc.add(val);
      std::size_t c = d;
      while (c-- > 0) {
        if (++idx[c] < m) break;
        idx[c] = 0;
      }
    }
    return midpoint ? acc.total() / static_cast<double>(f.size()) : acc.total();
  }
};

int inner_quad_points(int block_dim) {
  if (block_dim <= 1) return 256;
  if (block_dim == 2) return 64;
  return 24;
}

// Partial integrals of the conditional-MI influence function. `full` is the
// joint density, evaluated with the free block swept over a midpoint rule
// while the fixed coordinates stay at the evaluation point.
double cond_mi_partial(const FunctionalSpec& spec, const DensitySet& ds,
                       std::span<const double> x, bool over_y) {
  const int xd = ds.x_dim, yd = ds.y_dim, zd = ds.z_dim;
  const int free_dim = over_y ? yd : xd;
  const int m = inner_quad_points(free_dim);
  const double beta = 1.0 - spec.alpha;

  std::vector<double> point(ds.dim);
  std::copy(x.begin(), x.end(), point.begin());
  std::vector<double> obs(static_cast<std::size_t>(free_dim) + zd);
  for (int c = 0; c < zd; ++c) {
    obs[static_cast<std::size_t>(free_dim) + c] = x[xd + yd + c];
  }
  const int off = over_y ? xd : 0;

  std::vector<std::size_t> idx(free_dim, 0);
  PairwiseAccumulator acc;
  std::size_t total = 1;
  for (int c = 0; c < free_dim; ++c) total *= static_cast<std::size_t>(m);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (int c = 0; c < free_dim; ++c) {
      const double node = (static_cast<double>(idx[c]) + 0.5) / m;
      point[off + c] = node;
      obs[c] = node;
    }
    const double joint = ds.f(point);
    const double marg = over_y ? ds.myz(obs) : ds.mxz(obs);
    acc.add(power(joint, spec.alpha) * power(marg, beta));
    std::size_t c = static_cast<std::size_t>(free_dim);
    while (c-- > 0) {
      if (++idx[c] < static_cast<std::size_t>(m)) break;
      idx[c] = 0;
    }
  }
  return acc.total() / static_cast<double>(total);
}

// ∫∫ f^a mxz^b myz^b over the (x, y) blocks at fixed z.
double cond_mi_partial_xy(const FunctionalSpec& spec, const DensitySet& ds,
                          std::span<const double> z) {
  const int xd = ds.x_dim, yd = ds.y_dim, zd = ds.z_dim;
  const int free_dim = xd + yd;
  const int m = inner_quad_points(free_dim);
  const double beta = 1.0 - spec.alpha;

  std::vector<double> point(ds.dim);
  for (int c = 0; c < zd; ++c) point[xd + yd + c] = z[c];
  std::vector<double> xz(static_cast<std::size_t>(xd) + zd);
  std::vector<double> yz(static_cast<std::size_t>(yd) + zd);
  for (int c = 0; c < zd; ++c) {
    xz[static_cast<std::size_t>(xd) + c] = z[c];
    yz[static_cast<std::size_t>(yd) + c] = z[c];
  }

  std::vector<std::size_t> idx(free_dim, 0);
  PairwiseAccumulator acc;
  std::size_t total = 1;
  for (int c = 0; c < free_dim; ++c) total *= static_cast<std::size_t>(m);
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
    acc.add(power(ds.f(point), spec.alpha) * power(ds.mxz(xz), beta) *
            power(ds.myz(yz), beta));
    std::size_t c = static_cast<std::size_t>(free_dim);
    while (c-- > 0) {
      if (++idx[c] < static_cast<std::size_t>(m)) break;
      idx[c] = 0;
    }
  }
  return acc.total() / static_cast<double>(total);
}

void check_arity_densities(const FunctionalSpec& spec, const DensitySet& ds) {
  if (!ds.f) throw DimensionMismatch("DensitySet: first density missing");
  if (spec.arity() == 2 && !ds.g) {
    throw DimensionMismatch("DensitySet: second density missing");
  }
  if (spec.kind == Kind::shannon_mi && (!ds.mx || !ds.my)) {
    throw DimensionMismatch("shannon_mi needs both marginal densities");
  }
  if (spec.kind == Kind::cond_tsallis_mi && (!ds.mxz || !ds.myz || !ds.mz)) {
    throw DimensionMismatch("cond_tsallis_mi needs xz, yz and z marginals");
  }
}

}  // namespace

OffsetCache make_offset_cache(const FunctionalSpec& spec, const DensitySet& ds,
                              const GridSpec& grid) {
  spec.validate();
  check_arity_densities(spec, ds);
  OffsetCache cache;
  cache.ready = true;
  const double alpha = spec.alpha;
  GridWalk walk(spec, ds, grid);
  switch (spec.kind) {
    case Kind::shannon_entropy:
      cache.v1 = walk.reduce([](const NodeValues& v) {
        return -v.f * std::log(v.f);
      });
      break;
    case Kind::tsallis_entropy:
    case Kind::renyi_entropy:
      cache.v1 = walk.reduce(
          [alpha](const NodeValues& v) { return power(v.f, alpha); });
      break;
    case Kind::l2_divergence:
      cache.v1 = walk.reduce(
          [](const NodeValues& v) { return (v.f - v.g) * v.f; });
      cache.v2 = walk.reduce(
          [](const NodeValues& v) { return (v.f - v.g) * v.g; });
      break;
    case Kind::hellinger_divergence:
      cache.v1 = walk.reduce(
          [](const NodeValues& v) { return std::sqrt(v.f * v.g); });
      break;
    case Kind::chi_squared_divergence:
      cache.v1 = walk.reduce([](const NodeValues& v) { return v.f; });
      cache.v2 = walk.reduce(
          [](const NodeValues& v) { return v.g * v.g / v.f; });
      cache.v3 = walk.reduce([](const NodeValues& v) { return v.g; });
      break;
    case Kind::f_divergence: {
      const auto& phi = spec.phi;
      const auto& dphi = spec.phi_prime;
      cache.v1 = walk.reduce(
          [&dphi](const NodeValues& v) { return dphi(v.f / v.g) * v.f; });
      cache.v2 = walk.reduce([&phi, &dphi](const NodeValues& v) {
        const double r = v.f / v.g;
        return (phi(r) - r * dphi(r)) * v.g;
      });
      break;
    }
    case Kind::kl_divergence:
    case Kind::cond_kl_divergence:
      cache.v1 = walk.reduce(
          [](const NodeValues& v) { return v.f * std::log(v.f / v.g); });
      break;
    case Kind::tsallis_divergence:
    case Kind::renyi_divergence:
    case Kind::cond_tsallis_divergence:
      cache.v1 = walk.reduce([alpha](const NodeValues& v) {
        return power(v.f, alpha) * power(v.g, 1.0 - alpha);
      });
      break;
    case Kind::shannon_mi:
      cache.v1 = walk.reduce([](const NodeValues& v) {
        return v.f * std::log(v.f / (v.mx * v.my));
      });
      break;
    case Kind::cond_tsallis_mi:
      cache.v1 = walk.reduce([alpha](const NodeValues& v) {
        const double beta = 1.0 - alpha;
        return power(v.f, alpha) * power(v.mxz, beta) * power(v.myz, beta) *
               power(v.mz, alpha - 1.0);
      });
      break;
    case Kind::power_integral:
      cache.v1 = walk.reduce([&spec](const NodeValues& v) {
        return power(v.f, spec.alpha) * power(v.g, spec.beta_exponent);
      });
      break;
  }
  return cache;
}

double plugin_value(const FunctionalSpec& spec, const DensitySet& ds,
                    const GridSpec& grid) {
  spec.validate();
  check_arity_densities(spec, ds);
  const double alpha = spec.alpha;
  switch (spec.kind) {
    case Kind::shannon_entropy:
    case Kind::kl_divergence:
    case Kind::cond_kl_divergence:
    case Kind::shannon_mi:
      return make_offset_cache(spec, ds, grid).v1;
    case Kind::tsallis_entropy:
      return (1.0 - make_offset_cache(spec, ds, grid).v1) / (alpha - 1.0);
    case Kind::renyi_entropy:
      return std::log(make_offset_cache(spec, ds, grid).v1) / (1.0 - alpha);
    case Kind::l2_divergence: {
      GridWalk walk(spec, ds, grid);
      return walk.reduce([](const NodeValues& v) {
        return (v.f - v.g) * (v.f - v.g);
      });
    }
    case Kind::hellinger_divergence:
      return 2.0 - 2.0 * make_offset_cache(spec, ds, grid).v1;
    case Kind::chi_squared_divergence: {
      GridWalk walk(spec, ds, grid);
      return walk.reduce([](const NodeValues& v) {
        const double diff = v.f - v.g;
        return diff * diff / v.f;
      });
    }
    case Kind::f_divergence: {
      GridWalk walk(spec, ds, grid);
      const auto& phi = spec.phi;
      return walk.reduce(
          [&phi](const NodeValues& v) { return phi(v.f / v.g) * v.g; });
    }
    case Kind::tsallis_divergence:
    case Kind::cond_tsallis_divergence:
      return (make_offset_cache(spec, ds, grid).v1 - 1.0) / (alpha - 1.0);
    case Kind::renyi_divergence:
      return std::log(make_offset_cache(spec, ds, grid).v1) / (alpha - 1.0);
    case Kind::cond_tsallis_mi:
      return 1.0 / (1.0 - alpha) +
             make_offset_cache(spec, ds, grid).v1 / (alpha - 1.0);
    case Kind::power_integral:
      return make_offset_cache(spec, ds, grid).v1;
  }
  return 0.0;
}

double influence(const FunctionalSpec& spec, Which which,
                 std::span<const double> x, const DensitySet& ds,
                 const GridSpec& grid, const OffsetCache* cache) {
  spec.validate();
  check_arity_densities(spec, ds);
  if (spec.arity() == 1 && which == Which::second) {
    throw DimensionMismatch("influence: single-argument functional");
  }
  OffsetCache local;
  if (cache == nullptr || !cache->ready) {
    local = make_offset_cache(spec, ds, grid);
    cache = &local;
  }
  const double alpha = spec.alpha;
  switch (spec.kind) {
    case Kind::shannon_entropy:
      return -std::log(ds.f(x)) - cache->v1;
    case Kind::tsallis_entropy:
      return alpha / (alpha - 1.0) * (cache->v1 - power(ds.f(x), alpha - 1.0));
    case Kind::renyi_entropy:
      return alpha / (1.0 - alpha) *
             (power(ds.f(x), alpha - 1.0) - cache->v1) / cache->v1;
    case Kind::l2_divergence: {
      const double diff = ds.f(x) - ds.g(x);
      if (which == Which::first) return 2.0 * diff - 2.0 * cache->v1;
      return -2.0 * diff + 2.0 * cache->v2;
    }
    case Kind::hellinger_divergence: {
      const double fx = ds.f(x), gx = ds.g(x);
      if (which == Which::first) return cache->v1 - std::sqrt(gx / fx);
      return cache->v1 - std::sqrt(fx / gx);
    }
    case Kind::chi_squared_divergence: {
      const double r = ds.g(x) / ds.f(x);
      if (which == Which::first) return 1.0 - r * r - cache->v1 + cache->v2;
      return 2.0 * r - 2.0 + 2.0 * (cache->v3 - cache->v2);
    }
    case Kind::f_divergence: {
      const double r = ds.f(x) / ds.g(x);
      if (which == Which::first) return spec.phi_prime(r) - cache->v1;
      return spec.phi(r) - r * spec.phi_prime(r) - cache->v2;
    }
    case Kind::kl_divergence:
    case Kind::cond_kl_divergence: {
      const double r = ds.f(x) / ds.g(x);
      if (which == Which::first) return std::log(r) - cache->v1;
      return 1.0 - r;
    }
    case Kind::tsallis_divergence:
    case Kind::cond_tsallis_divergence: {
      const double r = ds.f(x) / ds.g(x);
      if (which == Which::first) {
        return alpha / (alpha - 1.0) * (power(r, alpha - 1.0) - cache->v1);
      }
      return cache->v1 - power(r, alpha);
    }
    case Kind::renyi_divergence: {
      const double r = ds.f(x) / ds.g(x);
      if (which == Which::first) {
        return alpha / (alpha - 1.0) * (power(r, alpha - 1.0) - cache->v1) /
               cache->v1;
      }
      return (cache->v1 - power(r, alpha)) / cache->v1;
    }
    case Kind::shannon_mi: {
      const int xd = ds.x_dim, yd = ds.y_dim;
      const double mxv = ds.mx(x.subspan(0, xd));
      const double myv = ds.my(x.subspan(xd, yd));
      return std::log(ds.f(x) / (mxv * myv)) - cache->v1;
    }
    case Kind::cond_tsallis_mi: {
      const int xd = ds.x_dim, yd = ds.y_dim, zd = ds.z_dim;
      std::vector<double> xz(x.begin(), x.begin() + xd);
      xz.insert(xz.end(), x.end() - zd, x.end());
      std::vector<double> yz(x.begin() + xd, x.begin() + xd + yd);
      yz.insert(yz.end(), x.end() - zd, x.end());
      const std::span<const double> z = x.subspan(xd + yd, zd);
      const double beta = 1.0 - alpha;
      const double fm = ds.f(x), mxzv = ds.mxz(xz), myzv = ds.myz(yz),
                   mzv = ds.mz(z);
      const double pointwise =
          alpha * power(fm * mzv / (mxzv * myzv), alpha - 1.0);
      const double jy = cond_mi_partial(spec, ds, x, /*over_y=*/true);
      const double jx = cond_mi_partial(spec, ds, x, /*over_y=*/false);
      const double jxy = cond_mi_partial_xy(spec, ds, z);
      const double t2 = beta * power(mxzv, -alpha) * power(mzv, alpha - 1.0) * jy;
      const double t3 = beta * power(myzv, -alpha) * power(mzv, alpha - 1.0) * jx;
      const double t4 = (alpha - 1.0) * power(mzv, alpha - 2.0) * jxy;
      return (pointwise + t2 + t3 + t4 - cache->v1) / (alpha - 1.0);
    }
    case Kind::power_integral: {
      const double a = spec.alpha, b = spec.beta_exponent;
      const double fx = ds.f(x), gx = ds.g(x);
      if (which == Which::first) return a * (power(gx / fx, b) - cache->v1);
      return b * (power(fx / gx, a) - cache->v1);
    }
  }
  return 0.0;
}

namespace {

Density mix_density(const Density& p, const Density& q, double t) {
  if (!p.fn) return Density{};
  if (!q.fn) throw DimensionMismatch("vme_residual: density sets disagree");
  const DensityFn pf = p.fn;
  const DensityFn qf = q.fn;
  return Density{[pf, qf, t](std::span<const double> x) {
                   const double pv = pf(x);
                   return pv + t * (qf(x) - pv);
                 },
                 nullptr};
}

}  // namespace

double vme_residual(const FunctionalSpec& spec, const DensitySet& p,
                    const DensitySet& q, double t, const GridSpec& grid) {
  spec.validate();
  check_arity_densities(spec, p);
  check_arity_densities(spec, q);
  DensitySet mixed = p;
  mixed.f = mix_density(p.f, q.f, t);
  mixed.g = mix_density(p.g, q.g, t);
  mixed.mx = mix_density(p.mx, q.mx, t);
  mixed.my = mix_density(p.my, q.my, t);
  mixed.mxz = mix_density(p.mxz, q.mxz, t);
  mixed.myz = mix_density(p.myz, q.myz, t);
  mixed.mz = mix_density(p.mz, q.mz, t);

  const double t_mixed = plugin_value(spec, mixed, grid);
  const double t_base = plugin_value(spec, p, grid);

  const OffsetCache cache = make_offset_cache(spec, p, grid);
  GridSpec g = grid;
  g.dim = p.dim;
  const Integrand first_term = [&](std::span<const double> x) {
    return influence(spec, Which::first, x, p, g, &cache) *
           (q.f(x) - p.f(x));
  };
  double correction = t * integrate(first_term, g);
  if (spec.arity() == 2) {
    const Integrand second_term = [&](std::span<const double> x) {
      return influence(spec, Which::second, x, p, g, &cache) *
             (q.g(x) - p.g(x));
    };
    correction += t * integrate(second_term, g);
  }
  return t_mixed - t_base - correction;
}

double power_integral_summand(double a, double b, double fx, double gx,
                              double fy, double gy) {
  return a * power(gx / fx, b) + b * power(fy / gy, a);
}

double closed_form_summand(const FunctionalSpec& spec, double fx, double gx,
                           double fy, double gy, double integral) {
  const double alpha = spec.alpha;
  switch (spec.kind) {
    case Kind::shannon_entropy:
      return -std::log(fx);
    case Kind::tsallis_entropy:
      return 1.0 / (alpha - 1.0) + integral -
             alpha / (alpha - 1.0) * power(fx, alpha - 1.0);
    case Kind::l2_divergence:
      return 2.0 * (fx - gx) + 2.0 * (gy - fy) - integral;
    case Kind::hellinger_divergence:
      return 2.0 - std::sqrt(gx / fx) - std::sqrt(fy / gy);
    case Kind::chi_squared_divergence: {
      const double rx = gx / fx;
      return -1.0 - rx * rx + 2.0 * (gy / fy);
    }
    case Kind::f_divergence: {
      const double ry = fy / gy;
      return spec.phi_prime(fx / gx) + spec.phi(ry) - ry * spec.phi_prime(ry);
    }
    case Kind::kl_divergence:
    case Kind::cond_kl_divergence:
      return 1.0 + std::log(fx / gx) - fy / gy;
    case Kind::tsallis_divergence:
    case Kind::cond_tsallis_divergence:
      return 1.0 / (1.0 - alpha) +
             alpha / (alpha - 1.0) * power(fx / gx, alpha - 1.0) -
             power(fy / gy, alpha);
    case Kind::power_integral:
      return power_integral_summand(spec.alpha, spec.beta_exponent, fx, gx, fy,
                                    gy);
    default:
      throw DimensionMismatch(
          std::string("no single closed-form summand for ") +
          kind_name(spec.kind));
  }
}

}  // namespace ifest
