#include "ifest/quadrature.hpp"

#include <cmath>

#include "ifest/errors.hpp"
#include "ifest/stats.hpp"

namespace ifest {

int GridSpec::resolved_points() const {
  return points_per_axis > 0 ? points_per_axis : default_grid_points(dim);
}

std::size_t GridSpec::total_nodes() const {
  std::size_t total = 1;
  const std::size_t m = static_cast<std::size_t>(resolved_points());
  for (int c = 0; c < dim; ++c) total *= m;
  return total;
}

void GridSpec::validate() const {
  if (dim < 1) throw GridTooLarge("GridSpec: dim must be >= 1");
  if (dim > 4) {
    throw GridTooLarge("GridSpec: tensor grids beyond d=4 are not supported");
  }
  if (resolved_points() < 2) throw GridTooLarge("GridSpec: need m >= 2");
  double total = 1.0;
  for (int c = 0; c < dim; ++c) total *= resolved_points();
  if (total > 1e7) throw GridTooLarge("GridSpec: m^d exceeds 1e7 nodes");
}

GridSpec GridSpec::oracle(int dim) {
  // Gauss-Legendre: exact for the polynomial synthetic densities and far
  // more accurate than midpoint on the smooth analytic integrands that
  // ground-truth values are built from.
  return GridSpec{dim, 4 * default_grid_points(dim), QuadRule::gauss_legendre};
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration, mapped to
// [0,1]. Accurate to machine precision for the sizes used here.
AxisRule gauss_legendre_rule(int m) {
  AxisRule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  const int half = (m + 1) / 2;
  for (int k = 0; k < half; ++k) {
    double x = std::cos(M_PI * (k + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[k] = 0.5 * (1.0 - x);  // descending x -> ascending node
    rule.weights[k] = 0.5 * w;
    rule.nodes[m - 1 - k] = 0.5 * (1.0 + x);
    rule.weights[m - 1 - k] = 0.5 * w;
  }
  return rule;
}

}  // namespace

AxisRule axis_rule(const GridSpec& spec) {
  spec.validate();
  const int m = spec.resolved_points();
  if (spec.rule == QuadRule::gauss_legendre) return gauss_legendre_rule(m);
  AxisRule rule;
  rule.nodes.resize(m);
  rule.weights.assign(m, 1.0 / m);
  for (int j = 0; j < m; ++j) rule.nodes[j] = (j + 0.5) / m;
  return rule;
}

double integrate(const Integrand& g, const GridSpec& spec) {
  const AxisRule axis = axis_rule(spec);
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const std::size_t m = axis.nodes.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t c = 0; c < d; ++c) x[c] = axis.nodes[0];
  PairwiseAccumulator acc;
  const bool midpoint = spec.rule == QuadRule::midpoint;
  for (;;) {
    double v = g(x);
    if (!midpoint) {
      for (std::size_t c = 0; c < d; ++c) v *= axis.weights[idx[c]];
    }
    acc.add(v);
    std::size_t c = d;
    while (c-- > 0) {
      if (++idx[c] < m) {
        x[c] = axis.nodes[idx[c]];
        break;
      }
      idx[c] = 0;
      x[c] = axis.nodes[0];
      if (c == 0) {
        // midpoint weight is uniform: dividing by the node count keeps
        // constants exact.
        return midpoint ? acc.total() / static_cast<double>(spec.total_nodes())
                        : acc.total();
      }
    }
  }
}

std::vector<double> values_on_grid(const KdeModel& model,
                                   const GridSpec& spec) {
  const AxisRule axis = axis_rule(spec);
  std::vector<double> vals = model.raw_on_grid(axis.nodes);
  for (double& v : vals) v = model.clamp_value(v);
  return vals;
}

GridDensityCache make_grid_cache(const KdeModel& model, const GridSpec& spec) {
  GridDensityCache cache;
  cache.spec = spec;
  cache.axis = axis_rule(spec);
  cache.raw = model.raw_on_grid(cache.axis.nodes);
  return cache;
}

namespace {

double reduce_grid(std::span<const double> values, const GridSpec& spec,
                   const AxisRule& axis) {
  if (spec.rule == QuadRule::midpoint) {
    return pairwise_sum(values) / static_cast<double>(values.size());
  }
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const std::size_t m = axis.nodes.size();
  std::vector<std::size_t> idx(d, 0);
  PairwiseAccumulator acc;
  for (double v : values) {
    double w = 1.0;
    for (std::size_t c = 0; c < d; ++c) w *= axis.weights[idx[c]];
    acc.add(v * w);
    std::size_t c = d;
    while (c-- > 0) {
      if (++idx[c] < m) break;
      idx[c] = 0;
    }
  }
  return acc.total();
}

inline double power(double base, double a) {
  if (a == 1.0) return base;
  if (a == 2.0) return base * base;
  if (a == 0.0) return 1.0;
  return std::pow(base, a);
}

}  // namespace

double integrate_power(const KdeModel& model, double a, const GridSpec& spec) {
  if (static_cast<int>(model.dim()) != spec.dim) {
    throw DimensionMismatch("integrate_power: grid/model dimension mismatch");
  }
  if (a == 0.0) return 1.0;
  const AxisRule axis = axis_rule(spec);
  std::vector<double> vals = model.raw_on_grid(axis.nodes);
  for (double& v : vals) v = power(model.clamp_value(v), a);
  return reduce_grid(vals, spec, axis);
}

double integrate_power_loo(const KdeModel& model, std::size_t i, double a,
                           const GridSpec& spec,
                           const GridDensityCache* cache) {
  if (i >= model.size()) throw IndexOutOfRange("integrate_power_loo: bad index");
  if (static_cast<int>(model.dim()) != spec.dim) {
    throw DimensionMismatch("integrate_power_loo: dimension mismatch");
  }
  if (a == 0.0) return 1.0;
  GridDensityCache local;
  if (cache == nullptr) {
    local = make_grid_cache(model, spec);
    cache = &local;
  }
  const std::size_t d = static_cast<std::size_t>(spec.dim);
  const std::size_t m = cache->axis.nodes.size();
  const double n = static_cast<double>(model.size());
  const double inv_hd = std::pow(1.0 / model.bandwidth(), static_cast<double>(d));

  std::vector<std::vector<double>> w;
  std::vector<std::size_t> lo, hi;
  model.point_axis_weights(i, cache->axis.nodes, w, lo, hi);

  std::vector<std::size_t> idx(d, 0);
  std::vector<double> vals(cache->raw.size());
  for (std::size_t flat = 0; flat < cache->raw.size(); ++flat) {
    double term = inv_hd;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t j = idx[c];
      if (j < lo[c] || j >= hi[c]) {
        term = 0.0;
        break;
      }
      term *= w[c][j];
    }
    const double down = (n * cache->raw[flat] - term) / (n - 1.0);
    vals[flat] = power(model.clamp_value(down), a);
    std::size_t c = d;
    while (c-- > 0) {
      if (++idx[c] < m) break;
      idx[c] = 0;
    }
  }
  return reduce_grid(vals, spec, cache->axis);
}

}  // namespace ifest
