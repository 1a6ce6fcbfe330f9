#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ifest/density.hpp"

namespace ifest {

enum class QuadRule { midpoint, gauss_legendre };

struct GridSpec {
  int dim = 1;
  int points_per_axis = 0;  // 0 = default for the dimension
  QuadRule rule = QuadRule::midpoint;

  int resolved_points() const;
  std::size_t total_nodes() const;
  void validate() const;  // throws GridTooLarge for m^d > 1e7 or dim > 4

  static GridSpec defaults(int dim) { return GridSpec{dim, 0, QuadRule::midpoint}; }
  // 4x the default resolution, for ground-truth integrals.
  static GridSpec oracle(int dim);
};

struct AxisRule {
  std::vector<double> nodes;    // ascending, inside (0,1)
  std::vector<double> weights;  // same length
};

AxisRule axis_rule(const GridSpec& spec);

using Integrand = std::function<double(std::span<const double>)>;

// Tensor-product quadrature of g over [0,1]^dim with a deterministic
// pairwise reduction over nodes.
double integrate(const Integrand& g, const GridSpec& spec);

// Clamped model values at every grid node, row-major over multi-indices.
std::vector<double> values_on_grid(const KdeModel& model, const GridSpec& spec);

// Raw grid sums reused across leave-one-out integrals of one model.
struct GridDensityCache {
  GridSpec spec;
  AxisRule axis;
  std::vector<double> raw;  // unclamped node values
};

GridDensityCache make_grid_cache(const KdeModel& model, const GridSpec& spec);

// ∫ eval(model, x)^a dx.
double integrate_power(const KdeModel& model, double a, const GridSpec& spec);

// ∫ eval_loo_at(model, i, x)^a dx through the rank-one downdate of the
// cached grid sums; O(m^d) per index after the O(n m^d) cache build.
double integrate_power_loo(const KdeModel& model, std::size_t i, double a,
                           const GridSpec& spec,
                           const GridDensityCache* cache = nullptr);

}  // namespace ifest
