#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ifest/samples.hpp"

namespace ifest {

// 1-D building blocks for the synthetic benchmark densities:
//   uniform  : 1 on [0,1]
//   f1       : 0.5 + 5 t^9          (uniform/max-of-10-uniforms mixture)
//   f2       : 0.5 + 0.5 t^19 (1-t)^19 / B(20,20)
//   beta2020 : Beta(20,20)
enum class Dist1d { uniform, f1, f2, beta2020 };

// Product density on [0,1]^d with independently sampled coordinates.
class AnalyticDensity {
 public:
  AnalyticDensity() = default;
  explicit AnalyticDensity(std::vector<Dist1d> axes) : axes_(std::move(axes)) {}

  int dim() const { return static_cast<int>(axes_.size()); }
  std::span<const Dist1d> axes() const { return axes_; }

  double density(std::span<const double> x) const;

  // Marginal density over a subset of coordinates (product structure).
  double marginal_density(std::span<const std::size_t> columns,
                          std::span<const double> x) const;

  AnalyticDensity marginal(std::span<const std::size_t> columns) const;

  SampleSet sample(std::size_t n, std::uint64_t seed) const;

  std::string name() const;

  // Parses product specs like "f1", "f2xuniform", or "f2x4" (an integer
  // token repeats the preceding kind).
  static AnalyticDensity parse(const std::string& spec);

 private:
  std::vector<Dist1d> axes_;
};

double dist1d_density(Dist1d kind, double t);
double dist1d_cdf(Dist1d kind, double t);

}  // namespace ifest

#include "ifest/functionals.hpp"

namespace ifest {

// Pointwise-evaluable density set over analytic densities, with the
// marginal blocks a spec needs.
DensitySet analytic_density_set(const FunctionalSpec& spec,
                                const AnalyticDensity& a,
                                const AnalyticDensity* b);

// Ground truth of the functional on analytic densities by high-resolution
// quadrature; pass GridSpec::oracle(dim) unless a specific grid is wanted.
double oracle_truth(const FunctionalSpec& spec, const AnalyticDensity& a,
                    const AnalyticDensity* b, const GridSpec& fine_grid);

}  // namespace ifest
