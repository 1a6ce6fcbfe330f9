#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "ifest/density.hpp"
#include "ifest/quadrature.hpp"

namespace ifest {

enum class Kind {
  shannon_entropy,
  tsallis_entropy,
  renyi_entropy,
  l2_divergence,
  hellinger_divergence,
  chi_squared_divergence,
  f_divergence,
  kl_divergence,
  tsallis_divergence,
  renyi_divergence,
  cond_kl_divergence,
  cond_tsallis_divergence,
  shannon_mi,
  cond_tsallis_mi,
  power_integral,
};

const char* kind_name(Kind kind);
Kind kind_from_name(const std::string& name);  // accepts short aliases
std::span<const Kind> all_kinds();

using ScalarFn = std::function<double(double)>;

// Which functional to estimate, with its parameters. Mutual-information
// kinds act on one joint sample whose columns split into an X block, a Y
// block, and (for the conditional version) a trailing Z block.
struct FunctionalSpec {
  Kind kind = Kind::shannon_entropy;
  double alpha = 0.0;
  double beta_exponent = 0.0;  // power_integral second exponent
  ScalarFn phi;                // f_divergence callbacks
  ScalarFn phi_prime;
  int z_dim = 0;
  int x_dim = 0;  // 0 = split the non-conditioning block evenly (MI kinds)

  int arity() const;
  bool needs_alpha() const;
  bool is_mi() const;
  bool is_conditional() const;

  // Throws BadAlpha / BadExponents / DimensionMismatch on invalid settings.
  void validate() const;

  // Resolved MI block widths for a joint sample of dimension d.
  void block_layout(int d, int& xd, int& yd, int& zd) const;
};

using DensityFn = std::function<double(std::span<const double>)>;

// A pointwise-evaluable density; when backed by a fitted model the grid
// machinery takes the separable fast path.
struct Density {
  DensityFn fn;
  const KdeModel* model = nullptr;

  explicit operator bool() const { return static_cast<bool>(fn); }
  double operator()(std::span<const double> x) const { return fn(x); }
};

Density density_of(const KdeModel& model);

// The densities a functional is evaluated on: the first (joint) density,
// the second for arity-2 kinds, and marginal blocks for the MI kinds.
struct DensitySet {
  int dim = 0;
  int x_dim = 0, y_dim = 0, z_dim = 0;
  Density f;
  Density g;
  Density mx, my;         // shannon_mi marginals
  Density mxz, myz, mz;   // conditional-MI marginals
};

// Owning bundle of fitted models for a functional. Marginal models are
// projections of the joint sample refitted with the joint bandwidth, which
// makes them the exact marginals of the joint product-kernel estimate.
struct DensityPair {
  std::shared_ptr<const KdeModel> first;
  std::shared_ptr<const KdeModel> second;
  std::shared_ptr<const KdeModel> mx, my, mxz, myz, mz;
  int x_dim = 0, y_dim = 0, z_dim = 0;

  DensitySet as_set() const;
};

// Builds the model bundle a spec needs from already-fitted joint models.
DensityPair make_density_pair(const FunctionalSpec& spec,
                              std::shared_ptr<const KdeModel> first,
                              std::shared_ptr<const KdeModel> second);

// Scalar integrals shared by influence evaluations at fixed densities.
struct OffsetCache {
  bool ready = false;
  double v1 = 0.0, v2 = 0.0, v3 = 0.0;
};

OffsetCache make_offset_cache(const FunctionalSpec& spec, const DensitySet& ds,
                              const GridSpec& grid);

// T evaluated on the supplied densities by quadrature.
double plugin_value(const FunctionalSpec& spec, const DensitySet& ds,
                    const GridSpec& grid);

enum class Which { first, second };

// Influence function at x, evaluated on the supplied densities (including
// any integral offset terms).
double influence(const FunctionalSpec& spec, Which which,
                 std::span<const double> x, const DensitySet& ds,
                 const GridSpec& grid, const OffsetCache* cache = nullptr);

// First-order expansion residual T(p + t(q-p)) - T(p) - t * Σ ∫ ψ (q - p);
// O(t^2) for every catalog kind.
double vme_residual(const FunctionalSpec& spec, const DensitySet& p,
                    const DensitySet& q, double t, const GridSpec& grid);

// Closed-form per-index summand of the leave-one-out estimator, expressed
// in the density evaluations it consumes: fx,gx at the i-th X point, fy,gy
// at the cycled Y point, and the per-index integral for rows that carry one
// (Tsallis entropy: ∫fhat_{-i}^α; L2: ∫(fhat_{-i} - ghat)^2). Constants are
// folded in so the estimate is the plain mean of summands.
double closed_form_summand(const FunctionalSpec& spec, double fx, double gx,
                           double fy, double gy, double integral);

// The analogous summand of the power-integral estimator S(a,b); also the
// inner summand of the plug-through Renyi kinds.
double power_integral_summand(double a, double b, double fx, double gx,
                              double fy, double gy);

}  // namespace ifest
