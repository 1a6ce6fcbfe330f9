#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ifest/functionals.hpp"

namespace ifest {

enum class Method { ds, loo, plugin };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct BandwidthPolicy {
  bool auto_cv = true;
  double fixed_f = 0.0;
  double fixed_g = 0.0;  // 0 falls back to fixed_f
};

struct EstimatorConfig {
  BandwidthPolicy bandwidth;
  int kernel_order = 2;
  ClampSpec clamp;
  Boundary boundary = Boundary::mirror;
  int grid_points = 0;            // 0 = per-dimension default
  std::vector<double> cv_grid;    // empty = default_cv_grid()
  int cv_folds = 5;
  std::uint64_t seed = 0;
};

struct Estimate {
  double value = 0.0;
  double variance_f = 0.0;
  double variance_g = 0.0;
  std::size_t n_used = 0;
  std::size_t m_used = 0;
  Method method = Method::loo;
  bool degenerate = false;        // both influence variances vanish (f ≈ g)
  std::uint64_t seed = 0;
  double bandwidth_f = 0.0;
  double bandwidth_g = 0.0;
  int kernel_order = 2;
  // The normal limit is proved for the data-split estimator only; intervals
  // from the leave-one-out path carry this marker.
  bool ci_conjectural = false;
};

// Central confidence interval from the influence-based variance estimate.
// Throws DegenerateCase when the degenerate flag is set.
std::pair<double, double> confidence_interval(const Estimate& e, double level);

// Data-split estimator: fit on one shuffled half, average the influence
// function over the other, swap, average the two values.
Estimate estimate_ds(const FunctionalSpec& spec, const SampleSet& x,
                     const SampleSet* y, const EstimatorConfig& cfg);

// Leave-one-out estimator; cross-sample densities use the full other sample
// while own-sample densities drop the visited point. The shorter sample is
// cycled when sizes differ.
Estimate estimate_loo(const FunctionalSpec& spec, const SampleSet& x,
                      const SampleSet* y, const EstimatorConfig& cfg);

// Plug-in baseline: evaluate the functional on full-sample fits.
Estimate estimate_plugin(const FunctionalSpec& spec, const SampleSet& x,
                         const SampleSet* y, const EstimatorConfig& cfg);

Estimate estimate(const FunctionalSpec& spec, Method method,
                  const SampleSet& x, const SampleSet* y,
                  const EstimatorConfig& cfg);

// Leave-one-out estimate of S(a,b) = ∫ f^a g^b  (a+b=1, a,b not in {0,1}).
Estimate estimate_power_integral(double a, double b, const SampleSet& x,
                                 const SampleSet& y,
                                 const EstimatorConfig& cfg);

// Closed-form estimate of the asymptotic variance of the conditional
// Tsallis divergence, assembled from three power-integral estimates.
// Rejects alpha in {0, 1/2, 1}, where the power-integral exponents leave
// their admissible range.
double estimate_cond_tsallis_variance(const SampleSet& x, const SampleSet& y,
                                      double alpha,
                                      const EstimatorConfig& cfg);

// Fitted full-sample models plus everything influence evaluations need.
struct FittedDensities {
  DensityPair pair;
  GridSpec grid;
  double bandwidth_f = 0.0;
  double bandwidth_g = 0.0;
};

FittedDensities fit_densities(const FunctionalSpec& spec, const SampleSet& x,
                              const SampleSet* y, const EstimatorConfig& cfg);

double resolve_bandwidth(const SampleSet& samples, const EstimatorConfig& cfg,
                         bool second);

}  // namespace ifest
