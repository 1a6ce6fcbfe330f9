#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ifest {

// Deterministic pairwise (tree) summation. The reduction order depends only
// on the order in which values are fed, never on worker count, so results
// are bit-stable for a fixed input sequence.
class PairwiseAccumulator {
 public:
  void add(double x);
  double total() const;
  std::size_t count() const { return count_; }

 private:
  std::vector<double> levels_;  // levels_[k] holds a partial sum of 2^k terms
  std::size_t count_ = 0;
};

double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);

// Unbiased sample variance (n-1 divisor); 0 for fewer than two values.
double sample_variance(std::span<const double> values);

// Pooled variance of two groups, each centered at its own mean.
double pooled_variance(std::span<const double> a, std::span<const double> b);

double sample_skewness(std::span<const double> values);

double normal_cdf(double x);

// Inverse of the standard normal CDF (Wichura's AS 241), |error| < 1e-13
// over (0,1).
double inverse_normal_cdf(double p);

// Kolmogorov-Smirnov distance between the empirical CDF of `values` and the
// standard normal CDF.
double ks_distance_to_normal(std::span<const double> values);

double median(std::vector<double> values);

// Least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

}  // namespace ifest
