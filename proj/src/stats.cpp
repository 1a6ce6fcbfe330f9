#include "ifest/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ifest {

void PairwiseAccumulator::add(double x) {
  // Binary-counter merge: combining equal-size blocks yields the same tree
  // as a recursive pairwise sum over the input sequence.
  std::size_t mask = 1;
  std::size_t level = 0;
  ++count_;
  while ((count_ & mask) == 0) {
    ++level;
    mask <<= 1;
  }
  for (std::size_t k = 0; k < level; ++k) {
    x += levels_[k];
  }
  if (level >= levels_.size()) levels_.resize(level + 1, 0.0);
  levels_[level] = x;
}

double PairwiseAccumulator::total() const {
  double s = 0.0;
  std::size_t rem = count_;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (rem & (std::size_t{1} << k)) s += levels_[k];
  }
  return s;
}

double pairwise_sum(std::span<const double> values) {
  PairwiseAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.total();
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double m = mean(values);
  PairwiseAccumulator acc;
  for (double v : values) {
    const double d = v - m;
    acc.add(d * d);
  }
  return acc.total() / static_cast<double>(n - 1);
}

double pooled_variance(std::span<const double> a, std::span<const double> b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na + nb < 3) return sample_variance(na >= nb ? a : b);
  const double ma = mean(a), mb = mean(b);
  PairwiseAccumulator acc;
  for (double v : a) acc.add((v - ma) * (v - ma));
  for (double v : b) acc.add((v - mb) * (v - mb));
  return acc.total() / static_cast<double>(na + nb - 2);
}

double sample_skewness(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3) return 0.0;
  const double m = mean(values);
  PairwiseAccumulator m2, m3;
  for (double v : values) {
    const double d = v - m;
    m2.add(d * d);
    m3.add(d * d * d);
  }
  const double s2 = m2.total() / static_cast<double>(n);
  const double s3 = m3.total() / static_cast<double>(n);
  if (s2 <= 0.0) return 0.0;
  return s3 / std::pow(s2, 1.5);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("inverse_normal_cdf: p must lie in (0,1)");
  }
  // AS 241, PPND16.
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

double ks_distance_to_normal(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf(sorted[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    dist = std::max(dist, std::max(std::abs(cdf - lo), std::abs(hi - cdf)));
  }
  return dist;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double regression_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("regression_slope: need matching arrays, n >= 2");
  }
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace ifest
