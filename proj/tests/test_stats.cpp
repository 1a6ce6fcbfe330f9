#include <doctest.h>

#include <cmath>
#include <vector>

#include "ifest/rng.hpp"
#include "ifest/stats.hpp"

using namespace ifest;

TEST_CASE("pairwise sum matches naive sum and is order-stable") {
  Rng rng(42);
  std::vector<double> v;
  long double naive = 0.0;
  for (int i = 0; i < 1237; ++i) {
    const double x = rng.uniform() - 0.3;
    v.push_back(x);
    naive += x;
  }
  CHECK(pairwise_sum(v) ==
        doctest::Approx(static_cast<double>(naive)).epsilon(1e-13));

  PairwiseAccumulator acc;
  for (double x : v) acc.add(x);
  CHECK(acc.total() == pairwise_sum(v));
  CHECK(acc.count() == v.size());
}

TEST_CASE("sample variance, skewness, median") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(sample_variance(v) == doctest::Approx(2.5));
  CHECK(sample_skewness(v) == doctest::Approx(0.0));
  CHECK(median(v) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
}

TEST_CASE("inverse normal CDF") {
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  // z_{0.975}, the 95% two-sided critical value.
  CHECK(inverse_normal_cdf(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(inverse_normal_cdf(0.995) ==
        doctest::Approx(2.5758293035489004).epsilon(1e-10));
  for (double p : {1e-9, 1e-4, 0.2, 0.5, 0.77, 0.9999, 1.0 - 1e-9}) {
    CHECK(normal_cdf(inverse_normal_cdf(p)) ==
          doctest::Approx(p).epsilon(1e-8));
  }
  CHECK_THROWS(inverse_normal_cdf(0.0));
  CHECK_THROWS(inverse_normal_cdf(1.0));
}

TEST_CASE("KS distance of exact normal quantiles is small") {
  std::vector<double> q;
  const int n = 500;
  for (int i = 0; i < n; ++i) q.push_back(inverse_normal_cdf((i + 0.5) / n));
  CHECK(ks_distance_to_normal(q) < 0.01);

  std::vector<double> shifted;
  for (double x : q) shifted.push_back(x + 2.0);
  CHECK(ks_distance_to_normal(shifted) > 0.5);
}

TEST_CASE("regression slope") {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> y{3, 5, 7, 9};
  CHECK(regression_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("seed derivation is stable and spreads") {
  const std::uint64_t a = derive_seed(7, 1, 1);
  const std::uint64_t b = derive_seed(7, 1, 2);
  const std::uint64_t c = derive_seed(7, 2, 1);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a == derive_seed(7, 1, 1));
}

TEST_CASE("gamma and beta samplers have the right moments") {
  Rng rng(123);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(20.0);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(20.0).epsilon(0.01));
  CHECK(sum2 / n - mean * mean == doctest::Approx(20.0).epsilon(0.05));

  double bsum = 0.0, bsum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = rng.beta(20.0, 20.0);
    bsum += b;
    bsum2 += b * b;
  }
  const double bmean = bsum / n;
  CHECK(bmean == doctest::Approx(0.5).epsilon(0.005));
  // Beta(20,20) variance is ab/((a+b)^2 (a+b+1)) = 1/164.
  CHECK(bsum2 / n - bmean * bmean ==
        doctest::Approx(1.0 / 164.0).epsilon(0.05));
}
