#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ifest/errors.hpp"
#include "ifest/estimators.hpp"
#include "ifest/rng.hpp"
#include "ifest/stats.hpp"
#include "ifest/synthdata.hpp"

using namespace ifest;

namespace {

FunctionalSpec make(Kind kind, double alpha = 0.0) {
  FunctionalSpec spec;
  spec.kind = kind;
  spec.alpha = alpha;
  if (kind == Kind::power_integral) spec.beta_exponent = 1.0 - alpha;
  if (kind == Kind::cond_kl_divergence ||
      kind == Kind::cond_tsallis_divergence || kind == Kind::cond_tsallis_mi) {
    spec.z_dim = 1;
  }
  return spec;
}

EstimatorConfig quick_config(std::uint64_t seed = 1) {
  EstimatorConfig cfg;
  cfg.seed = seed;
  cfg.cv_grid = {0.08, 0.12, 0.18, 0.27, 0.4, 0.6};
  return cfg;
}

SampleSet permuted(const SampleSet& s, const std::vector<std::size_t>& perm) {
  return s.take_rows(perm);
}

}  // namespace

TEST_CASE("confidence interval from a hand-built estimate") {
  Estimate e;
  e.value = 0.0;
  e.variance_f = 1.0;
  e.n_used = 100;
  e.m_used = 0;
  const auto [lo, hi] = confidence_interval(e, 0.95);
  CHECK(lo == doctest::Approx(-0.196).epsilon(2e-3));
  CHECK(hi == doctest::Approx(0.196).epsilon(2e-3));

  const auto [lo99, hi99] = confidence_interval(e, 0.99);
  CHECK(lo99 < lo);
  CHECK(hi99 > hi);

  e.degenerate = true;
  CHECK_THROWS_AS(confidence_interval(e, 0.95), DegenerateCase);
  e.degenerate = false;
  CHECK_THROWS(confidence_interval(e, 0.0));
}

TEST_CASE("input validation") {
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet tiny = u.sample(3, 1);
  const SampleSet x = u.sample(50, 2);
  CHECK_THROWS_AS(
      estimate_ds(make(Kind::shannon_entropy), tiny, nullptr, quick_config()),
      TooFewSamples);
  CHECK_THROWS_AS(
      estimate_loo(make(Kind::kl_divergence), x, nullptr, quick_config()),
      DimensionMismatch);
  CHECK_THROWS_AS(
      estimate_loo(make(Kind::shannon_entropy), x, &x, quick_config()),
      DimensionMismatch);
}

TEST_CASE("shannon leave-one-out on the two-point model") {
  SampleSet s(2, 1);
  s(0, 0) = 0.25;
  s(1, 0) = 0.75;
  EstimatorConfig cfg;
  cfg.bandwidth.auto_cv = false;
  cfg.bandwidth.fixed_f = 1.0;
  cfg.kernel_order = 0;
  cfg.boundary = Boundary::none;
  const Estimate e =
      estimate_loo(make(Kind::shannon_entropy), s, nullptr, cfg);
  CHECK(e.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("shannon leave-one-out equals brute-force refits") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const SampleSet s = f2.sample(60, 5);
  EstimatorConfig cfg;
  cfg.bandwidth.auto_cv = false;
  cfg.bandwidth.fixed_f = 0.25;
  const Estimate e =
      estimate_loo(make(Kind::shannon_entropy), s, nullptr, cfg);

  PairwiseAccumulator acc;
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < s.size(); ++r) {
      if (r != i) keep.push_back(r);
    }
    const KdeModel refit =
        KdeModel::fit(s.take_rows(keep), 0.25, legendre_kernel(2), ClampSpec{},
                      Boundary::mirror);
    acc.add(-std::log(refit.eval(s.row(i))));
  }
  CHECK(e.value ==
        doctest::Approx(acc.total() / static_cast<double>(s.size()))
            .epsilon(1e-10));
}

TEST_CASE("trivial truths at moderate sample sizes") {
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet x = u.sample(800, 11);

  const Estimate shannon =
      estimate_loo(make(Kind::shannon_entropy), x, nullptr, quick_config());
  CHECK(std::abs(shannon.value) < 0.08);

  const Estimate tsallis = estimate_loo(make(Kind::tsallis_entropy, 2.0), x,
                                        nullptr, quick_config());
  CHECK(std::abs(tsallis.value) < 0.08);

  const Estimate plug =
      estimate_plugin(make(Kind::shannon_entropy), x, nullptr, quick_config());
  CHECK(std::abs(plug.value) < 0.1);
  CHECK(plug.variance_f == 0.0);
  CHECK_FALSE(plug.degenerate);
}

TEST_CASE("identical samples are degenerate for divergences") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const SampleSet x = f2.sample(500, 3);

  const Estimate kl =
      estimate_loo(make(Kind::kl_divergence), x, &x, quick_config());
  CHECK(std::abs(kl.value) < 0.05);
  CHECK(kl.degenerate);

  const Estimate hell =
      estimate_ds(make(Kind::hellinger_divergence), x, &x, quick_config());
  CHECK(std::abs(hell.value) < 0.05);
  CHECK(hell.degenerate);

  const Estimate tsallis =
      estimate_loo(make(Kind::tsallis_divergence, 2.0), x, &x, quick_config());
  CHECK(tsallis.degenerate);
  CHECK_THROWS_AS(confidence_interval(tsallis, 0.9), DegenerateCase);
}

TEST_CASE("kl estimate against the quadrature oracle") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet x = f2.sample(1200, 21);
  const SampleSet y = u.sample(1200, 22);
  const double truth =
      oracle_truth(make(Kind::kl_divergence), f2, &u, GridSpec::oracle(1));
  const Estimate e =
      estimate_loo(make(Kind::kl_divergence), x, &y, quick_config());
  CHECK(std::abs(e.value - truth) < 0.06);
  CHECK_FALSE(e.degenerate);
  const auto [lo, hi] = confidence_interval(e, 0.95);
  CHECK(lo < hi);
}

TEST_CASE("loo estimator is invariant under joint row permutations") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet x = f2.sample(60, 31);
  const SampleSet y = u.sample(60, 32);
  EstimatorConfig cfg;
  cfg.bandwidth.auto_cv = false;
  cfg.bandwidth.fixed_f = 0.3;

  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(8);
  for (std::size_t i = perm.size(); i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.next_u64() % i]);
  }
  const FunctionalSpec spec = make(Kind::kl_divergence);
  const double before = estimate_loo(spec, x, &y, cfg).value;
  const SampleSet xp = permuted(x, perm);
  const SampleSet yp = permuted(y, perm);
  const double after = estimate_loo(spec, xp, &yp, cfg).value;
  CHECK(before == doctest::Approx(after).epsilon(1e-12));
}

TEST_CASE("ds estimator is deterministic for a fixed seed") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet x = f2.sample(200, 41);
  const SampleSet y = u.sample(200, 42);
  const FunctionalSpec spec = make(Kind::hellinger_divergence);
  const Estimate a = estimate_ds(spec, x, &y, quick_config(5));
  const Estimate b = estimate_ds(spec, x, &y, quick_config(5));
  CHECK(a.value == b.value);
  CHECK(a.variance_f == b.variance_f);
  const Estimate c = estimate_ds(spec, x, &y, quick_config(6));
  CHECK(a.value != c.value);
}

TEST_CASE("power integral identities") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const SampleSet x = f2.sample(600, 51);

  // S(a, 1-a) of a distribution with itself is ∫f = 1; identical samples
  // make the ratio terms exactly one.
  const Estimate same =
      estimate_power_integral(0.5, 0.5, x, x, quick_config());
  CHECK(same.value == doctest::Approx(1.0).epsilon(1e-12));

  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet y = u.sample(600, 52);
  const Estimate s_half = estimate_power_integral(0.5, 0.5, x, y,
                                                  quick_config());
  const Estimate hell = estimate_loo(make(Kind::hellinger_divergence), x, &y,
                                     quick_config());
  CHECK(std::abs(2.0 - 2.0 * s_half.value - hell.value) <= 0.02);

  CHECK_THROWS_AS(estimate_power_integral(2.0, 0.5, x, y, quick_config()),
                  BadExponents);
}

TEST_CASE("renyi divergence is the log of the power integral") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet x = f2.sample(400, 61);
  const SampleSet y = u.sample(400, 62);
  const double alpha = 0.75;
  const Estimate renyi =
      estimate_loo(make(Kind::renyi_divergence, alpha), x, &y, quick_config());
  const Estimate power =
      estimate_power_integral(alpha, 1.0 - alpha, x, y, quick_config());
  CHECK(renyi.value ==
        doctest::Approx(std::log(power.value) / (alpha - 1.0)).epsilon(1e-12));
}

TEST_CASE("conditional tsallis variance estimate") {
  const AnalyticDensity joint = AnalyticDensity::parse("f2xuniform");
  const SampleSet x = joint.sample(400, 71);
  CHECK_THROWS_AS(estimate_cond_tsallis_variance(x, x, 0.5, quick_config()),
                  BadAlpha);
  CHECK_THROWS_AS(estimate_cond_tsallis_variance(x, x, 1.0, quick_config()),
                  BadAlpha);

  // identical samples: the three power-integral estimates are exactly one
  // and the coefficients cancel
  const double v = estimate_cond_tsallis_variance(x, x, 0.75, quick_config());
  CHECK(std::abs(v) < 1e-10);

  // generic vs specific on distinct samples: same order of magnitude
  const AnalyticDensity u2 = AnalyticDensity::parse("uniformx2");
  const SampleSet y = u2.sample(400, 72);
  const double specific =
      estimate_cond_tsallis_variance(x, y, 0.75, quick_config());
  const Estimate generic = estimate_loo(
      make(Kind::cond_tsallis_divergence, 0.75), x, &y, quick_config());
  const double big_n = 800.0;
  const double generic_var =
      big_n / 400.0 * generic.variance_f + big_n / 400.0 * generic.variance_g;
  CHECK(specific > 0.0);
  CHECK(specific / generic_var > 0.3);
  CHECK(specific / generic_var < 3.0);
}

TEST_CASE("cycling reuses each shorter-sample index the right way") {
  // Brute-force reassembly: every X index appears once, the shorter Y
  // sample cycles, own-sample density drops the visited point and the
  // cross densities use the full other sample.
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const std::size_t n = 30, m = 15;
  const SampleSet x = f2.sample(n, 81);
  const SampleSet y = u.sample(m, 82);
  const double h = 0.3;
  EstimatorConfig cfg;
  cfg.bandwidth.auto_cv = false;
  cfg.bandwidth.fixed_f = h;
  const FunctionalSpec spec = make(Kind::kl_divergence);
  const Estimate e = estimate_loo(spec, x, &y, cfg);
  CHECK(e.n_used == n);
  CHECK(e.m_used == m);

  const KdeModel fm =
      KdeModel::fit(x, h, legendre_kernel(2), ClampSpec{}, Boundary::mirror);
  const KdeModel gm =
      KdeModel::fit(y, h, legendre_kernel(2), ClampSpec{}, Boundary::mirror);
  PairwiseAccumulator acc;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = k % n;
    const std::size_t j = k % m;
    std::vector<std::size_t> keep_x, keep_y;
    for (std::size_t r = 0; r < n; ++r) {
      if (r != i) keep_x.push_back(r);
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r != j) keep_y.push_back(r);
    }
    const KdeModel f_refit =
        KdeModel::fit(x.take_rows(keep_x), h, legendre_kernel(2), ClampSpec{},
                      Boundary::mirror);
    const KdeModel g_refit =
        KdeModel::fit(y.take_rows(keep_y), h, legendre_kernel(2), ClampSpec{},
                      Boundary::mirror);
    acc.add(1.0 + std::log(f_refit.eval(x.row(i)) / gm.eval(x.row(i))) -
            fm.eval(y.row(j)) / g_refit.eval(y.row(j)));
  }
  CHECK(e.value ==
        doctest::Approx(acc.total() / static_cast<double>(n)).epsilon(1e-9));
}

TEST_CASE("mutual information estimates on an independent joint") {
  const AnalyticDensity joint = AnalyticDensity::parse("f2xuniform");
  const SampleSet s = joint.sample(1500, 91);
  const Estimate e =
      estimate_loo(make(Kind::shannon_mi), s, nullptr, quick_config());
  CHECK(std::abs(e.value) < 0.1);

  // The alpha family needs densities bounded away from zero; in d=3 the
  // truncation keeps downdated values off the floor where negative powers
  // would explode.
  FunctionalSpec cmi = make(Kind::cond_tsallis_mi, 0.75);
  const AnalyticDensity joint3 = AnalyticDensity::parse("f2xuniformxf1");
  const SampleSet s3 = joint3.sample(250, 92);
  EstimatorConfig cfg = quick_config();
  cfg.grid_points = 32;
  cfg.clamp.lower = 0.1;
  const Estimate e3 = estimate_loo(cmi, s3, nullptr, cfg);
  CHECK(std::abs(e3.value) < 0.3);
}
