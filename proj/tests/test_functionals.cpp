#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "ifest/errors.hpp"
#include "ifest/estimators.hpp"
#include "ifest/functionals.hpp"
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
      kind == Kind::cond_tsallis_divergence) {
    spec.z_dim = 1;
  }
  if (kind == Kind::cond_tsallis_mi) spec.z_dim = 1;
  if (kind == Kind::f_divergence) {
    spec.phi = [](double t) { return t * std::log(t); };
    spec.phi_prime = [](double t) { return std::log(t) + 1.0; };
  }
  return spec;
}

std::shared_ptr<const KdeModel> fit_shared(const SampleSet& s, double h,
                                           Boundary b = Boundary::mirror) {
  return std::make_shared<const KdeModel>(
      KdeModel::fit(s, h, legendre_kernel(2), ClampSpec{}, b));
}

DensitySet uniform_pair_set(const FunctionalSpec& spec, int dim) {
  const AnalyticDensity u(std::vector<Dist1d>(dim, Dist1d::uniform));
  return analytic_density_set(spec, u, &u);
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(make(Kind::tsallis_divergence, 1.0).validate(), BadAlpha);
  CHECK_THROWS_AS(make(Kind::renyi_entropy, 0.0).validate(), BadAlpha);
  CHECK_NOTHROW(make(Kind::tsallis_divergence, 2.0).validate());

  FunctionalSpec power;
  power.kind = Kind::power_integral;
  power.alpha = 2.0;
  power.beta_exponent = 0.5;
  CHECK_THROWS_AS(power.validate(), BadExponents);
  power.alpha = 0.5;
  CHECK_NOTHROW(power.validate());

  FunctionalSpec fdiv;
  fdiv.kind = Kind::f_divergence;
  CHECK_THROWS(fdiv.validate());

  CHECK(make(Kind::kl_divergence).arity() == 2);
  CHECK(make(Kind::shannon_mi).arity() == 1);
  CHECK(kind_from_name("kl") == Kind::kl_divergence);
  CHECK(kind_from_name("tsallis_div") == Kind::tsallis_divergence);
  CHECK_THROWS(kind_from_name("nope"));
}

TEST_CASE("plug-in trivial values") {
  GridSpec grid{1, 1024, QuadRule::midpoint};

  // A constant density has zero Shannon entropy.
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const FunctionalSpec shannon = make(Kind::shannon_entropy);
  CHECK(plugin_value(shannon, analytic_density_set(shannon, u, nullptr),
                     grid) == doctest::Approx(0.0).epsilon(1e-12));

  // Hellinger of a model against itself collapses to 2 - 2 * mass. The
  // mirrored kernel sum has exactly unit mass; the quadrature error is set
  // by the kernel's support-edge jumps, which scale as K(1)/(n h).
  const SampleSet s = u.sample(2000, 21);
  const auto model = fit_shared(s, 0.5);
  const FunctionalSpec hell = make(Kind::hellinger_divergence);
  const DensityPair pair = make_density_pair(hell, model, model);
  GridSpec grid_fine{1, 8192, QuadRule::midpoint};
  CHECK(std::abs(plugin_value(hell, pair.as_set(), grid_fine)) < 1e-6);
}

TEST_CASE("tsallis plug-in equals the power-integral identity") {
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const SampleSet s = u.sample(400, 3);
  const auto model = fit_shared(s, 0.25);
  const FunctionalSpec tsallis = make(Kind::tsallis_entropy, 2.0);
  const DensityPair pair = make_density_pair(tsallis, model, nullptr);
  GridSpec grid{1, 2048, QuadRule::midpoint};
  const double via_plugin = plugin_value(tsallis, pair.as_set(), grid);
  const double via_power = (1.0 - integrate_power(*model, 2.0, grid)) / 1.0;
  CHECK(via_plugin == doctest::Approx(via_power).epsilon(1e-12));
}

TEST_CASE("conditional tsallis influence matches its closed form") {
  const AnalyticDensity a = AnalyticDensity::parse("f2xuniform");
  const AnalyticDensity b = AnalyticDensity::parse("uniformx2");
  const SampleSet xs = a.sample(120, 5);
  const SampleSet ys = b.sample(120, 6);
  const auto fm = fit_shared(xs, 0.3);
  const auto gm = fit_shared(ys, 0.3);
  const FunctionalSpec spec = make(Kind::cond_tsallis_divergence, 0.75);
  const DensityPair pair = make_density_pair(spec, fm, gm);
  const DensitySet ds = pair.as_set();
  GridSpec grid{2, 256, QuadRule::midpoint};

  const double alpha = 0.75, beta = 0.25;
  const Integrand s_term = [&](std::span<const double> x) {
    return std::pow(fm->eval(x), alpha) * std::pow(gm->eval(x), beta);
  };
  const double s_val = integrate(s_term, grid);

  Rng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    const std::vector<double> x{rng.uniform(), rng.uniform()};
    const double expected =
        alpha / (alpha - 1.0) *
        (std::pow(fm->eval(x), alpha - 1.0) * std::pow(gm->eval(x), beta) -
         s_val);
    CHECK(influence(spec, Which::first, x, ds, grid) ==
          doctest::Approx(expected).epsilon(1e-9));
    const double expected_g =
        -(std::pow(fm->eval(x), alpha) * std::pow(gm->eval(x), beta - 1.0) -
          s_val);
    CHECK(influence(spec, Which::second, x, ds, grid) ==
          doctest::Approx(expected_g).epsilon(1e-9));
  }
}

TEST_CASE("influence vanishes identically at f = g") {
  // Exact on uniform pairs, where the offset quadrature is exact.
  Rng rng(23);
  for (Kind kind : {Kind::hellinger_divergence, Kind::tsallis_divergence,
                    Kind::renyi_divergence, Kind::kl_divergence,
                    Kind::chi_squared_divergence, Kind::l2_divergence,
                    Kind::power_integral}) {
    const FunctionalSpec spec =
        make(kind, kind == Kind::power_integral ? 0.5 : 0.75);
    const DensitySet ds = uniform_pair_set(spec, 1);
    GridSpec grid{1, 512, QuadRule::midpoint};
    const OffsetCache cache = make_offset_cache(spec, ds, grid);
    for (int rep = 0; rep < 10; ++rep) {
      const std::vector<double> x{rng.uniform()};
      CHECK(std::abs(influence(spec, Which::first, x, ds, grid, &cache)) <
            1e-9);
      CHECK(std::abs(influence(spec, Which::second, x, ds, grid, &cache)) <
            1e-9);
    }
  }

  // On a fitted pair (same model twice) the values are a shared constant
  // bounded by the quadrature error of the mass.
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const auto model = fit_shared(f2.sample(150, 2), 0.25);
  const FunctionalSpec tsallis = make(Kind::tsallis_divergence, 2.0);
  const DensityPair pair = make_density_pair(tsallis, model, model);
  GridSpec grid{1, 2048, QuadRule::midpoint};
  const OffsetCache cache = make_offset_cache(tsallis, pair.as_set(), grid);
  std::vector<double> vals;
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<double> x{(rep + 0.5) / 10.0};
    vals.push_back(
        influence(tsallis, Which::first, x, pair.as_set(), grid, &cache));
    CHECK(std::abs(vals.back()) < 1e-5);
  }
  CHECK(sample_variance(vals) < 1e-24);
}

TEST_CASE("influence has zero mean under the fitted density (quick)") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const SampleSet s = f2.sample(150, 12);
  const auto model = fit_shared(s, 0.25);
  const FunctionalSpec spec = make(Kind::shannon_entropy);
  const DensityPair pair = make_density_pair(spec, model, nullptr);
  const DensitySet ds = pair.as_set();
  GridSpec grid{1, 2048, QuadRule::midpoint};
  const OffsetCache cache = make_offset_cache(spec, ds, grid);

  // rejection-sample from the fitted density
  Rng rng(77);
  double envelope = 0.0;
  for (int i = 0; i <= 512; ++i) {
    const std::vector<double> x{i / 512.0};
    envelope = std::max(envelope, model->eval(x));
  }
  envelope *= 1.5;
  const int draws = 20000;
  PairwiseAccumulator mean_acc, sq_acc;
  for (int k = 0; k < draws;) {
    const std::vector<double> x{rng.uniform()};
    if (rng.uniform() * envelope <= model->eval(x)) {
      const double psi = influence(spec, Which::first, x, ds, grid, &cache);
      mean_acc.add(psi);
      sq_acc.add(psi * psi);
      ++k;
    }
  }
  const double mean = mean_acc.total() / draws;
  const double var = sq_acc.total() / draws - mean * mean;
  const double stderr_mean = std::sqrt(var / draws);
  CHECK(std::abs(mean) < 4.0 * stderr_mean);
}

TEST_CASE("vme residual is zero when q equals p") {
  const FunctionalSpec spec = make(Kind::shannon_entropy);
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const DensitySet p = analytic_density_set(spec, f2, nullptr);
  GridSpec grid{1, 1024, QuadRule::midpoint};
  CHECK(vme_residual(spec, p, p, 0.05, grid) == 0.0);
}

TEST_CASE("vme residual scales quadratically in t") {
  GridSpec grid{1, 2048, QuadRule::midpoint};
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");

  const FunctionalSpec shannon = make(Kind::shannon_entropy);
  const DensitySet p = analytic_density_set(shannon, u, nullptr);
  const DensitySet q = analytic_density_set(shannon, f2, nullptr);
  const double r1 = vme_residual(shannon, p, q, 0.05, grid);
  const double r2 = vme_residual(shannon, p, q, 0.025, grid);
  CHECK(std::abs(r1 / r2) > 3.0);
  CHECK(std::abs(r1 / r2) < 5.0);

  const FunctionalSpec cond = make(Kind::cond_tsallis_divergence, 0.75);
  const AnalyticDensity a2 = AnalyticDensity::parse("f2xuniform");
  const AnalyticDensity b2 = AnalyticDensity::parse("f1xuniform");
  const AnalyticDensity u2 = AnalyticDensity::parse("uniformx2");
  GridSpec grid2{2, 256, QuadRule::midpoint};
  const DensitySet pc = analytic_density_set(cond, a2, &u2);
  const DensitySet qc = analytic_density_set(cond, b2, &a2);
  const double c1 = vme_residual(cond, pc, qc, 0.05, grid2);
  const double c2 = vme_residual(cond, pc, qc, 0.025, grid2);
  CHECK(std::abs(c1 / c2) > 3.0);
  CHECK(std::abs(c1 / c2) < 5.0);
}

TEST_CASE("closed-form summands agree with the generic assembly") {
  // Both routes evaluated on the same downdated pair of models.
  Rng rng(31);
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity f1 = AnalyticDensity::parse("f1");
  const std::size_t n = 40;
  const SampleSet xs = f2.sample(n, 71);
  const SampleSet ys = f1.sample(n, 72);
  GridSpec grid{1, 1024, QuadRule::midpoint};

  for (Kind kind : {Kind::kl_divergence, Kind::hellinger_divergence}) {
    const FunctionalSpec spec = make(kind, 0.0);
    for (int rep = 0; rep < 4; ++rep) {
      const std::size_t i = rng.next_u64() % n;
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < n; ++r) {
        if (r != i) keep.push_back(r);
      }
      const auto fm = fit_shared(xs.take_rows(keep), 0.25);
      const auto gm = fit_shared(ys.take_rows(keep), 0.25);
      const DensityPair pair = make_density_pair(spec, fm, gm);
      const DensitySet ds = pair.as_set();
      const OffsetCache cache = make_offset_cache(spec, ds, grid);
      const double generic = plugin_value(spec, ds, grid) +
                             influence(spec, Which::first, xs.row(i), ds, grid,
                                       &cache) +
                             influence(spec, Which::second, ys.row(i), ds,
                                       grid, &cache);
      const double closed = closed_form_summand(
          spec, fm->eval(xs.row(i)), gm->eval(xs.row(i)), fm->eval(ys.row(i)),
          gm->eval(ys.row(i)), 0.0);
      CHECK(generic == doctest::Approx(closed).epsilon(1e-9));
    }
  }
}

TEST_CASE("f-divergence with phi(t) = t log t reduces to KL") {
  const FunctionalSpec fdiv = make(Kind::f_divergence);
  const FunctionalSpec kl = make(Kind::kl_divergence);
  for (double fx : {0.6, 1.3}) {
    for (double gy : {0.9, 2.0}) {
      const double a = closed_form_summand(fdiv, fx, 1.1, 0.8, gy, 0.0);
      const double b = closed_form_summand(kl, fx, 1.1, 0.8, gy, 0.0);
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("shannon mutual information of an independent fit is near zero") {
  const AnalyticDensity joint = AnalyticDensity::parse("f2xuniform");
  const SampleSet s = joint.sample(400, 15);
  const auto model = fit_shared(s, 0.3);
  FunctionalSpec spec = make(Kind::shannon_mi);
  const DensityPair pair = make_density_pair(spec, model, nullptr);
  GridSpec grid{2, 256, QuadRule::midpoint};
  CHECK(std::abs(plugin_value(spec, pair.as_set(), grid)) < 0.1);

  // the influence of the joint is centered by construction
  const OffsetCache cache = make_offset_cache(spec, pair.as_set(), grid);
  const std::vector<double> x{0.4, 0.6};
  const std::span<const double> xv(x);
  const double psi = influence(spec, Which::first, x, pair.as_set(), grid,
                               &cache);
  const double mx = pair.mx->eval(xv.subspan(0, 1));
  const double my = pair.my->eval(xv.subspan(1, 1));
  const double expected = std::log(model->eval(x) / (mx * my)) - cache.v1;
  CHECK(psi == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("renyi and tsallis share the power integral") {
  const AnalyticDensity f2 = AnalyticDensity::parse("f2");
  const AnalyticDensity u = AnalyticDensity::parse("uniform");
  const FunctionalSpec renyi = make(Kind::renyi_divergence, 0.75);
  const FunctionalSpec power = make(Kind::power_integral, 0.75);
  GridSpec grid{1, 2048, QuadRule::midpoint};
  const DensitySet rds = analytic_density_set(renyi, f2, &u);
  const DensitySet pds = analytic_density_set(power, f2, &u);
  const double s_val = plugin_value(power, pds, grid);
  CHECK(plugin_value(renyi, rds, grid) ==
        doctest::Approx(std::log(s_val) / (0.75 - 1.0)).epsilon(1e-12));
}
