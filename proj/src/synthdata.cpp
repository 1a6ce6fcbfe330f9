#include "ifest/synthdata.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "ifest/errors.hpp"
#include "ifest/rng.hpp"

namespace ifest {

namespace {

double log_beta_2020() {
  static const double value = 2.0 * std::lgamma(20.0) - std::lgamma(40.0);
  return value;
}

double beta2020_pdf(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(19.0 * std::log(t) + 19.0 * std::log1p(-t) - log_beta_2020());
}

double beta2020_cdf(double t) {
  // Regularized incomplete beta by series; only used in tests/goodness
  // checks, so a straightforward converging series is enough.
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  if (t > 0.5) return 1.0 - beta2020_cdf(1.0 - t);
  const double a = 20.0, b = 20.0;
  // I_t(a,b) = t^a (1-t)^b / (a B(a,b)) * [1 + Σ_k Π_j ((a+b+j)/(a+1+j)) t^{k}]
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 500; ++k) {
    term *= (a + b + k) / (a + 1.0 + k) * t;
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  const double log_front = a * std::log(t) + b * std::log1p(-t) -
                           std::log(a) - log_beta_2020();
  return std::exp(log_front) * sum;
}

double sample_one(Dist1d kind, Rng& rng) {
  switch (kind) {
    case Dist1d::uniform:
      return rng.uniform();
    case Dist1d::f1: {
      if (rng.uniform() < 0.5) return rng.uniform();
      double mx = 0.0;
      for (int k = 0; k < 10; ++k) mx = std::max(mx, rng.uniform());
      return mx;
    }
    case Dist1d::f2: {
      if (rng.uniform() < 0.5) return rng.uniform();
      return rng.beta(20.0, 20.0);
    }
    case Dist1d::beta2020:
      return rng.beta(20.0, 20.0);
  }
  return 0.0;
}

Dist1d kind_from_token(const std::string& token) {
  if (token == "uniform" || token == "u") return Dist1d::uniform;
  if (token == "f1") return Dist1d::f1;
  if (token == "f2") return Dist1d::f2;
  if (token == "beta2020") return Dist1d::beta2020;
  throw std::invalid_argument("unknown distribution token: " + token);
}

const char* kind_token(Dist1d kind) {
  switch (kind) {
    case Dist1d::uniform:
      return "uniform";
    case Dist1d::f1:
      return "f1";
    case Dist1d::f2:
      return "f2";
    case Dist1d::beta2020:
      return "beta2020";
  }
  return "?";
}

}  // namespace

double dist1d_density(Dist1d kind, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw OutOfDomain("dist1d_density: t outside [0,1]");
  switch (kind) {
    case Dist1d::uniform:
      return 1.0;
    case Dist1d::f1:
      // The sampler mixes U(0,1) with the max of 10 uniforms (density
      // 10 t^9), so the normalized mixture is 0.5 + 5 t^9.
      return 0.5 + 5.0 * std::pow(t, 9.0);
    case Dist1d::f2:
      return 0.5 + 0.5 * beta2020_pdf(t);
    case Dist1d::beta2020:
      return beta2020_pdf(t);
  }
  return 0.0;
}

double dist1d_cdf(Dist1d kind, double t) {
  switch (kind) {
    case Dist1d::uniform:
      return t;
    case Dist1d::f1:
      return 0.5 * t + 0.5 * std::pow(t, 10.0);
    case Dist1d::f2:
      return 0.5 * t + 0.5 * beta2020_cdf(t);
    case Dist1d::beta2020:
      return beta2020_cdf(t);
  }
  return 0.0;
}

double AnalyticDensity::density(std::span<const double> x) const {
  if (x.size() != axes_.size()) {
    throw DimensionMismatch("AnalyticDensity: point dimension mismatch");
  }
  double prod = 1.0;
  for (std::size_t c = 0; c < axes_.size(); ++c) {
    prod *= dist1d_density(axes_[c], x[c]);
  }
  return prod;
}

double AnalyticDensity::marginal_density(std::span<const std::size_t> columns,
                                         std::span<const double> x) const {
  double prod = 1.0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    prod *= dist1d_density(axes_.at(columns[c]), x[c]);
  }
  return prod;
}

AnalyticDensity AnalyticDensity::marginal(
    std::span<const std::size_t> columns) const {
  std::vector<Dist1d> axes;
  for (std::size_t c : columns) axes.push_back(axes_.at(c));
  return AnalyticDensity(std::move(axes));
}

SampleSet AnalyticDensity::sample(std::size_t n, std::uint64_t seed) const {
  SampleSet out(n, axes_.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < axes_.size(); ++c) {
      out(i, c) = sample_one(axes_[c], rng);
    }
  }
  return out;
}

std::string AnalyticDensity::name() const {
  std::string s;
  for (std::size_t c = 0; c < axes_.size(); ++c) {
    if (c > 0) s += 'x';
    s += kind_token(axes_[c]);
  }
  return s;
}

namespace {

Density analytic_block(const AnalyticDensity& joint,
                       std::vector<std::size_t> cols) {
  AnalyticDensity marg = joint.marginal(cols);
  return Density{[marg](std::span<const double> x) { return marg.density(x); },
                 nullptr};
}

}  // namespace

DensitySet analytic_density_set(const FunctionalSpec& spec,
                                const AnalyticDensity& a,
                                const AnalyticDensity* b) {
  spec.validate();
  if (spec.arity() == 2 && b == nullptr) {
    throw DimensionMismatch(std::string(kind_name(spec.kind)) +
                            " needs two densities");
  }
  DensitySet ds;
  ds.dim = a.dim();
  int xd, yd, zd;
  spec.block_layout(a.dim(), xd, yd, zd);
  ds.x_dim = xd;
  ds.y_dim = yd;
  ds.z_dim = zd;
  const AnalyticDensity fa = a;
  ds.f = Density{[fa](std::span<const double> x) { return fa.density(x); },
                 nullptr};
  if (b != nullptr) {
    const AnalyticDensity gb = *b;
    if (gb.dim() != a.dim()) {
      throw DimensionMismatch("densities must share a dimension");
    }
    ds.g = Density{[gb](std::span<const double> x) { return gb.density(x); },
                   nullptr};
  }
  auto cols = [](std::size_t from, std::size_t count) {
    std::vector<std::size_t> c(count);
    for (std::size_t k = 0; k < count; ++k) c[k] = from + k;
    return c;
  };
  if (spec.kind == Kind::shannon_mi) {
    ds.mx = analytic_block(a, cols(0, xd));
    ds.my = analytic_block(a, cols(xd, yd));
  } else if (spec.kind == Kind::cond_tsallis_mi) {
    auto xz = cols(0, xd);
    auto ztail = cols(static_cast<std::size_t>(xd) + yd, zd);
    xz.insert(xz.end(), ztail.begin(), ztail.end());
    auto yz = cols(xd, yd);
    yz.insert(yz.end(), ztail.begin(), ztail.end());
    ds.mxz = analytic_block(a, xz);
    ds.myz = analytic_block(a, yz);
    ds.mz = analytic_block(a, ztail);
  }
  return ds;
}

double oracle_truth(const FunctionalSpec& spec, const AnalyticDensity& a,
                    const AnalyticDensity* b, const GridSpec& fine_grid) {
  return plugin_value(spec, analytic_density_set(spec, a, b), fine_grid);
}

AnalyticDensity AnalyticDensity::parse(const std::string& spec) {
  std::vector<Dist1d> axes;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t next = spec.find('x', pos);
    if (next == std::string::npos) next = spec.size();
    const std::string token = spec.substr(pos, next - pos);
    if (token.empty()) throw std::invalid_argument("bad distribution spec: " + spec);
    char* end = nullptr;
    const long repeat = std::strtol(token.c_str(), &end, 10);
    if (end != token.c_str() && *end == '\0') {
      if (axes.empty() || repeat < 1 || repeat > 8) {
        throw std::invalid_argument("bad repeat count in spec: " + spec);
      }
      const Dist1d last = axes.back();
      for (long k = 1; k < repeat; ++k) axes.push_back(last);
    } else {
      axes.push_back(kind_from_token(token));
    }
    if (next == spec.size()) break;
    pos = next + 1;
  }
  if (axes.empty()) throw std::invalid_argument("empty distribution spec");
  return AnalyticDensity(std::move(axes));
}

}  // namespace ifest
