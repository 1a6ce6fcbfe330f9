#include "ifest/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ifest/errors.hpp"
#include "ifest/rng.hpp"
#include "ifest/stats.hpp"

namespace ifest {

namespace {

// Contributing candidates for a query coordinate all lie within h of it:
// the single mirror image that can matter for a point b is within h of a
// exactly when |a - b| <= h as well (both coordinates near the same face).
struct Window {
  std::size_t lo, hi;
};

Window coord_window(std::span<const double> sorted, double a, double h) {
  const auto begin = sorted.begin();
  const auto lo = std::lower_bound(begin, sorted.end(), a - h);
  const auto hi = std::upper_bound(lo, sorted.end(), a + h);
  return {static_cast<std::size_t>(lo - begin),
          static_cast<std::size_t>(hi - begin)};
}

}  // namespace

double KdeModel::kappa(double a, double b) const {
  const double inv_h = 1.0 / h_;
  double v = kernel_((a - b) * inv_h);
  if (boundary_ == Boundary::mirror) {
    v += kernel_((a + b) * inv_h);
    v += kernel_((a + b - 2.0) * inv_h);
  }
  return v;
}

void KdeModel::check_point(std::span<const double> x) const {
  if (x.size() != pts_.dim()) {
    throw DimensionMismatch("KdeModel: query dimension mismatch");
  }
  for (double c : x) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw OutOfDomain("KdeModel: query outside [0,1]^d");
    }
  }
}

KdeModel KdeModel::fit(const SampleSet& samples, double bandwidth,
                       const Kernel1D& kernel, ClampSpec clamp,
                       Boundary boundary) {
  if (samples.size() < 2) throw EmptySample("KdeModel::fit: need n >= 2");
  if (!(bandwidth > 0.0)) throw BadBandwidth("KdeModel::fit: bandwidth <= 0");
  if (!samples.in_unit_cube()) {
    throw OutOfDomain("KdeModel::fit: points outside [0,1]^d");
  }
  KdeModel m;
  m.pts_ = samples;
  m.h_ = bandwidth;
  m.inv_hd_ = std::pow(1.0 / bandwidth, static_cast<double>(samples.dim()));
  m.kernel_ = kernel;
  m.clamp_ = clamp;
  m.boundary_ = boundary;
  m.lower_eff_ = std::max(clamp.lower, kDensityFloor);

  const std::size_t n = samples.size();
  m.order_.resize(n);
  std::iota(m.order_.begin(), m.order_.end(), 0u);
  std::sort(m.order_.begin(), m.order_.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              return samples(a, 0) < samples(b, 0);
            });
  m.coord0_sorted_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    m.coord0_sorted_[k] = samples(m.order_[k], 0);
  }

  m.self_terms_.resize(n);
  m.raw_at_points_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.self_terms_[i] = m.point_term(i, samples.row(i));
    m.raw_at_points_[i] = m.raw(samples.row(i));
  }
  return m;
}

double KdeModel::point_term(std::size_t i, std::span<const double> x) const {
  double prod = inv_hd_;
  for (std::size_t c = 0; c < pts_.dim(); ++c) {
    const double k = kappa(x[c], pts_(i, c));
    if (k == 0.0) return 0.0;
    prod *= k;
  }
  return prod;
}

double KdeModel::raw(std::span<const double> x) const {
  const Window w = coord_window(coord0_sorted_, x[0], h_);
  const std::size_t d = pts_.dim();
  double sum = 0.0;
  for (std::size_t k = w.lo; k < w.hi; ++k) {
    const std::uint32_t j = order_[k];
    double prod = kappa(x[0], pts_(j, 0));
    for (std::size_t c = 1; c < d && prod != 0.0; ++c) {
      prod *= kappa(x[c], pts_(j, c));
    }
    sum += prod;
  }
  return sum * inv_hd_ / static_cast<double>(pts_.size());
}

double KdeModel::clamp_value(double raw_value) const {
  return std::min(std::max(raw_value, lower_eff_), clamp_.upper);
}

double KdeModel::eval(std::span<const double> x) const {
  check_point(x);
  return clamp_value(raw(x));
}

double KdeModel::raw_at_point(std::size_t i) const {
  if (i >= pts_.size()) throw IndexOutOfRange("raw_at_point: bad index");
  return raw_at_points_[i];
}

double KdeModel::self_term(std::size_t i) const {
  if (i >= pts_.size()) throw IndexOutOfRange("self_term: bad index");
  return self_terms_[i];
}

double KdeModel::eval_loo(std::size_t i) const {
  if (i >= pts_.size()) throw IndexOutOfRange("eval_loo: bad index");
  const double n = static_cast<double>(pts_.size());
  const double down = (n * raw_at_points_[i] - self_terms_[i]) / (n - 1.0);
  return clamp_value(down);
}

double KdeModel::raw_loo_at(std::size_t i, std::span<const double> x) const {
  if (i >= pts_.size()) throw IndexOutOfRange("eval_loo_at: bad index");
  const double n = static_cast<double>(pts_.size());
  return (n * raw(x) - point_term(i, x)) / (n - 1.0);
}

double KdeModel::eval_loo_at(std::size_t i, std::span<const double> x) const {
  check_point(x);
  return clamp_value(raw_loo_at(i, x));
}

std::vector<double> KdeModel::raw_on_grid(
    std::span<const double> axis_nodes) const {
  const std::size_t d = pts_.dim();
  const std::size_t m = axis_nodes.size();
  std::size_t total = 1;
  for (std::size_t c = 0; c < d; ++c) total *= m;
  std::vector<double> grid(total, 0.0);

  std::vector<std::vector<double>> w(d);
  std::vector<std::size_t> lo(d), hi(d);
  std::vector<std::size_t> idx(d);
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    point_axis_weights(i, axis_nodes, w, lo, hi);
    bool empty = false;
    for (std::size_t c = 0; c < d; ++c) {
      if (lo[c] >= hi[c]) empty = true;
    }
    if (empty) continue;
    // odometer over the contributing node box
    for (std::size_t c = 0; c < d; ++c) idx[c] = lo[c];
    for (;;) {
      double prod = 1.0;
      std::size_t flat = 0;
      for (std::size_t c = 0; c < d; ++c) {
        prod *= w[c][idx[c]];
        flat = flat * m + idx[c];
      }
      grid[flat] += prod;
      std::size_t c = d;
      while (c-- > 0) {
        if (++idx[c] < hi[c]) break;
        idx[c] = lo[c];
        if (c == 0) goto next_point;
      }
    }
  next_point:;
  }
  const double scale = inv_hd_ / static_cast<double>(pts_.size());
  for (double& v : grid) v *= scale;
  return grid;
}

void KdeModel::point_axis_weights(std::size_t i,
                                  std::span<const double> axis_nodes,
                                  std::vector<std::vector<double>>& weights,
                                  std::vector<std::size_t>& lo,
                                  std::vector<std::size_t>& hi) const {
  const std::size_t d = pts_.dim();
  weights.resize(d);
  lo.resize(d);
  hi.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    const double b = pts_(i, c);
    const auto first = std::lower_bound(axis_nodes.begin(), axis_nodes.end(),
                                        b - h_);
    const auto last =
        std::upper_bound(first, axis_nodes.end(), b + h_);
    lo[c] = static_cast<std::size_t>(first - axis_nodes.begin());
    hi[c] = static_cast<std::size_t>(last - axis_nodes.begin());
    weights[c].assign(axis_nodes.size(), 0.0);
    for (std::size_t j = lo[c]; j < hi[c]; ++j) {
      weights[c][j] = kappa(axis_nodes[j], b);
    }
  }
}

int default_grid_points(int dim) {
  switch (dim) {
    case 1:
      return 2048;
    case 2:
      return 256;
    case 3:
      return 48;
    default:
      return 24;
  }
}

std::vector<double> default_cv_grid() {
  // 12 log-spaced bandwidths covering the useful range on the unit cube.
  std::vector<double> g;
  const double lo = 0.04, hi = 0.9;
  const int k = 12;
  for (int i = 0; i < k; ++i) {
    g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (k - 1)));
  }
  return g;
}

namespace {

std::vector<int> fold_assignment(std::size_t n, int folds,
                                 std::uint64_t seed) {
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(derive_seed(seed, 0x6f6c64f5u));  // fold-assignment stream
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<int> fold(n);
  for (std::size_t k = 0; k < n; ++k) {
    fold[perm[k]] = static_cast<int>(k * static_cast<std::size_t>(folds) / n);
  }
  return fold;
}

}  // namespace

double cv_score(const SampleSet& samples, const Kernel1D& kernel, double h,
                const CvOptions& opts) {
  const std::size_t n = samples.size();
  const std::size_t d = samples.dim();
  KdeModel model = KdeModel::fit(samples, h, kernel, ClampSpec{}, opts.boundary);

  // ∫ fhat^2 on a midpoint tensor grid.
  const int m = opts.quad_points > 0 ? opts.quad_points
                                     : default_grid_points(static_cast<int>(d));
  std::vector<double> nodes(m);
  for (int j = 0; j < m; ++j) nodes[j] = (j + 0.5) / m;
  const std::vector<double> vals = model.raw_on_grid(nodes);
  PairwiseAccumulator sq;
  for (double v : vals) sq.add(v * v);
  const double integral_f2 =
      sq.total() / static_cast<double>(vals.size());

  const std::vector<int> fold = fold_assignment(n, opts.folds, opts.seed);
  std::vector<std::size_t> fold_size(static_cast<std::size_t>(opts.folds), 0);
  for (int f : fold) ++fold_size[static_cast<std::size_t>(f)];

  // Σ_i fhat^{(-fold(i))}(X_i) via one windowed pass per point.
  PairwiseAccumulator loo_sum;
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0, same_fold = 0.0;
    const auto xi = samples.row(i);
    model.for_window(xi, [&](std::size_t j) {
      const double t = model.point_term(j, xi);
      total += t;
      if (fold[j] == fold[i]) same_fold += t;
    });
    const double rest = static_cast<double>(n) -
                        static_cast<double>(fold_size[
                            static_cast<std::size_t>(fold[i])]);
    loo_sum.add((total - same_fold) / rest);
  }
  return integral_f2 - 2.0 / static_cast<double>(n) * loo_sum.total();
}

double cv_bandwidth(const SampleSet& samples, const Kernel1D& kernel,
                    std::span<const double> grid, const CvOptions& opts) {
  if (grid.empty()) throw EmptyGrid("cv_bandwidth: empty bandwidth grid");
  if (opts.folds < 2 || samples.size() < static_cast<std::size_t>(opts.folds)) {
    throw TooFewSamples("cv_bandwidth: need n >= folds >= 2");
  }
  for (double h : grid) {
    if (!(h > 0.0)) throw BadBandwidth("cv_bandwidth: nonpositive bandwidth");
  }
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  double best_h = sorted.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double h : sorted) {
    const double s = cv_score(samples, kernel, h, opts);
    if (s < best_score) {
      best_score = s;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace ifest
