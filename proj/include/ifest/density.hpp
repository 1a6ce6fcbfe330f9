#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ifest/kernels.hpp"
#include "ifest/samples.hpp"

namespace ifest {

// Evaluations never return less than this, so logs and density ratios stay
// finite even where the kernel sum is empty or negative.
inline constexpr double kDensityFloor = 1e-12;

enum class Boundary { none, mirror };

struct ClampSpec {
  double lower = 0.0;  // 0 keeps only the floor
  double upper = std::numeric_limits<double>::infinity();
};

// Product-kernel density estimate on [0,1]^d with truncation and optional
// mirror reflection at the faces. Immutable once fitted; every evaluation
// variant is pure, so models can be shared across threads freely.
//
// Leave-one-out values are exact rank-one downdates of the full kernel sum:
// removing point i and renormalizing to n-1 points reproduces a refit on the
// remaining points to float accuracy.
class KdeModel {
 public:
  KdeModel() = default;

  static KdeModel fit(const SampleSet& samples, double bandwidth,
                      const Kernel1D& kernel, ClampSpec clamp = {},
                      Boundary boundary = Boundary::mirror);

  std::size_t size() const { return pts_.size(); }
  std::size_t dim() const { return pts_.dim(); }
  double bandwidth() const { return h_; }
  const Kernel1D& kernel() const { return kernel_; }
  Boundary boundary() const { return boundary_; }
  ClampSpec clamp_spec() const { return clamp_; }
  const SampleSet& points() const { return pts_; }

  // Clamped density at x (throws OutOfDomain outside the unit cube).
  double eval(std::span<const double> x) const;

  // Unclamped kernel average at x; may be negative for higher-order kernels.
  double raw(std::span<const double> x) const;

  // Clamped leave-one-out density at the i-th sample point.
  double eval_loo(std::size_t i) const;

  // Clamped density at x with point i removed.
  double eval_loo_at(std::size_t i, std::span<const double> x) const;

  double raw_loo_at(std::size_t i, std::span<const double> x) const;

  // Contribution of point i to the kernel average at x, already divided by
  // h^d (so raw(x) is the mean of these over all points).
  double point_term(std::size_t i, std::span<const double> x) const;

  // Cached full-sample raw density at the i-th sample point.
  double raw_at_point(std::size_t i) const;

  // Cached self contribution of point i at its own location.
  double self_term(std::size_t i) const;

  double clamp_value(double raw_value) const;

  // Raw densities at every node of the tensor grid built from `axis_nodes`
  // on each axis, row-major over node multi-indices. Cost is
  // O(n * (2 h m)^d) rather than O(n * m^d).
  std::vector<double> raw_on_grid(std::span<const double> axis_nodes) const;

  // Per-axis kernel weights of point i against `axis_nodes`: fills
  // `weights[c]` (resized to the node count) and the contributing index
  // range [lo[c], hi[c]). Used for downdated grid sums.
  void point_axis_weights(std::size_t i, std::span<const double> axis_nodes,
                          std::vector<std::vector<double>>& weights,
                          std::vector<std::size_t>& lo,
                          std::vector<std::size_t>& hi) const;

  // Visits the original index of every point whose kernel term at x can be
  // nonzero, in sorted-coordinate order.
  template <class Fn>
  void for_window(std::span<const double> x, Fn&& fn) const {
    const double a = x[0];
    const auto begin = coord0_sorted_.begin();
    const auto lo = std::lower_bound(begin, coord0_sorted_.end(), a - h_);
    const auto hi = std::upper_bound(lo, coord0_sorted_.end(), a + h_);
    for (auto it = lo; it != hi; ++it) {
      fn(static_cast<std::size_t>(order_[it - begin]));
    }
  }

 private:
  void check_point(std::span<const double> x) const;
  double kappa(double a, double b) const;  // 1-D kernel factor incl. mirrors

  SampleSet pts_;  // original row order
  double h_ = 0.0;
  double inv_hd_ = 0.0;
  Kernel1D kernel_;
  ClampSpec clamp_;
  Boundary boundary_ = Boundary::mirror;
  double lower_eff_ = kDensityFloor;

  // Points sorted by coordinate 0 for windowed sums.
  std::vector<double> coord0_sorted_;
  std::vector<std::uint32_t> order_;  // sorted position -> original row

  std::vector<double> raw_at_points_;
  std::vector<double> self_terms_;
};

struct CvOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  Boundary boundary = Boundary::mirror;
  int quad_points = 0;  // 0 = default for the dimension
};

// Least-squares cross-validation score J(h) = ∫ fhat_h^2 - (2/n) Σ_i
// fhat_h^{(-fold(i))}(X_i), evaluated on raw (unclamped) densities.
double cv_score(const SampleSet& samples, const Kernel1D& kernel, double h,
                const CvOptions& opts);

// Grid bandwidth minimizing the CV score; ties break toward the smaller
// bandwidth. Fold assignment is a seeded shuffle into contiguous blocks.
double cv_bandwidth(const SampleSet& samples, const Kernel1D& kernel,
                    std::span<const double> grid, const CvOptions& opts);

// Default log-spaced CV grid.
std::vector<double> default_cv_grid();

// Default quadrature resolution per dimension (2048, 256, 48, 24).
int default_grid_points(int dim);

}  // namespace ifest
