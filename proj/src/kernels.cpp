#include "ifest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ifest {

Kernel1D::Kernel1D(int order, std::vector<double> even_coeffs)
    : order_(order), coeffs_(std::move(even_coeffs)) {}

double Kernel1D::moment(int j) const {
  if (j < 0) throw std::invalid_argument("moment: j must be nonnegative");
  if (j % 2 == 1) return 0.0;  // even kernel
  double acc = 0.0;
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    const int deg = 2 * static_cast<int>(k) + j;
    acc += coeffs_[k] * 2.0 / static_cast<double>(deg + 1);
  }
  return acc;
}

double Kernel1D::sup_abs() const {
  // Polynomial of degree <= 6 on a bounded interval; a dense scan is exact
  // enough for envelope purposes.
  double best = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double u = static_cast<double>(i) / 2000.0;
    best = std::max(best, std::abs((*this)(u)));
  }
  return best;
}

Kernel1D legendre_kernel(int order) {
  if (order < 0) throw std::invalid_argument("legendre_kernel: order < 0");
  // Legendre polynomials P_j via the three-term recurrence, full power basis.
  // coeffs[j][p] is the coefficient of u^p in P_j.
  const int jmax = order;
  std::vector<std::vector<double>> p(jmax + 1);
  p[0] = {1.0};
  if (jmax >= 1) p[1] = {0.0, 1.0};
  for (int j = 2; j <= jmax; ++j) {
    // (j) P_j = (2j-1) u P_{j-1} - (j-1) P_{j-2}
    std::vector<double> next(j + 1, 0.0);
    for (int q = 0; q < static_cast<int>(p[j - 1].size()); ++q) {
      next[q + 1] += (2.0 * j - 1.0) * p[j - 1][q];
    }
    for (int q = 0; q < static_cast<int>(p[j - 2].size()); ++q) {
      next[q] -= (j - 1.0) * p[j - 2][q];
    }
    for (double& c : next) c /= static_cast<double>(j);
    p[j] = std::move(next);
  }

  // K(u) = sum_j q_j(0) q_j(u) with q_j = sqrt((2j+1)/2) P_j. The square
  // roots cancel: each even term contributes ((2j+1)/2) P_j(0) P_j(u).
  std::vector<double> full(jmax + 1, 0.0);
  for (int j = 0; j <= jmax; j += 2) {
    const double pj0 = p[j][0];
    const double w = (2.0 * j + 1.0) / 2.0 * pj0;
    for (int q = 0; q < static_cast<int>(p[j].size()); ++q) {
      full[q] += w * p[j][q];
    }
  }
  std::vector<double> even;
  for (int q = 0; q <= jmax; q += 2) even.push_back(full[q]);
  while (even.size() > 1 && even.back() == 0.0) even.pop_back();
  return Kernel1D(order, std::move(even));
}

double eval_kernel(const Kernel1D& k, double u) { return k(u); }

double eval_product_kernel(const Kernel1D& k, std::span<const double> u) {
  double prod = 1.0;
  for (double uc : u) {
    const double v = k(uc);
    if (v == 0.0) return 0.0;
    prod *= v;
  }
  return prod;
}

}  // namespace ifest
