#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ifest {

// Univariate bias-reducing smoothing kernel on [-1, 1], built by projecting
// the delta function onto orthonormal Legendre polynomials. A kernel of
// order L integrates to one and has vanishing moments 1..L. Only even
// Legendre terms survive, so the polynomial is even and evaluation uses
// powers of u^2, which also makes K(u) == K(-u) exact in floating point.
class Kernel1D {
 public:
  Kernel1D() = default;
  Kernel1D(int order, std::vector<double> even_coeffs);

  int order() const { return order_; }

  // Coefficients of K(u) = sum_k c[k] * u^(2k) on [-1, 1].
  std::span<const double> even_coefficients() const { return coeffs_; }

  double operator()(double u) const {
    const double u2 = u * u;
    if (u2 > 1.0) return 0.0;
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) {
      acc = acc * u2 + coeffs_[k];
    }
    return acc;
  }

  double at_zero() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }

  // Exact value of the moment integral  ∫_{-1}^{1} u^j K(u) du.
  double moment(int j) const;

  // Largest |K| on [-1, 1]; used for rejection-sampling envelopes.
  double sup_abs() const;

 private:
  int order_ = 0;
  std::vector<double> coeffs_;  // even powers of u
};

// Projection kernel of the requested order. Odd orders vanish at zero, so
// legendre_kernel(2k+1) equals legendre_kernel(2k). All coefficients are
// small dyadic rationals for order <= 6 and are computed exactly.
Kernel1D legendre_kernel(int order);

double eval_kernel(const Kernel1D& k, double u);

// Tensor product over the coordinates of u.
double eval_product_kernel(const Kernel1D& k, std::span<const double> u);

}  // namespace ifest
