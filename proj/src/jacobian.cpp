#include "uglms/jacobian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uglms {

JacobianTable::JacobianTable(int n_bits, int poly_order)
    : n_bits_(AdcGeometry(n_bits).n_bits()),
      poly_order_(poly_order),
      n_params_(n_bits + (poly_order >= 0 ? poly_order + 1 : 0)),
      n_edges_(AdcGeometry(n_bits).n_edges()) {
  if (poly_order < -1) throw std::invalid_argument("poly_order must be >= -1, got " + std::to_string(poly_order));

  basis_scale_.assign(static_cast<std::size_t>(n_params_), 1.0);
  const double c_max = code_max();
  for (int m = 0; m <= poly_order_; ++m) basis_scale_[n_bits_ + m] = std::pow(c_max, m);

  data_.resize(static_cast<std::size_t>(n_edges_) * n_params_);
  for (Code c = 1; c <= n_edges_; ++c) {
    double* r = data_.data() + static_cast<std::size_t>(c - 1) * n_params_;
    for (int i = 0; i < n_bits_; ++i) r[i] = static_cast<double>((c >> (n_bits_ - 1 - i)) & 1);
    const double x = static_cast<double>(c) / c_max;
    double p = 1.0;
    for (int m = 0; m <= poly_order_; ++m) {
      r[n_bits_ + m] = p;
      p *= x;
    }
  }
}

std::vector<double> JacobianTable::raw_betas(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != n_params_) {
    throw std::invalid_argument("parameter vector length does not match the Jacobian table");
  }
  std::vector<double> out;
  for (int m = 0; m <= poly_order_; ++m) out.push_back(theta[n_bits_ + m] / basis_scale_[n_bits_ + m]);
  return out;
}

std::vector<double> JacobianTable::pack(const MismatchVector& weights, std::span<const double> raw_betas) const {
  if (weights.n_bits() != n_bits_) throw std::invalid_argument("weight count does not match the Jacobian table");
  if (static_cast<int>(raw_betas.size()) > poly_order_ + 1) {
    throw std::invalid_argument("more carrier coefficients than polynomial columns");
  }
  std::vector<double> theta(weights.weights().begin(), weights.weights().end());
  theta.resize(static_cast<std::size_t>(n_params_), 0.0);
  for (std::size_t m = 0; m < raw_betas.size(); ++m) theta[n_bits_ + m] = raw_betas[m] * basis_scale_[n_bits_ + m];
  return theta;
}

JacobianTable build_jacobian_table(int n_bits, int poly_order) { return JacobianTable(n_bits, poly_order); }

}  // namespace uglms
