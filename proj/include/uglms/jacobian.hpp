#pragma once

#include <span>
#include <vector>

#include "uglms/adc_model.hpp"

namespace uglms {

/// Precomputed per-code gradient rows of the edge model.
///
/// Row c is [b(c) | (c/c_max)^0 ... (c/c_max)^o] where b(c) is the bit
/// pattern of c and o the carrier order (no polynomial columns when
/// poly_order == -1). The polynomial columns use a normalized code index;
/// basis_scale()[k] converts an estimate back to the raw c^m basis:
/// beta_raw[m] = theta[n_bits + m] / basis_scale()[n_bits + m].
class JacobianTable {
 public:
  JacobianTable(int n_bits, int poly_order);

  int n_bits() const { return n_bits_; }
  int poly_order() const { return poly_order_; }
  bool has_polynomial() const { return poly_order_ >= 0; }
  int n_params() const { return n_params_; }
  Code n_edges() const { return n_edges_; }
  double code_max() const { return static_cast<double>(n_edges_); }

  std::span<const double> row(Code c) const {
    return {data_.data() + static_cast<std::size_t>(c - 1) * n_params_,
            static_cast<std::size_t>(n_params_)};
  }
  /// Row-major storage, n_edges x n_params.
  std::span<const double> data() const { return data_; }
  std::span<const double> basis_scale() const { return basis_scale_; }

  /// Raw-basis carrier coefficients from a parameter vector.
  std::vector<double> raw_betas(std::span<const double> theta) const;
  /// Parameter vector for given mismatch weights and raw-basis betas.
  std::vector<double> pack(const MismatchVector& weights, std::span<const double> raw_betas) const;

 private:
  int n_bits_;
  int poly_order_;
  int n_params_;
  Code n_edges_;
  std::vector<double> data_;
  std::vector<double> basis_scale_;
};

JacobianTable build_jacobian_table(int n_bits, int poly_order);

}  // namespace uglms
