#pragma once

// Static SAR ADC behavioral model.
//
// All levels are expressed in LSB. Code edge c (1 <= c <= 2^n_bits - 1) is
// the input level at which the output changes from c - 1 to c. With the
// linear binary-weighted CDAC model the edge is the dot product of the bit
// pattern of c (MSB first) with the effective capacitor weights, plus an
// optional carrier polynomial in the code index.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace uglms {

using Code = std::int64_t;

inline constexpr int kMinBits = 1;
inline constexpr int kMaxBits = 24;

class AdcGeometry {
 public:
  explicit AdcGeometry(int n_bits);

  int n_bits() const { return n_bits_; }
  Code n_codes() const { return Code{1} << n_bits_; }
  /// Number of code edges, n_codes - 1.
  Code n_edges() const { return n_codes() - 1; }
  double full_scale() const { return static_cast<double>(n_codes()); }

  bool valid_code(Code c) const { return c >= 1 && c < n_codes(); }

  friend bool operator==(const AdcGeometry&, const AdcGeometry&) = default;

 private:
  int n_bits_;
};

/// Effective capacitor weights, MSB first, in LSB.
class MismatchVector {
 public:
  explicit MismatchVector(std::vector<double> weights);

  static MismatchVector ideal(int n_bits);

  std::span<const double> weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::size_t size() const { return weights_.size(); }
  int n_bits() const { return static_cast<int>(weights_.size()); }

 private:
  std::vector<double> weights_;
};

/// Sum of beta_m * c^m for m = 0..order, raw code-index basis.
class CarrierPolynomial {
 public:
  /// Zero polynomial of order 0.
  CarrierPolynomial() : coeffs_{0.0} {}
  explicit CarrierPolynomial(std::vector<double> coeffs);

  static CarrierPolynomial zero(int order = 0);

  int order() const { return static_cast<int>(coeffs_.size()) - 1; }
  std::span<const double> coeffs() const { return coeffs_; }
  bool is_zero() const;
  double evaluate(Code c) const;

 private:
  std::vector<double> coeffs_;
};

/// Simulated converter. Immutable; true edges are cached on construction
/// and must be strictly increasing.
class DeviceUnderTest {
 public:
  DeviceUnderTest(MismatchVector theta, CarrierPolynomial carrier, double noise_sigma);

  const AdcGeometry& geometry() const { return geometry_; }
  int n_bits() const { return geometry_.n_bits(); }
  const MismatchVector& theta() const { return theta_; }
  const CarrierPolynomial& carrier() const { return carrier_; }
  double noise_sigma() const { return noise_sigma_; }

  /// True edge levels; index i holds code i + 1.
  std::span<const double> edges() const { return edges_; }
  double edge(Code c) const;

 private:
  AdcGeometry geometry_;
  MismatchVector theta_;
  CarrierPolynomial carrier_;
  double noise_sigma_;
  std::vector<double> edges_;
};

MismatchVector ideal_weights(int n_bits);

/// Unit-capacitor mismatch: weight w gets relative error N(0, sigma_unit / sqrt(w)).
MismatchVector generate_mismatch(int n_bits, double sigma_unit, std::uint64_t seed);

/// Bits of `code`, MSB first. Throws std::invalid_argument for code 0 or >= 2^n_bits.
std::vector<std::uint8_t> bit_vector(Code code, int n_bits);

double code_edge_level(const MismatchVector& theta, const CarrierPolynomial& carrier, Code code);

/// Noiseless transfer: number of edges at or below v, clipped to [0, n_codes - 1].
Code quantize(const DeviceUnderTest& device, double v);

/// Endpoint-corrected INL (length n_codes - 1) and DNL (length n_codes - 2).
std::vector<double> true_inl(const DeviceUnderTest& device);
std::vector<double> true_dnl(const DeviceUnderTest& device);

struct DeviceDraw {
  DeviceUnderTest device;
  std::uint64_t seed_used;
  int rejected;
};

/// Draws mismatch until the edges are monotone, advancing the seed by one
/// per rejected draw.
DeviceDraw generate_device(int n_bits, double sigma_unit, const CarrierPolynomial& carrier,
                           double noise_sigma, std::uint64_t seed, int max_attempts = 1000);

/// Plain-text key-value snapshot:
///   n_bits <int> / noise_sigma <real> / poly_order <int>
///   weight <i> <real>  (one per weight)
///   beta <m> <real>    (one per coefficient)
void write_device(std::ostream& os, const DeviceUnderTest& device);
DeviceUnderTest read_device(std::istream& is);

}  // namespace uglms
