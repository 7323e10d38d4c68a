#include "uglms/adc_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "uglms/errors.hpp"
#include "uglms/linearity.hpp"
#include "uglms/rng.hpp"

namespace uglms {

namespace {

void require_bits(int n_bits) {
  if (n_bits < kMinBits || n_bits > kMaxBits) {
    throw std::invalid_argument("n_bits must lie in [" + std::to_string(kMinBits) + ", " +
                                std::to_string(kMaxBits) + "], got " + std::to_string(n_bits));
  }
}

void require_code(Code code, int n_bits) {
  if (code < 1 || code >= (Code{1} << n_bits)) {
    throw std::invalid_argument("code edge " + std::to_string(code) + " does not exist for a " +
                                std::to_string(n_bits) + "-bit converter");
  }
}

}  // namespace

AdcGeometry::AdcGeometry(int n_bits) : n_bits_(n_bits) { require_bits(n_bits); }

MismatchVector::MismatchVector(std::vector<double> weights) : weights_(std::move(weights)) {
  require_bits(static_cast<int>(weights_.size()));
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("capacitor weights must be finite and strictly positive");
    }
  }
}

MismatchVector MismatchVector::ideal(int n_bits) {
  require_bits(n_bits);
  std::vector<double> w(static_cast<std::size_t>(n_bits));
  for (int i = 0; i < n_bits; ++i) w[i] = std::ldexp(1.0, n_bits - 1 - i);
  return MismatchVector(std::move(w));
}

CarrierPolynomial::CarrierPolynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw std::invalid_argument("carrier polynomial needs order + 1 >= 1 coefficients");
  for (double b : coeffs_) {
    if (!std::isfinite(b)) throw std::invalid_argument("carrier coefficients must be finite");
  }
}

CarrierPolynomial CarrierPolynomial::zero(int order) {
  if (order < 0) throw std::invalid_argument("carrier order must be >= 0");
  return CarrierPolynomial(std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0));
}

bool CarrierPolynomial::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double b) { return b == 0.0; });
}

double CarrierPolynomial::evaluate(Code c) const {
  const double x = static_cast<double>(c);
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

DeviceUnderTest::DeviceUnderTest(MismatchVector theta, CarrierPolynomial carrier, double noise_sigma)
    : geometry_(theta.n_bits()),
      theta_(std::move(theta)),
      carrier_(std::move(carrier)),
      noise_sigma_(noise_sigma) {
  if (!(noise_sigma_ >= 0.0) || !std::isfinite(noise_sigma_)) {
    throw std::invalid_argument("noise_sigma must be finite and >= 0");
  }
  const Code n = geometry_.n_edges();
  edges_.resize(static_cast<std::size_t>(n));
  for (Code c = 1; c <= n; ++c) edges_[c - 1] = code_edge_level(theta_, carrier_, c);
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) {
      throw NonMonotoneDevice("code edges not strictly increasing at code " + std::to_string(i + 1));
    }
  }
}

double DeviceUnderTest::edge(Code c) const {
  require_code(c, geometry_.n_bits());
  return edges_[c - 1];
}

MismatchVector ideal_weights(int n_bits) { return MismatchVector::ideal(n_bits); }

MismatchVector generate_mismatch(int n_bits, double sigma_unit, std::uint64_t seed) {
  require_bits(n_bits);
  if (!(sigma_unit >= 0.0) || !std::isfinite(sigma_unit)) {
    throw std::invalid_argument("sigma_unit must be finite and >= 0");
  }
  const MismatchVector ideal = MismatchVector::ideal(n_bits);
  if (sigma_unit == 0.0) return ideal;

  Rng rng(seed);
  std::vector<double> w(ideal.weights().begin(), ideal.weights().end());
  for (double& wi : w) {
    const double rel_sigma = sigma_unit / std::sqrt(wi);
    // Redraw the (rare) non-physical draws that would flip the capacitor sign.
    double delta = rng.normal(rel_sigma);
    while (1.0 + delta <= 0.0) delta = rng.normal(rel_sigma);
    wi *= 1.0 + delta;
  }
  return MismatchVector(std::move(w));
}

std::vector<std::uint8_t> bit_vector(Code code, int n_bits) {
  require_bits(n_bits);
  require_code(code, n_bits);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_bits));
  for (int i = 0; i < n_bits; ++i) bits[i] = static_cast<std::uint8_t>((code >> (n_bits - 1 - i)) & 1);
  return bits;
}

double code_edge_level(const MismatchVector& theta, const CarrierPolynomial& carrier, Code code) {
  const int n_bits = theta.n_bits();
  require_code(code, n_bits);
  double level = 0.0;
  for (int i = 0; i < n_bits; ++i) {
    if ((code >> (n_bits - 1 - i)) & 1) level += theta[i];
  }
  return level + carrier.evaluate(code);
}

Code quantize(const DeviceUnderTest& device, double v) {
  const auto edges = device.edges();
  return static_cast<Code>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

std::vector<double> true_inl(const DeviceUnderTest& device) {
  return endpoint_corrected_inl(device.edges());
}

std::vector<double> true_dnl(const DeviceUnderTest& device) { return dnl_from_edges(device.edges()); }

DeviceDraw generate_device(int n_bits, double sigma_unit, const CarrierPolynomial& carrier,
                           double noise_sigma, std::uint64_t seed, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    try {
      return DeviceDraw{DeviceUnderTest(generate_mismatch(n_bits, sigma_unit, s), carrier, noise_sigma), s,
                        attempt};
    } catch (const NonMonotoneDevice&) {
    }
  }
  throw std::invalid_argument("no monotone device found within " + std::to_string(max_attempts) +
                              " draws; sigma_unit too large for " + std::to_string(n_bits) + " bits");
}

void write_device(std::ostream& os, const DeviceUnderTest& device) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "n_bits " << device.n_bits() << '\n';
  os << "noise_sigma " << device.noise_sigma() << '\n';
  os << "poly_order " << device.carrier().order() << '\n';
  const auto w = device.theta().weights();
  for (std::size_t i = 0; i < w.size(); ++i) os << "weight " << i << ' ' << w[i] << '\n';
  const auto b = device.carrier().coeffs();
  for (std::size_t m = 0; m < b.size(); ++m) os << "beta " << m << ' ' << b[m] << '\n';
  os.precision(old_precision);
}

DeviceUnderTest read_device(std::istream& is) {
  int n_bits = -1;
  int poly_order = -1;
  double noise_sigma = 0.0;
  std::map<int, double> weights;
  std::map<int, double> betas;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    bool ok = true;
    if (key == "n_bits") {
      ok = static_cast<bool>(ls >> n_bits);
    } else if (key == "noise_sigma") {
      ok = static_cast<bool>(ls >> noise_sigma);
    } else if (key == "poly_order") {
      ok = static_cast<bool>(ls >> poly_order);
    } else if (key == "theta") {
      continue;
    } else if (key == "weight" || key == "beta") {
      int idx = -1;
      double value = 0.0;
      ok = static_cast<bool>(ls >> idx >> value) && idx >= 0;
      if (ok) (key == "weight" ? weights : betas)[idx] = value;
    } else {
      throw std::invalid_argument("device snapshot: unknown key '" + key + "' on line " + std::to_string(line_no));
    }
    if (!ok) throw std::invalid_argument("device snapshot: malformed line " + std::to_string(line_no));
  }
  require_bits(n_bits);
  if (poly_order < 0) throw std::invalid_argument("device snapshot: missing or negative poly_order");
  if (static_cast<int>(weights.size()) != n_bits || weights.rbegin()->first != n_bits - 1) {
    throw std::invalid_argument("device snapshot: expected weights 0.." + std::to_string(n_bits - 1));
  }
  if (static_cast<int>(betas.size()) != poly_order + 1 || betas.rbegin()->first != poly_order) {
    throw std::invalid_argument("device snapshot: expected betas 0.." + std::to_string(poly_order));
  }
  std::vector<double> w;
  for (const auto& [i, v] : weights) w.push_back(v);
  std::vector<double> b;
  for (const auto& [m, v] : betas) b.push_back(v);
  return DeviceUnderTest(MismatchVector(std::move(w)), CarrierPolynomial(std::move(b)), noise_sigma);
}

}  // namespace uglms
