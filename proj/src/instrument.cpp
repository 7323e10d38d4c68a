#include "uglms/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace uglms {

void SweepConfig::validate() const {
  if (samples < 2) throw std::invalid_argument("samples_per_sweep must be >= 2, got " + std::to_string(samples));
  if (!(window_span > 0.0) || !std::isfinite(window_span)) {
    throw std::invalid_argument("window_span must be finite and > 0");
  }
}

SweepConfig SweepConfig::with_default_span(int samples, double noise_sigma) {
  return SweepConfig{samples, 4.0 * std::max(1.0, noise_sigma)};
}

Code sample(const DeviceUnderTest& device, double v, Rng& rng) {
  const double sigma = device.noise_sigma();
  return quantize(device, sigma > 0.0 ? v + rng.normal(sigma) : v);
}

EdgeMeasurement localized_sweep(const DeviceUnderTest& device, Code c_star, double predicted_edge,
                                const SweepConfig& cfg, Rng& rng, SweepTrace* trace) {
  cfg.validate();
  if (!device.geometry().valid_code(c_star)) {
    throw std::invalid_argument("sweep target " + std::to_string(c_star) + " is not a code edge");
  }
  const int m = cfg.samples;
  const double step = cfg.fine_step();
  const double v0 = predicted_edge - 0.5 * static_cast<double>(m - 1) * step;
  if (trace) {
    trace->voltages.clear();
    trace->codes.clear();
  }
  int below = 0;
  for (int i = 0; i < m; ++i) {
    const double v = v0 + static_cast<double>(i) * step;
    const Code y = sample(device, v, rng);
    if (y < c_star) ++below;
    if (trace) {
      trace->voltages.push_back(v);
      trace->codes.push_back(y);
    }
  }
  return EdgeMeasurement{c_star, v0 + step * static_cast<double>(below) - 0.5 * step, m};
}

double calibrate_measurement_variance(double noise_sigma, const SweepConfig& cfg, int trials, Rng& rng) {
  if (trials < 100) throw std::invalid_argument("calibration needs >= 100 trials");
  cfg.validate();
  // One-bit converter: a single edge at 1 LSB.
  const DeviceUnderTest probe(MismatchVector::ideal(1), CarrierPolynomial{}, noise_sigma);
  const double edge = probe.edge(1);
  double mean = 0.0;
  double m2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double e = localized_sweep(probe, 1, edge, cfg, rng).edge_estimate - edge;
    const double d = e - mean;
    mean += d / (t + 1);
    m2 += d * (e - mean);
  }
  return m2 / (trials - 1);
}

void write_sweep_trace(std::ostream& os, const SweepTrace& trace) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < trace.voltages.size(); ++i) os << trace.voltages[i] << ' ' << trace.codes[i] << '\n';
  os.precision(old_precision);
}

}  // namespace uglms
