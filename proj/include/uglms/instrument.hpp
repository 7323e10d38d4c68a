#pragma once

// Tester-side measurement path: ideal high-resolution stimulus DAC, noisy
// sampling of the converter, and the localized edge estimator.

#include <iosfwd>
#include <vector>

#include "uglms/adc_model.hpp"
#include "uglms/rng.hpp"

namespace uglms {

struct SweepConfig {
  int samples = 128;          // M
  double window_span = 4.0;   // LSB, total width

  double fine_step() const { return window_span / samples; }
  void validate() const;

  /// Span 4 * max(1, noise_sigma) centred on the prediction.
  static SweepConfig with_default_span(int samples, double noise_sigma);
};

struct EdgeMeasurement {
  Code code = 0;
  double edge_estimate = 0.0;
  int samples_used = 0;
};

/// Optional per-sample record of a sweep.
struct SweepTrace {
  std::vector<double> voltages;
  std::vector<Code> codes;
};

/// quantize(device, v + eta), eta ~ N(0, noise_sigma^2).
Code sample(const DeviceUnderTest& device, double v, Rng& rng);

/// Applies M equally spaced levels centred on `predicted_edge` and counts the
/// samples that stay below `c_star`:
///   estimate = v_0 + fine_step * #{y_i < c_star} - fine_step / 2.
/// A true edge outside the window saturates the estimate at the boundary.
EdgeMeasurement localized_sweep(const DeviceUnderTest& device, Code c_star, double predicted_edge,
                                const SweepConfig& cfg, Rng& rng, SweepTrace* trace = nullptr);

/// Sample variance of the edge estimate over `trials` sweeps centred on a
/// single synthetic edge, in LSB^2.
double calibrate_measurement_variance(double noise_sigma, const SweepConfig& cfg, int trials, Rng& rng);

/// Whitespace-delimited `v_i y_i` rows.
void write_sweep_trace(std::ostream& os, const SweepTrace& trace);

}  // namespace uglms
