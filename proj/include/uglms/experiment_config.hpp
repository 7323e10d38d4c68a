#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uglms/adc_model.hpp"
#include "uglms/estimator.hpp"
#include "uglms/instrument.hpp"

namespace uglms {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { kSingle, kConvergence, kHeatmap, kEpsilon, kTiming };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& s);

/// Everything one experiment needs. Text form is one `key = value` per
/// line (`#` starts a comment, lists are comma separated); see keys().
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kSingle;

  // device
  int n_bits = 16;
  double sigma_unit = 0.003;
  double noise_sigma = 1.0;
  /// Raw-basis carrier coefficients beta_0..beta_o; empty means zero carrier
  /// unless carrier_offset / carrier_bow are set.
  std::vector<double> carrier;
  double carrier_offset = 0.0;
  /// Peak endpoint-corrected INL of an added quadratic term, LSB.
  double carrier_bow = 0.0;
  std::uint64_t device_seed = 1;
  bool vary_device = false;

  // estimator
  /// Explicit measurement variance, LSB^2. When unset, R = r_scale * noise_sigma^2
  /// (r_scale > 0 and noise_sigma > 0), else the calibrated sweep variance.
  std::optional<double> R;
  double r_scale = 3.0;
  double alpha = 9.1;
  double tau = 0.04;
  double epsilon = 1e-3;
  int n_term = 12;
  UpdateMode update_mode = UpdateMode::kRank1;
  InflationMode inflation_mode = InflationMode::kAlignedFull;
  int poly_order = -1;
  std::optional<double> expected_unit_sigma;
  // R and P0 share one overall scale; tau and epsilon are absolute against it.
  double p0_mismatch_scale = 60.0;
  double p0_poly_scale = 96.0;
  int exact_check_every = 0;
  bool signed_trace_delta = false;
  StopRule stop = StopRule::kFixedIterations;

  // sweep
  int samples = 128;
  std::optional<double> window_span;

  // study
  int runs = 1;
  std::optional<int> iterations;
  std::uint64_t seed = 1000;
  std::string out_dir;
  int workers = 1;
  int error_every = 10;
  std::vector<double> alphas{3.0, 6.0, 9.1, 15.0};
  std::vector<double> taus{0.02, 0.04, 0.1};
  std::vector<double> epsilons{1e-4, 3e-4, 1e-3, 3e-3};
  std::vector<int> resolutions{10, 12, 14, 16, 18};
  std::vector<std::string> variants{"dense-baseline", "rank1", "rank1+poly"};

  /// Iteration budget: explicit value, else 1000 for convergence/epsilon
  /// studies and 200 otherwise.
  int iteration_budget() const;

  CarrierPolynomial carrier_polynomial() const;
  EstimatorConfig estimator() const;
  SweepConfig sweep() const;

  /// Sets one field from its text form; throws ConfigError on unknown keys or
  /// malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  /// All recognised keys.
  static const std::vector<std::string>& keys();

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_text() const;
};

/// beta_0 = offset and a quadratic term whose endpoint-corrected INL peaks at
/// exactly `bow` LSB in the middle of the code range.
CarrierPolynomial quadratic_carrier(int n_bits, double offset, double bow);

}  // namespace uglms
