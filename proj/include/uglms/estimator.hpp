#pragma once

// Closed-loop EKF estimator for code-edge sequencing.
//
// The state is [capacitor weights | normalized carrier coefficients]. Each
// iteration selects the edge with the largest cached quadratic form
// Q[c] = j_c P j_c^T, measures it with a localized sweep, applies a scalar
// EKF update, optionally inflates the covariance when the normalized
// innovation squared exceeds tau, and checks the trace-delta termination.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uglms/adc_model.hpp"
#include "uglms/instrument.hpp"
#include "uglms/jacobian.hpp"
#include "uglms/linearity.hpp"
#include "uglms/rng.hpp"

namespace uglms {

enum class UpdateMode { kDense, kRank1 };
enum class InflationMode { kOff, kUniform, kAlignedFull, kAlignedDiagonal };
enum class StopRule { kFixedIterations, kTraceTermination };

std::string to_string(UpdateMode mode);
std::string to_string(InflationMode mode);
UpdateMode parse_update_mode(const std::string& s);
InflationMode parse_inflation_mode(const std::string& s);

struct EstimatorConfig {
  /// Measurement variance R in LSB^2; empty selects Monte Carlo calibration.
  std::optional<double> measurement_variance;
  double alpha = 9.1;
  double tau = 0.04;
  double epsilon = 1e-3;
  int n_term = 12;
  int max_iterations = 1000;
  UpdateMode update_mode = UpdateMode::kRank1;
  InflationMode inflation_mode = InflationMode::kAlignedDiagonal;
  int poly_order = -1;
  /// Expected unit-capacitor mismatch used to size P0.
  double expected_unit_sigma = 0.003;
  double p0_mismatch_scale = 10.0;
  /// P0 variance of each normalized polynomial coefficient, LSB^2.
  double p0_poly_scale = 16.0;
  /// Dense Q audit period in iterations, 0 = off.
  int exact_check_every = 0;
  bool signed_trace_delta = false;
  int calibration_trials = 1000;

  void validate() const;
};

/// Analytic floating-point operation counts per phase (one multiply or add
/// counts as one operation; comparisons in the argmax count as one each).
struct OpCounters {
  std::uint64_t select = 0;
  std::uint64_t update = 0;
  std::uint64_t cache = 0;
  std::uint64_t inflate = 0;
  std::uint64_t termination = 0;

  std::uint64_t total() const { return select + update + cache + inflate + termination; }
};

struct IterationRecord {
  int iter = 0;
  Code code = 0;
  double z = 0.0;
  double nis = 0.0;
  double trace = 0.0;
  bool inflated = false;
  std::optional<double> dinl_max;
  std::optional<double> ddnl_max;
  /// Wall-clock of the selection step and of update + inflation + termination.
  double select_s = 0.0;
  double update_s = 0.0;
};

struct EstimatorState {
  Eigen::VectorXd theta;
  Eigen::MatrixXd P;
  std::vector<double> Q;
  double R = 0.0;
  int k = 0;
  double trace_prev = 0.0;
  int consec_below = 0;
  /// Q no longer matches P (dense update with deferred refresh).
  bool cache_stale = false;
  std::vector<IterationRecord> history;
  OpCounters ops;
  /// Largest normwise relative deviation seen by dense cache audits.
  double max_cache_deviation = 0.0;
  /// Product of uniform inflation factors applied to Q since the last dense
  /// refresh. Rank-1 downdates do not shrink rounding error already in Q, so
  /// each uniform inflation amplifies it relative to the surviving entries.
  double cache_growth = 1.0;

  double q(Code c) const { return Q[static_cast<std::size_t>(c - 1)]; }
};

/// Pre-update quantities of one scalar update, reused by inflation.
struct MeasurementUpdate {
  Code code = 0;
  double z = 0.0;
  double q_prior = 0.0;   // j P_k j^T
  double S = 0.0;         // q_prior + R
  Eigen::VectorXd v;      // P_k j^T
  std::vector<double> u;  // j_c . v for every c; empty on the dense path
};

enum class CacheRefresh { kImmediate, kDeferred };

/// Default prior mean: ideal weights, zero carrier.
Eigen::VectorXd default_theta0(const JacobianTable& table);

EstimatorState init_state(const EstimatorConfig& config, const JacobianTable& table, double R,
                          const Eigen::VectorXd& theta0);
EstimatorState init_state(const EstimatorConfig& config, const JacobianTable& table, double R);

/// Q[c] / (Q[c] + R), negative rounding residue of Q clamped to zero.
double gain_of(const EstimatorState& state, Code c);

/// argmax_c Q[c]; ties go to the lowest code.
Code select_code(EstimatorState& state);

/// Dense j_c P j_c^T for every code.
std::vector<double> dense_quadratic_forms(const Eigen::MatrixXd& P, const JacobianTable& table);

/// Recomputes Q densely and clears cache_stale.
void refresh_gain_cache(EstimatorState& state, const JacobianTable& table);

/// max_c |Q[c] - dense[c]| / max_c |dense[c]|.
double cache_deviation(const EstimatorState& state, const JacobianTable& table);

/// Textbook update: K = P j^T / S, theta += K z, P = (I - K j) P, symmetrized,
/// then Q recomputed densely (or marked stale when deferred).
MeasurementUpdate update_dense(EstimatorState& state, const JacobianTable& table, Code c_star, double z,
                               CacheRefresh refresh = CacheRefresh::kImmediate);

/// Rank-1 update with incremental gain-cache maintenance:
///   v = P j^T; u[c] = j_c v; Q[c] -= u[c]^2 / S; P -= v v^T / S; theta += v z / S.
MeasurementUpdate update_rank1(EstimatorState& state, const JacobianTable& table, Code c_star, double z);

/// z^2 / S with S the pre-update innovation variance.
double nis(double z, double S);
double nis(double z, Code c_star, const EstimatorState& state);

/// Uniform inflation refreshes Q densely once cache_growth exceeds this.
inline constexpr double kMaxCacheGrowth = 1e3;

/// Covariance inflation after an update. Aligned modes use w = P_k j^T and
/// q = j P_k j^T from the pre-update covariance. Returns false when the
/// direction is degenerate (q <= 0) and nothing was changed.
bool inflate(EstimatorState& state, const JacobianTable& table, InflationMode mode, double alpha,
             const MeasurementUpdate& upd);

/// Updates the consecutive-below counter from the trace delta and returns
/// whether n_term consecutive deltas stayed below epsilon.
bool check_termination(EstimatorState& state, double epsilon, int n_term, bool signed_delta = false);

struct RunOptions {
  StopRule stop = StopRule::kFixedIterations;
  /// Record dINL/dDNL every this many iterations (0 = never).
  int error_every = 0;
  /// Additional iterations (1-based) at which errors are recorded.
  std::vector<int> error_checkpoints;
  bool keep_history = true;
  /// Initial parameter vector; defaults to default_theta0.
  std::optional<Eigen::VectorXd> theta0;
};

struct RunTiming {
  double select_s = 0.0;
  double update_s = 0.0;
  double inflate_s = 0.0;
  double termination_s = 0.0;
  double compute_s() const { return select_s + update_s + inflate_s + termination_s; }
};

struct RunResult {
  Eigen::VectorXd theta_hat;
  std::vector<double> raw_betas;
  LinearityCurves estimate;
  double dinl_max = 0.0;
  double ddnl_max = 0.0;
  int iterations = 0;
  /// True when trace termination fired; always false for fixed-iteration runs.
  bool terminated = false;
  bool converged() const { return terminated; }
  double R = 0.0;
  std::vector<IterationRecord> history;
  RunTiming timing;
  OpCounters ops;
  double max_cache_deviation = 0.0;
  int inflations = 0;
};

/// Measurement variance used when the config leaves R unset: the calibrated
/// sweep variance, floored at the grid quantization variance fine_step^2/12.
double resolve_measurement_variance(const EstimatorConfig& config, double noise_sigma, const SweepConfig& sweep,
                                    std::uint64_t seed);

RunResult run(const DeviceUnderTest& device, const EstimatorConfig& config, const SweepConfig& sweep, Rng& rng,
              const RunOptions& options = {});

/// Same as run() with a caller-provided table (shared across runs) and R.
RunResult run(const DeviceUnderTest& device, const JacobianTable& table, const EstimatorConfig& config, double R,
              const SweepConfig& sweep, Rng& rng, const RunOptions& options = {});

/// `iter code z nis trace [dinl_max ddnl_max]` rows.
void write_history(std::ostream& os, std::span<const IterationRecord> history);

/// Device snapshot followed by `theta <i> <value>` lines of the final estimate.
void write_final_state(std::ostream& os, const DeviceUnderTest& device, const RunResult& result);

}  // namespace uglms
