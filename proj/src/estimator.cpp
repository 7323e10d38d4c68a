#include "uglms/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "uglms/errors.hpp"

namespace uglms {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint64_t u64(Code c) { return static_cast<std::uint64_t>(c); }

double dot_row(std::span<const double> row, const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) acc += row[i] * x[static_cast<Eigen::Index>(i)];
  return acc;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> row) {
  return {row.data(), static_cast<Eigen::Index>(row.size())};
}

// v = P j with a fixed summation order.
Eigen::VectorXd covariance_times(const Eigen::MatrixXd& P, std::span<const double> j) {
  const Eigen::Index n = P.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (Eigen::Index col = 0; col < n; ++col) {
    const double jc = j[static_cast<std::size_t>(col)];
    const double* p = P.data() + col * n;
    for (Eigen::Index r = 0; r < n; ++r) v[r] += p[r] * jc;
  }
  return v;
}

// u[c] = j_c . v for all c. Pure map over codes.
std::vector<double> project_all(const JacobianTable& table, const Eigen::VectorXd& v) {
  const int n = table.n_params();
  const double* row = table.data().data();
  std::vector<double> u(static_cast<std::size_t>(table.n_edges()));
  for (std::size_t c = 0; c < u.size(); ++c, row += n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += row[i] * v[i];
    u[c] = acc;
  }
  return u;
}

void symmetrize(Eigen::MatrixXd& P) {
  const Eigen::Index n = P.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double s = 0.5 * (P(r, c) + P(c, r));
      P(r, c) = s;
      P(c, r) = s;
    }
  }
}

void require_code(const JacobianTable& table, Code c) {
  if (c < 1 || c > table.n_edges()) throw std::invalid_argument("code " + std::to_string(c) + " has no edge");
}

}  // namespace

std::string to_string(UpdateMode mode) { return mode == UpdateMode::kDense ? "dense-baseline" : "rank1"; }

std::string to_string(InflationMode mode) {
  switch (mode) {
    case InflationMode::kOff: return "off";
    case InflationMode::kUniform: return "uniform";
    case InflationMode::kAlignedFull: return "aligned-full";
    case InflationMode::kAlignedDiagonal: return "aligned-diagonal";
  }
  return "?";
}

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "dense" || s == "dense-baseline") return UpdateMode::kDense;
  if (s == "rank1") return UpdateMode::kRank1;
  throw std::invalid_argument("unknown update mode '" + s + "' (dense-baseline|rank1)");
}

InflationMode parse_inflation_mode(const std::string& s) {
  if (s == "off") return InflationMode::kOff;
  if (s == "uniform") return InflationMode::kUniform;
  if (s == "aligned-full") return InflationMode::kAlignedFull;
  if (s == "aligned-diagonal" || s == "aligned") return InflationMode::kAlignedDiagonal;
  throw std::invalid_argument("unknown inflation mode '" + s + "' (off|uniform|aligned-full|aligned-diagonal)");
}

void EstimatorConfig::validate() const {
  if (measurement_variance && !(*measurement_variance > 0.0)) {
    throw std::invalid_argument("measurement variance R must be > 0");
  }
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (n_term < 1) throw std::invalid_argument("n_term must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (poly_order < -1) throw std::invalid_argument("poly_order must be >= -1");
  if (!(expected_unit_sigma >= 0.0)) throw std::invalid_argument("expected_unit_sigma must be >= 0");
  if (!(p0_mismatch_scale >= 0.0) || !(p0_poly_scale >= 0.0)) throw std::invalid_argument("P0 scales must be >= 0");
  if (exact_check_every < 0) throw std::invalid_argument("exact_check_every must be >= 0");
  if (calibration_trials < 100) throw std::invalid_argument("calibration_trials must be >= 100");
}

Eigen::VectorXd default_theta0(const JacobianTable& table) {
  const auto packed = table.pack(MismatchVector::ideal(table.n_bits()), {});
  return Eigen::Map<const Eigen::VectorXd>(packed.data(), static_cast<Eigen::Index>(packed.size()));
}

EstimatorState init_state(const EstimatorConfig& config, const JacobianTable& table, double R,
                          const Eigen::VectorXd& theta0) {
  if (theta0.size() != table.n_params()) {
    throw std::invalid_argument("theta0 has " + std::to_string(theta0.size()) + " entries, table expects " +
                                std::to_string(table.n_params()));
  }
  if (!(R > 0.0)) throw std::invalid_argument("measurement variance R must be > 0");
  const int n = table.n_params();
  EstimatorState s;
  s.theta = theta0;
  s.R = R;
  s.P = Eigen::MatrixXd::Zero(n, n);
  const auto ideal = MismatchVector::ideal(table.n_bits());
  const double var_unit = config.expected_unit_sigma * config.expected_unit_sigma;
  for (int i = 0; i < table.n_bits(); ++i) s.P(i, i) = config.p0_mismatch_scale * var_unit * ideal[i];
  for (int i = table.n_bits(); i < n; ++i) s.P(i, i) = config.p0_poly_scale;
  s.Q = dense_quadratic_forms(s.P, table);
  s.trace_prev = s.P.trace();
  return s;
}

EstimatorState init_state(const EstimatorConfig& config, const JacobianTable& table, double R) {
  return init_state(config, table, R, default_theta0(table));
}

double gain_of(const EstimatorState& state, Code c) {
  const double q = std::max(0.0, state.q(c));
  return q / (q + state.R);
}

Code select_code(EstimatorState& state) {
  const auto& Q = state.Q;
  std::size_t best = 0;
  for (std::size_t c = 1; c < Q.size(); ++c) {
    if (Q[c] > Q[best]) best = c;
  }
  state.ops.select += Q.size();
  return static_cast<Code>(best) + 1;
}

std::vector<double> dense_quadratic_forms(const Eigen::MatrixXd& P, const JacobianTable& table) {
  const int n = table.n_params();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("covariance dimension does not match the table");
  std::vector<double> Q(static_cast<std::size_t>(table.n_edges()));
  Eigen::VectorXd t(n);
  const double* row = table.data().data();
  for (std::size_t c = 0; c < Q.size(); ++c, row += n) {
    t.setZero();
    for (int col = 0; col < n; ++col) {
      const double* p = P.data() + static_cast<std::size_t>(col) * n;
      const double rc = row[col];
      for (int r = 0; r < n; ++r) t[r] += p[r] * rc;
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += row[i] * t[i];
    Q[c] = acc;
  }
  return Q;
}

void refresh_gain_cache(EstimatorState& state, const JacobianTable& table) {
  state.Q = dense_quadratic_forms(state.P, table);
  const std::uint64_t n = static_cast<std::uint64_t>(table.n_params());
  state.ops.cache += u64(table.n_edges()) * (2 * n * n + 2 * n);
  state.cache_stale = false;
  state.cache_growth = 1.0;
}

double cache_deviation(const EstimatorState& state, const JacobianTable& table) {
  const auto dense = dense_quadratic_forms(state.P, table);
  double scale = 0.0;
  double worst = 0.0;
  for (std::size_t c = 0; c < dense.size(); ++c) {
    scale = std::max(scale, std::abs(dense[c]));
    worst = std::max(worst, std::abs(dense[c] - state.Q[c]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

MeasurementUpdate update_dense(EstimatorState& state, const JacobianTable& table, Code c_star, double z,
                               CacheRefresh refresh) {
  require_code(table, c_star);
  if (!std::isfinite(z)) throw std::invalid_argument("innovation must be finite");
  const int n = table.n_params();
  const auto j = table.row(c_star);
  const auto jv = as_vector(j);

  MeasurementUpdate upd;
  upd.code = c_star;
  upd.z = z;
  upd.v = covariance_times(state.P, j);
  upd.q_prior = jv.dot(upd.v);
  upd.S = upd.q_prior + state.R;
  if (!(upd.S > 0.0)) throw NumericalBreakdown("innovation variance S <= 0 at code " + std::to_string(c_star));

  const Eigen::VectorXd K = upd.v / upd.S;
  state.theta += K * z;
  const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(n, n) - K * jv.transpose();
  state.P = (IKH * state.P).eval();
  symmetrize(state.P);

  const std::uint64_t N = static_cast<std::uint64_t>(n);
  // P j, j.v, K, theta, I - K j, (I - K j) P, symmetrization
  state.ops.update += 2 * N * N + 2 * N + N + 2 * N + 2 * N * N + 2 * N * N * N + 2 * N * N;

  if (refresh == CacheRefresh::kImmediate) {
    refresh_gain_cache(state, table);
  } else {
    state.cache_stale = true;
  }
  return upd;
}

MeasurementUpdate update_rank1(EstimatorState& state, const JacobianTable& table, Code c_star, double z) {
  require_code(table, c_star);
  if (!std::isfinite(z)) throw std::invalid_argument("innovation must be finite");
  if (state.cache_stale) refresh_gain_cache(state, table);
  const int n = table.n_params();

  MeasurementUpdate upd;
  upd.code = c_star;
  upd.z = z;
  upd.q_prior = state.q(c_star);
  upd.S = upd.q_prior + state.R;
  if (!(upd.S > 0.0)) throw NumericalBreakdown("innovation variance S <= 0 at code " + std::to_string(c_star));
  const double inv_s = 1.0 / upd.S;

  // (1) v = P j^T
  upd.v = covariance_times(state.P, table.row(c_star));
  // (2) u[c] = j_c v
  upd.u = project_all(table, upd.v);
  // (3) Q[c] -= u[c]^2 / S
  for (std::size_t c = 0; c < state.Q.size(); ++c) state.Q[c] -= upd.u[c] * upd.u[c] * inv_s;
  // (4) P -= v v^T / S; the product v_r v_c is commutative so P stays symmetric
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) state.P(r, c) -= (upd.v[r] * upd.v[c]) * inv_s;
  }
  symmetrize(state.P);
  state.theta += upd.v * (z * inv_s);

  const std::uint64_t N = static_cast<std::uint64_t>(n);
  const std::uint64_t C = u64(table.n_edges());
  state.ops.update += 2 * N * N + 3 * N * N + 2 * N * N + 2 * N + 1;
  state.ops.cache += 2 * C * N + 3 * C;
  return upd;
}

double nis(double z, double S) {
  if (!(S > 0.0)) throw NumericalBreakdown("innovation variance S <= 0");
  return z * z / S;
}

double nis(double z, Code c_star, const EstimatorState& state) { return nis(z, state.q(c_star) + state.R); }

bool inflate(EstimatorState& state, const JacobianTable& table, InflationMode mode, double alpha,
             const MeasurementUpdate& upd) {
  if (mode == InflationMode::kOff) return false;
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  const int n = table.n_params();
  const std::uint64_t N = static_cast<std::uint64_t>(n);
  const std::uint64_t C = u64(table.n_edges());
  const bool maintain_cache = !state.cache_stale;

  if (mode == InflationMode::kUniform) {
    state.P *= alpha;
    state.ops.inflate += N * N;
    if (maintain_cache) {
      for (double& q : state.Q) q *= alpha;
      state.ops.inflate += C;
      state.cache_growth *= alpha;
      if (state.cache_growth > kMaxCacheGrowth) refresh_gain_cache(state, table);
    }
    return true;
  }

  const double q = upd.q_prior;
  if (!(q > 0.0) || upd.v.size() != n) return false;
  const double scale = (alpha - 1.0) / q;
  const Eigen::VectorXd& w = upd.v;

  if (mode == InflationMode::kAlignedFull) {
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) state.P(r, c) += (w[r] * w[c]) * scale;
    }
    state.ops.inflate += 2 * N * N + 1;
    if (maintain_cache) {
      std::vector<double> computed;
      const std::vector<double>* u = &upd.u;
      if (upd.u.size() != state.Q.size()) {
        computed = project_all(table, w);
        u = &computed;
        state.ops.inflate += 2 * C * N;
      }
      for (std::size_t c = 0; c < state.Q.size(); ++c) state.Q[c] += (*u)[c] * (*u)[c] * scale;
      state.ops.inflate += 3 * C;
    }
    return true;
  }

  // Diagonal approximation: only P[i,i] grows; Q follows the diagonal change exactly.
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    d[i] = w[i] * w[i] * scale;
    state.P(i, i) += d[i];
  }
  state.ops.inflate += 3 * N;
  if (maintain_cache) {
    const double* row = table.data().data();
    for (std::size_t c = 0; c < state.Q.size(); ++c, row += n) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += row[i] * row[i] * d[i];
      state.Q[c] += acc;
    }
    state.ops.inflate += 3 * C * N + C;
  }
  return true;
}

bool check_termination(EstimatorState& state, double epsilon, int n_term, bool signed_delta) {
  const double trace = state.P.trace();
  const double delta = trace - state.trace_prev;
  const bool below = signed_delta ? delta < epsilon : std::abs(delta) < epsilon;
  state.consec_below = below ? state.consec_below + 1 : 0;
  state.trace_prev = trace;
  state.ops.termination += static_cast<std::uint64_t>(state.P.rows()) + 2;
  return state.consec_below >= n_term;
}

double resolve_measurement_variance(const EstimatorConfig& config, double noise_sigma, const SweepConfig& sweep,
                                    std::uint64_t seed) {
  if (config.measurement_variance) return *config.measurement_variance;
  Rng rng(seed, 0xca11b7a7e);
  const double calibrated = calibrate_measurement_variance(noise_sigma, sweep, config.calibration_trials, rng);
  const double step = sweep.fine_step();
  return std::max(calibrated, step * step / 12.0);
}

RunResult run(const DeviceUnderTest& device, const EstimatorConfig& config, const SweepConfig& sweep, Rng& rng,
              const RunOptions& options) {
  config.validate();
  const JacobianTable table(device.n_bits(), config.poly_order);
  const double R = resolve_measurement_variance(config, device.noise_sigma(), sweep, rng.seed());
  return run(device, table, config, R, sweep, rng, options);
}

RunResult run(const DeviceUnderTest& device, const JacobianTable& table, const EstimatorConfig& config, double R,
              const SweepConfig& sweep, Rng& rng, const RunOptions& options) {
  config.validate();
  sweep.validate();
  if (table.n_bits() != device.n_bits() || table.poly_order() != config.poly_order) {
    throw std::invalid_argument("Jacobian table does not match device resolution / polynomial order");
  }

  EstimatorState state = init_state(config, table, R, options.theta0 ? *options.theta0 : default_theta0(table));

  const bool want_errors = options.error_every > 0 || !options.error_checkpoints.empty();
  std::vector<double> truth_inl;
  std::vector<double> truth_dnl;
  if (want_errors) {
    truth_inl = true_inl(device);
    truth_dnl = true_dnl(device);
  }
  auto errors_at = [&](int it) {
    if (options.error_every > 0 && it % options.error_every == 0) return true;
    return std::find(options.error_checkpoints.begin(), options.error_checkpoints.end(), it) !=
           options.error_checkpoints.end();
  };
  auto theta_span = [&] { return std::span<const double>(state.theta.data(), static_cast<std::size_t>(state.theta.size())); };

  RunResult result;
  result.R = R;
  const bool dense = config.update_mode == UpdateMode::kDense;

  int it = 0;
  while (it < config.max_iterations) {
    ++it;
    auto t0 = Clock::now();
    const Code c_star = select_code(state);
    const double select_s = seconds_since(t0);
    result.timing.select_s += select_s;
    const double compute_before = result.timing.compute_s();

    const double predicted = dot_row(table.row(c_star), state.theta);
    const EdgeMeasurement meas = localized_sweep(device, c_star, predicted, sweep, rng);
    const double z = meas.edge_estimate - predicted;

    t0 = Clock::now();
    const double nis_k = nis(z, c_star, state);
    const MeasurementUpdate upd =
        dense ? update_dense(state, table, c_star, z, CacheRefresh::kDeferred) : update_rank1(state, table, c_star, z);
    result.timing.update_s += seconds_since(t0);

    t0 = Clock::now();
    bool inflated = false;
    if (config.inflation_mode != InflationMode::kOff && nis_k > config.tau) {
      inflated = inflate(state, table, config.inflation_mode, config.alpha, upd);
      result.inflations += inflated ? 1 : 0;
    }
    result.timing.inflate_s += seconds_since(t0);

    if (state.cache_stale) {
      t0 = Clock::now();
      refresh_gain_cache(state, table);
      result.timing.update_s += seconds_since(t0);
    }

    if (config.exact_check_every > 0 && it % config.exact_check_every == 0) {
      state.max_cache_deviation = std::max(state.max_cache_deviation, cache_deviation(state, table));
      if (config.inflation_mode == InflationMode::kAlignedDiagonal) refresh_gain_cache(state, table);
    }

    t0 = Clock::now();
    const bool done = check_termination(state, config.epsilon, config.n_term, config.signed_trace_delta);
    result.timing.termination_s += seconds_since(t0);
    ++state.k;

    if (options.keep_history) {
      IterationRecord rec{it, c_star, z, nis_k, state.trace_prev, inflated, std::nullopt, std::nullopt,
                          select_s, result.timing.compute_s() - compute_before};
      if (want_errors && errors_at(it)) {
        const auto curves = curves_from_edges(edges_from_theta(theta_span(), table));
        rec.dinl_max = max_abs_error(curves.inl, truth_inl);
        rec.ddnl_max = max_abs_error(curves.dnl, truth_dnl);
      }
      state.history.push_back(rec);
    }

    if (options.stop == StopRule::kTraceTermination && done) {
      result.terminated = true;
      break;
    }
  }

  result.iterations = it;
  result.theta_hat = state.theta;
  result.raw_betas = table.raw_betas(theta_span());
  result.estimate = curves_from_edges(edges_from_theta(theta_span(), table));
  if (!want_errors) {
    truth_inl = true_inl(device);
    truth_dnl = true_dnl(device);
  }
  result.dinl_max = max_abs_error(result.estimate.inl, truth_inl);
  result.ddnl_max = max_abs_error(result.estimate.dnl, truth_dnl);
  result.history = std::move(state.history);
  result.ops = state.ops;
  result.max_cache_deviation = state.max_cache_deviation;
  return result;
}

void write_history(std::ostream& os, std::span<const IterationRecord> history) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : history) {
    os << r.iter << ' ' << r.code << ' ' << r.z << ' ' << r.nis << ' ' << r.trace;
    if (r.dinl_max) os << ' ' << *r.dinl_max << ' ' << r.ddnl_max.value_or(0.0);
    os << '\n';
  }
  os.precision(old_precision);
}

void write_final_state(std::ostream& os, const DeviceUnderTest& device, const RunResult& result) {
  write_device(os, device);
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < result.theta_hat.size(); ++i) os << "theta " << i << ' ' << result.theta_hat[i] << '\n';
  os.precision(old_precision);
}

}  // namespace uglms
