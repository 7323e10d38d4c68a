#pragma once

// Independent reference implementations used as test oracles. They avoid
// the library's cached tables and fused loops on purpose.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

namespace uglms::oracle {

/// Edge level of code c from the raw weights, MSB first, plus sum beta_m c^m.
inline double edge(const std::vector<double>& weights, const std::vector<double>& betas, std::int64_t c) {
  const int n = static_cast<int>(weights.size());
  double level = 0.0;
  std::int64_t rest = c;
  for (int i = n - 1; i >= 0; --i) {
    if (rest % 2) level += weights[static_cast<std::size_t>(i)];
    rest /= 2;
  }
  double power = 1.0;
  for (double b : betas) {
    level += b * power;
    power *= static_cast<double>(c);
  }
  return level;
}

inline std::vector<double> all_edges(const std::vector<double>& weights, const std::vector<double>& betas) {
  const std::int64_t n_codes = std::int64_t{1} << weights.size();
  std::vector<double> out;
  for (std::int64_t c = 1; c < n_codes; ++c) out.push_back(edge(weights, betas, c));
  return out;
}

/// Residual from the two-point line through the first and last edge, in
/// units of the line's slope.
inline std::vector<double> two_point_inl(const std::vector<double>& e) {
  const double x0 = 0.0;
  const double x1 = static_cast<double>(e.size() - 1);
  const double slope = (e.back() - e.front()) / (x1 - x0);
  std::vector<double> out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double line = e.front() + slope * static_cast<double>(i);
    out.push_back((e[i] - line) / slope);
  }
  return out;
}

/// Row of the edge model for code c: bit pattern followed by (c/c_max)^m.
inline Eigen::VectorXd row(int n_bits, int poly_order, std::int64_t c) {
  Eigen::VectorXd j = Eigen::VectorXd::Zero(n_bits + poly_order + 1);
  for (int i = 0; i < n_bits; ++i) j[i] = static_cast<double>((c >> (n_bits - 1 - i)) & 1);
  const double x = static_cast<double>(c) / static_cast<double>((std::int64_t{1} << n_bits) - 1);
  for (int m = 0; m <= poly_order; ++m) j[n_bits + m] = std::pow(x, m);
  return j;
}

/// One Kalman step with a scalar measurement in Joseph form.
struct KalmanStep {
  Eigen::VectorXd theta;
  Eigen::MatrixXd P;
};

inline KalmanStep joseph_update(const Eigen::VectorXd& theta, const Eigen::MatrixXd& P, const Eigen::VectorXd& j,
                                double R, double z) {
  const double S = j.dot(P * j) + R;
  const Eigen::VectorXd K = P * j / S;
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - K * j.transpose();
  return {theta + K * z, A * P * A.transpose() + R * K * K.transpose()};
}

inline double quadratic_form(const Eigen::MatrixXd& P, const Eigen::VectorXd& j) { return j.dot(P * j); }

/// Relative difference normalized by the larger infinity norm.
inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  const double d = (a - b).cwiseAbs().maxCoeff();
  return scale > 0.0 ? d / scale : d;
}

}  // namespace uglms::oracle
