#include "properties.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "uglms/estimator.hpp"
#include "uglms/linearity.hpp"

namespace uglms::testing {

namespace {

class Recorder {
 public:
  explicit Recorder(std::string name) { out_.name = std::move(name); }

  void check(bool ok, int case_index, const std::string& what) {
    ++out_.checked;
    if (ok) return;
    if (out_.failed++ == 0) {
      std::ostringstream os;
      os << "case " << case_index << ": " << what;
      out_.first_failure = os.str();
    }
  }

  PropertyOutcome result() const { return out_; }

 private:
  PropertyOutcome out_;
};

double max_asymmetry(const Eigen::MatrixXd& P) { return (P - P.transpose()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const Eigen::MatrixXd& P) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

InflationMode pick_mode(Rng& rng) {
  const double u = rng.uniform();
  if (u < 1.0 / 3.0) return InflationMode::kUniform;
  if (u < 2.0 / 3.0) return InflationMode::kAlignedFull;
  return InflationMode::kAlignedDiagonal;
}

}  // namespace

std::vector<PropertyOutcome> run_property_suite(int cases, std::uint64_t seed) {
  Recorder symmetry("covariance symmetric");
  Recorder psd("covariance positive semidefinite");
  Recorder gain("gain in [0, 1)");
  Recorder nis_rec("NIS non-negative");
  Recorder dnl_sum("DNL sums to zero");
  Recorder identity("INL/DNL consistency");
  Recorder cache("inflation keeps the gain cache exact");
  Recorder ties("argmax tie-break deterministic");

  const Rng root(seed);
  for (int k = 0; k < cases; ++k) {
    Rng rng = root.split(static_cast<std::uint64_t>(k));
    const int n_bits = 8 + static_cast<int>(rng.next_u64() % 5);
    const int poly_order = static_cast<int>(rng.next_u64() % 4) - 1;
    const JacobianTable table(n_bits, poly_order);

    EstimatorConfig cfg;
    cfg.expected_unit_sigma = 0.001 + 0.01 * rng.uniform();
    cfg.p0_poly_scale = 0.5 + 20.0 * rng.uniform();
    const double R = 0.05 + 3.0 * rng.uniform();
    EstimatorState st = init_state(cfg, table, R);

    const int steps = 3 + static_cast<int>(rng.next_u64() % 6);
    for (int s = 0; s < steps; ++s) {
      const Code c = select_code(st);
      const double z = rng.normal(2.0);
      const double nis_k = nis(z, c, st);
      nis_rec.check(nis_k >= 0.0 && std::isfinite(nis_k), k, "nis = " + std::to_string(nis_k));

      const auto upd = update_rank1(st, table, c, z);
      if (rng.uniform() < 0.5) {
        const double alpha = 1.5 + 12.0 * rng.uniform();
        inflate(st, table, pick_mode(rng), alpha, upd);
        const double dev = cache_deviation(st, table);
        cache.check(dev < 1e-9, k, "cache deviation " + std::to_string(dev));
      }

      const double scale = st.P.cwiseAbs().maxCoeff();
      symmetry.check(max_asymmetry(st.P) <= 1e-12 * scale, k, "asymmetry " + std::to_string(max_asymmetry(st.P)));
      const double lam = min_eigenvalue(st.P);
      psd.check(lam >= -1e-9 * scale, k, "min eigenvalue " + std::to_string(lam));

      bool gains_ok = true;
      for (Code cc = 1; cc <= table.n_edges(); ++cc) {
        const double g = gain_of(st, cc);
        gains_ok = gains_ok && g >= 0.0 && g < 1.0;
      }
      gain.check(gains_ok, k, "gain outside [0, 1)");
    }

    // Curves of the current estimate.
    std::vector<double> theta(st.theta.data(), st.theta.data() + st.theta.size());
    for (int i = 0; i < n_bits; ++i) theta[static_cast<std::size_t>(i)] += rng.normal(0.05);
    const auto curves = curves_from_edges(edges_from_theta(theta, table));
    double sum = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < curves.dnl.size(); ++i) {
      sum += curves.dnl[i];
      worst = std::max(worst, std::abs(curves.dnl[i] - (curves.inl[i + 1] - curves.inl[i])));
    }
    dnl_sum.check(std::abs(sum) < 1e-9, k, "sum " + std::to_string(sum));
    identity.check(worst < 1e-10, k, "identity residual " + std::to_string(worst));

    // Ties: force a plateau of equal maxima and check the lowest code wins.
    EstimatorState tie = st;
    const double top = 1.0 + *std::max_element(tie.Q.begin(), tie.Q.end());
    const auto n = tie.Q.size();
    const std::size_t a = rng.next_u64() % n;
    const std::size_t b = rng.next_u64() % n;
    tie.Q[a] = top;
    tie.Q[b] = top;
    const Code expected = static_cast<Code>(std::min(a, b)) + 1;
    const Code first = select_code(tie);
    const Code second = select_code(tie);
    ties.check(first == expected && second == first, k, "selected " + std::to_string(first));
  }

  return {symmetry.result(), psd.result(), gain.result(), nis_rec.result(),
          dnl_sum.result(),  identity.result(), cache.result(), ties.result()};
}

}  // namespace uglms::testing
