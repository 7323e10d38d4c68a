#include "uglms/linearity.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "uglms/errors.hpp"

namespace uglms {

namespace {

double corrected_step(std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("linearity needs at least two code edges");
  const double span = edges.back() - edges.front();
  if (span == 0.0) throw DegenerateDevice("first and last code edge coincide");
  return span / static_cast<double>(edges.size() - 1);
}

}  // namespace

std::vector<double> edges_from_theta(std::span<const double> theta, const JacobianTable& table) {
  const int n = table.n_params();
  if (static_cast<int>(theta.size()) != n) {
    throw std::invalid_argument("parameter vector has " + std::to_string(theta.size()) + " entries, table expects " +
                                std::to_string(n));
  }
  std::vector<double> edges(static_cast<std::size_t>(table.n_edges()));
  const double* row = table.data().data();
  for (std::size_t c = 0; c < edges.size(); ++c, row += n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += row[i] * theta[i];
    edges[c] = acc;
  }
  return edges;
}

std::vector<double> endpoint_corrected_inl(std::span<const double> edges) {
  const double step = corrected_step(edges);
  const double first = edges.front();
  std::vector<double> inl(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    inl[i] = (edges[i] - first) / step - static_cast<double>(i);
  }
  inl.back() = 0.0;
  return inl;
}

std::vector<double> dnl_from_edges(std::span<const double> edges) {
  const double step = corrected_step(edges);
  std::vector<double> dnl(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) dnl[i] = (edges[i + 1] - edges[i]) / step - 1.0;
  return dnl;
}

LinearityCurves curves_from_edges(std::vector<double> edges) {
  LinearityCurves curves;
  curves.inl = endpoint_corrected_inl(edges);
  curves.dnl = dnl_from_edges(edges);
  curves.edges = std::move(edges);
  return curves;
}

double max_abs_error(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size()) {
    throw std::invalid_argument("curve lengths differ: " + std::to_string(est.size()) + " vs " +
                                std::to_string(truth.size()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) worst = std::max(worst, std::abs(est[i] - truth[i]));
  return worst;
}

void write_curve(std::ostream& os, std::span<const double> values, Code first_code) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < values.size(); ++i) os << first_code + static_cast<Code>(i) << ' ' << values[i] << '\n';
  os.precision(old_precision);
}

void write_curve_file(const std::string& path, std::span<const double> values, Code first_code) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_curve(f, values, first_code);
}

}  // namespace uglms
