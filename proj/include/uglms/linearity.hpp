#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uglms/adc_model.hpp"
#include "uglms/jacobian.hpp"

namespace uglms {

/// Edges, INL and DNL of one converter. Index i of every vector belongs to
/// code i + 1 (DNL[i] is the width of the step between edges i+1 and i+2).
struct LinearityCurves {
  std::vector<double> edges;
  std::vector<double> inl;
  std::vector<double> dnl;
};

/// edges[c - 1] = j_c . theta for every code c.
std::vector<double> edges_from_theta(std::span<const double> theta, const JacobianTable& table);

/// Residuals from the line through the first and last edge, in units of the
/// corrected step (last - first) / (count - 1).
std::vector<double> endpoint_corrected_inl(std::span<const double> edges);

/// dnl[i] = (edges[i+1] - edges[i]) / step_corrected - 1.
std::vector<double> dnl_from_edges(std::span<const double> edges);

LinearityCurves curves_from_edges(std::vector<double> edges);

/// max_i |est[i] - truth[i]|.
double max_abs_error(std::span<const double> est, std::span<const double> truth);

/// `code value` rows, first row labelled `first_code`.
void write_curve(std::ostream& os, std::span<const double> values, Code first_code = 1);
void write_curve_file(const std::string& path, std::span<const double> values, Code first_code = 1);

}  // namespace uglms
