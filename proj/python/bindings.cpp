#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uglms/errors.hpp"
#include "uglms/harness.hpp"

namespace py = pybind11;
using namespace uglms;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

ExperimentConfig make_config(const py::dict& kwargs, const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.experiment = parse_experiment_kind(experiment);
  for (const auto& item : kwargs) {
    const auto key = py::str(item.first).cast<std::string>();
    py::handle v = item.second;
    std::string text;
    if (py::isinstance<py::bool_>(v)) {
      text = v.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& x : v) text += (text.empty() ? "" : ",") + py::str(x).cast<std::string>();
    } else if (v.is_none()) {
      text = "auto";
    } else {
      text = py::str(v).cast<std::string>();
    }
    cfg.set(key, text);
  }
  cfg.validate();
  return cfg;
}

py::dict band(const Band& b) {
  py::dict d;
  d["mean"] = b.mean;
  d["p10"] = b.p10;
  d["p90"] = b.p90;
  return d;
}

py::dict result_dict(const RunResult& r) {
  py::dict d;
  d["theta_hat"] = r.theta_hat;
  d["raw_betas"] = r.raw_betas;
  d["edges"] = r.estimate.edges;
  d["inl"] = r.estimate.inl;
  d["dnl"] = r.estimate.dnl;
  d["dinl_max"] = r.dinl_max;
  d["ddnl_max"] = r.ddnl_max;
  d["iterations"] = r.iterations;
  d["terminated"] = r.terminated;
  d["R"] = r.R;
  d["inflations"] = r.inflations;
  std::vector<Code> codes;
  std::vector<double> nis_values;
  std::vector<double> traces;
  for (const auto& h : r.history) {
    codes.push_back(h.code);
    nis_values.push_back(h.nis);
    traces.push_back(h.trace);
  }
  d["codes"] = codes;
  d["nis"] = nis_values;
  d["trace"] = traces;
  d["ops_total"] = r.ops.total();
  return d;
}

}  // namespace

PYBIND11_MODULE(_uglms, m) {
  m.doc() = "Closed-loop EKF linearity estimation for SAR ADCs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalBreakdown>(m, "NumericalBreakdown", PyExc_RuntimeError);

  py::class_<DeviceUnderTest>(m, "Device")
      .def(py::init([](std::vector<double> weights, std::vector<double> carrier, double noise_sigma) {
             return DeviceUnderTest(MismatchVector(std::move(weights)),
                                    carrier.empty() ? CarrierPolynomial() : CarrierPolynomial(std::move(carrier)),
                                    noise_sigma);
           }),
           py::arg("weights"), py::arg("carrier") = std::vector<double>{}, py::arg("noise_sigma") = 0.0)
      .def_property_readonly("n_bits", &DeviceUnderTest::n_bits)
      .def_property_readonly("noise_sigma", &DeviceUnderTest::noise_sigma)
      .def_property_readonly("weights",
                             [](const DeviceUnderTest& d) {
                               auto w = d.theta().weights();
                               return std::vector<double>(w.begin(), w.end());
                             })
      .def_property_readonly("carrier", [](const DeviceUnderTest& d) { return to_vec(d.carrier().coeffs()); })
      .def_property_readonly("edges",
                             [](const DeviceUnderTest& d) {
                               auto e = d.edges();
                               return std::vector<double>(e.begin(), e.end());
                             })
      .def("edge", &DeviceUnderTest::edge, py::arg("code"))
      .def("quantize", [](const DeviceUnderTest& d, double v) { return quantize(d, v); }, py::arg("v"))
      .def("true_inl", [](const DeviceUnderTest& d) { return true_inl(d); })
      .def("true_dnl", [](const DeviceUnderTest& d) { return true_dnl(d); });

  m.def(
      "generate_device",
      [](int n_bits, double sigma_unit, std::vector<double> carrier, double noise_sigma, std::uint64_t seed) {
        return generate_device(n_bits, sigma_unit,
                               carrier.empty() ? CarrierPolynomial() : CarrierPolynomial(std::move(carrier)),
                               noise_sigma, seed)
            .device;
      },
      py::arg("n_bits"), py::arg("sigma_unit") = 0.003, py::arg("carrier") = std::vector<double>{},
      py::arg("noise_sigma") = 1.0, py::arg("seed") = 1);

  m.def("bit_vector", &bit_vector, py::arg("code"), py::arg("n_bits"));
  m.def("endpoint_corrected_inl", [](const std::vector<double>& e) { return endpoint_corrected_inl(e); },
        py::arg("edges"));
  m.def("dnl_from_edges", [](const std::vector<double>& e) { return dnl_from_edges(e); }, py::arg("edges"));
  m.def("quadratic_carrier", [](int n_bits, double offset, double bow) {
    return to_vec(quadratic_carrier(n_bits, offset, bow).coeffs());
  });

  m.def(
      "localized_sweep",
      [](const DeviceUnderTest& d, Code c_star, double predicted, int samples, double span, std::uint64_t seed) {
        Rng rng(seed);
        return localized_sweep(d, c_star, predicted, SweepConfig{samples, span}, rng).edge_estimate;
      },
      py::arg("device"), py::arg("code"), py::arg("predicted_edge"), py::arg("samples") = 128,
      py::arg("window_span") = 4.0, py::arg("seed") = 1);

  m.def(
      "calibrate_measurement_variance",
      [](double noise_sigma, int samples, double span, int trials, std::uint64_t seed) {
        Rng rng(seed);
        return calibrate_measurement_variance(noise_sigma, SweepConfig{samples, span}, trials, rng);
      },
      py::arg("noise_sigma"), py::arg("samples") = 128, py::arg("window_span") = 4.0, py::arg("trials") = 1000,
      py::arg("seed") = 1);

  m.def(
      "estimate",
      [](const DeviceUnderTest& d, const py::kwargs& kwargs) {
        ExperimentConfig cfg = make_config(kwargs, "single");
        RunOptions options;
        options.stop = cfg.stop;
        Rng rng(cfg.seed);
        py::gil_scoped_release release;
        RunResult r = run(d, cfg.estimator(), cfg.sweep(), rng, options);
        py::gil_scoped_acquire acquire;
        return result_dict(r);
      },
      py::arg("device"), "Runs the estimator on `device`; keyword arguments are config keys.");

  m.def("config_keys", &ExperimentConfig::keys);

  m.def(
      "run_single",
      [](const py::kwargs& kwargs) {
        const auto rep = run_single(make_config(kwargs, "single"));
        py::dict d = result_dict(rep.result);
        d["true_inl"] = rep.true_inl;
        d["true_dnl"] = rep.true_dnl;
        d["device_seed"] = rep.device_seed;
        return d;
      });

  m.def("run_convergence", [](const py::kwargs& kwargs) {
    const auto rep = run_convergence(make_config(kwargs, "convergence"));
    py::list out;
    for (const auto& s : rep.series) {
      py::dict d;
      d["mode"] = s.mode;
      d["iterations"] = s.iterations;
      py::list inl;
      py::list dnl;
      for (const auto& b : s.inl) inl.append(band(b));
      for (const auto& b : s.dnl) dnl.append(band(b));
      d["inl"] = inl;
      d["dnl"] = dnl;
      d["run_inl"] = s.run_inl;
      out.append(d);
    }
    return out;
  });

  m.def("run_heatmap", [](const py::kwargs& kwargs) {
    const auto rep = run_heatmap(make_config(kwargs, "heatmap"));
    py::list out;
    for (const auto& c : rep.cells) {
      py::dict d;
      d["alpha"] = c.alpha;
      d["tau"] = c.tau;
      d["mean_dinl"] = c.mean_dinl;
      d["run_dinl"] = c.run_dinl;
      out.append(d);
    }
    return out;
  });

  m.def("run_epsilon", [](const py::kwargs& kwargs) {
    const auto rep = run_epsilon(make_config(kwargs, "epsilon"));
    py::list out;
    for (const auto& s : rep.studies) {
      py::dict d;
      d["epsilon"] = s.epsilon;
      d["iterations"] = band(s.iterations);
      d["dinl"] = band(s.dinl);
      d["not_converged"] = s.not_converged;
      py::list runs;
      for (const auto& r : s.runs) runs.append(py::make_tuple(r.iterations, r.dinl_max, r.terminated));
      d["runs"] = runs;
      out.append(d);
    }
    return out;
  });

  m.def("run_timing", [](const py::kwargs& kwargs) {
    const auto rep = run_timing(make_config(kwargs, "timing"));
    py::list out;
    for (const auto& r : rep.rows) {
      py::dict d;
      d["n_bits"] = r.n_bits;
      d["variant"] = r.variant;
      d["iterations"] = r.iterations;
      d["median_select_us"] = r.median_select_us;
      d["median_update_us"] = r.median_update_us;
      d["compute_ms"] = r.compute_ms;
      d["ops_per_iteration"] = r.ops_per_iteration;
      d["speedup_vs_dense"] = r.speedup_vs_dense;
      out.append(d);
    }
    return out;
  });
}
