#include "uglms/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

namespace uglms {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  const fs::path p = fs::path(cfg.out_dir) / name;
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f.precision(std::numeric_limits<double>::max_digits10);
  return f;
}

void write_pairs(const ExperimentConfig& cfg, const std::string& name, const std::vector<int>& x,
                 const std::vector<double>& y) {
  auto f = open_out(cfg, name);
  for (std::size_t i = 0; i < x.size(); ++i) f << x[i] << ' ' << y[i] << '\n';
}

void write_config_echo(const ExperimentConfig& cfg) {
  auto f = open_out(cfg, "config.txt");
  f << cfg.to_text();
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0e", eps);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<int> checkpoints(int budget, int every) {
  std::vector<int> out;
  if (every <= 0) every = budget;
  for (int it = every; it <= budget; it += every) out.push_back(it);
  if (out.empty() || out.back() != budget) out.push_back(budget);
  return out;
}

}  // namespace

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size()));
  const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return values[std::min(idx, values.size() - 1)];
}

Band summarize(const std::vector<double>& values) {
  Band b;
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  b.p10 = percentile(values, 0.10);
  b.p90 = percentile(values, 0.90);
  return b;
}

const TimingRow* TimingReport::find(int n_bits, const std::string& variant) const {
  for (const auto& r : rows) {
    if (r.n_bits == n_bits && r.variant == variant) return &r;
  }
  return nullptr;
}

DeviceDraw study_device(const ExperimentConfig& cfg, int run_index) {
  const std::uint64_t seed = cfg.device_seed + (cfg.vary_device ? static_cast<std::uint64_t>(run_index) : 0);
  return generate_device(cfg.n_bits, cfg.sigma_unit, cfg.carrier_polynomial(), cfg.noise_sigma, seed);
}

std::vector<RunResult> run_batch(const ExperimentConfig& cfg, const EstimatorConfig& est, const RunOptions& options) {
  est.validate();
  const SweepConfig sweep = cfg.sweep();
  const JacobianTable table(cfg.n_bits, est.poly_order);
  const double R = resolve_measurement_variance(est, cfg.noise_sigma, sweep, cfg.seed);

  std::vector<DeviceUnderTest> devices;
  const int n_devices = cfg.vary_device ? cfg.runs : 1;
  devices.reserve(static_cast<std::size_t>(n_devices));
  for (int r = 0; r < n_devices; ++r) devices.push_back(study_device(cfg, r).device);

  std::vector<RunResult> results(static_cast<std::size_t>(cfg.runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < cfg.runs; r = next++) {
      Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
      const auto& device = devices[cfg.vary_device ? static_cast<std::size_t>(r) : 0];
      results[static_cast<std::size_t>(r)] = run(device, table, est, R, sweep, rng, options);
    }
  };
  const int n_workers = std::min(cfg.workers, cfg.runs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

SingleReport run_single(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto draw = study_device(cfg, 0);
  const EstimatorConfig est = cfg.estimator();
  const SweepConfig sweep = cfg.sweep();
  RunOptions options;
  options.stop = cfg.stop;
  options.error_every = cfg.error_every;
  Rng rng(cfg.seed);

  SingleReport rep{run(draw.device, est, sweep, rng, options), true_inl(draw.device), true_dnl(draw.device),
                   draw.seed_used};

  if (!cfg.out_dir.empty()) {
    const auto& est_curves = rep.result.estimate;
    auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
      std::vector<double> d(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
      return d;
    };
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_curve_file((dir / "true_inl.dat").string(), rep.true_inl);
    write_curve_file((dir / "est_inl.dat").string(), est_curves.inl);
    write_curve_file((dir / "diff_inl.dat").string(), diff(est_curves.inl, rep.true_inl));
    write_curve_file((dir / "true_dnl.dat").string(), rep.true_dnl);
    write_curve_file((dir / "est_dnl.dat").string(), est_curves.dnl);
    write_curve_file((dir / "diff_dnl.dat").string(), diff(est_curves.dnl, rep.true_dnl));
    {
      auto f = open_out(cfg, "history.dat");
      write_history(f, rep.result.history);
    }
    {
      auto f = open_out(cfg, "device.txt");
      write_device(f, draw.device);
    }
    {
      auto f = open_out(cfg, "final_state.txt");
      write_final_state(f, draw.device, rep.result);
    }
    {
      auto f = open_out(cfg, "summary.csv");
      f << "n_bits,device_seed,seed,R,iterations,terminated,inflations,dinl_max,ddnl_max\n";
      f << cfg.n_bits << ',' << rep.device_seed << ',' << cfg.seed << ',' << rep.result.R << ','
        << rep.result.iterations << ',' << (rep.result.terminated ? 1 : 0) << ',' << rep.result.inflations << ','
        << rep.result.dinl_max << ',' << rep.result.ddnl_max << '\n';
    }
    write_config_echo(cfg);
  }
  return rep;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const int budget = cfg.iteration_budget();
  const auto cps = checkpoints(budget, cfg.error_every);
  const InflationMode aligned = (cfg.inflation_mode == InflationMode::kAlignedFull ||
                                 cfg.inflation_mode == InflationMode::kAlignedDiagonal)
                                    ? cfg.inflation_mode
                                    : InflationMode::kAlignedFull;

  ConvergenceReport rep;
  for (InflationMode mode : {InflationMode::kUniform, aligned}) {
    EstimatorConfig est = cfg.estimator();
    est.inflation_mode = mode;
    est.max_iterations = budget;
    RunOptions options;
    options.stop = StopRule::kFixedIterations;
    options.error_checkpoints = cps;
    const auto results = run_batch(cfg, est, options);

    ConvergenceSeries s;
    s.mode = to_string(mode);
    s.iterations = cps;
    for (const auto& r : results) {
      std::vector<double> inl;
      std::vector<double> dnl;
      for (const auto& h : r.history) {
        if (h.dinl_max) {
          inl.push_back(*h.dinl_max);
          dnl.push_back(*h.ddnl_max);
        }
      }
      s.run_inl.push_back(std::move(inl));
      s.run_dnl.push_back(std::move(dnl));
    }
    for (std::size_t k = 0; k < cps.size(); ++k) {
      std::vector<double> col_inl;
      std::vector<double> col_dnl;
      for (std::size_t r = 0; r < results.size(); ++r) {
        col_inl.push_back(s.run_inl[r][k]);
        col_dnl.push_back(s.run_dnl[r][k]);
      }
      s.inl.push_back(summarize(col_inl));
      s.dnl.push_back(summarize(col_dnl));
    }
    rep.series.push_back(std::move(s));
  }

  if (!cfg.out_dir.empty()) {
    auto summary = open_out(cfg, "summary.csv");
    summary << "mode,iteration,mean_dinl,p10_dinl,p90_dinl,mean_ddnl,p10_ddnl,p90_ddnl\n";
    for (const auto& s : rep.series) {
      auto pick = [&](const std::vector<Band>& bands, double Band::*field) {
        std::vector<double> out;
        for (const auto& b : bands) out.push_back(b.*field);
        return out;
      };
      write_pairs(cfg, "mean_inl_" + s.mode + ".dat", s.iterations, pick(s.inl, &Band::mean));
      write_pairs(cfg, "p10_inl_" + s.mode + ".dat", s.iterations, pick(s.inl, &Band::p10));
      write_pairs(cfg, "p90_inl_" + s.mode + ".dat", s.iterations, pick(s.inl, &Band::p90));
      write_pairs(cfg, "mean_dnl_" + s.mode + ".dat", s.iterations, pick(s.dnl, &Band::mean));
      write_pairs(cfg, "p10_dnl_" + s.mode + ".dat", s.iterations, pick(s.dnl, &Band::p10));
      write_pairs(cfg, "p90_dnl_" + s.mode + ".dat", s.iterations, pick(s.dnl, &Band::p90));
      auto runs = open_out(cfg, "runs_" + s.mode + ".csv");
      runs << "run,iteration,dinl_max,ddnl_max\n";
      for (std::size_t r = 0; r < s.run_inl.size(); ++r) {
        for (std::size_t k = 0; k < s.iterations.size(); ++k) {
          runs << r << ',' << s.iterations[k] << ',' << s.run_inl[r][k] << ',' << s.run_dnl[r][k] << '\n';
        }
      }
      for (std::size_t k = 0; k < s.iterations.size(); ++k) {
        summary << s.mode << ',' << s.iterations[k] << ',' << s.inl[k].mean << ',' << s.inl[k].p10 << ','
                << s.inl[k].p90 << ',' << s.dnl[k].mean << ',' << s.dnl[k].p10 << ',' << s.dnl[k].p90 << '\n';
      }
    }
    write_config_echo(cfg);
  }
  return rep;
}

HeatmapReport run_heatmap(const ExperimentConfig& cfg) {
  cfg.validate();
  HeatmapReport rep;
  RunOptions options;
  options.stop = cfg.stop;
  options.keep_history = false;
  for (double alpha : cfg.alphas) {
    for (double tau : cfg.taus) {
      EstimatorConfig est = cfg.estimator();
      est.alpha = alpha;
      est.tau = tau;
      HeatmapCell cell{alpha, tau, 0.0, {}};
      for (const auto& r : run_batch(cfg, est, options)) cell.run_dinl.push_back(r.dinl_max);
      cell.mean_dinl = summarize(cell.run_dinl).mean;
      rep.cells.push_back(std::move(cell));
    }
  }
  if (!cfg.out_dir.empty()) {
    auto grid = open_out(cfg, "heatmap.dat");
    auto runs = open_out(cfg, "heatmap_runs.csv");
    runs << "alpha,tau,run,dinl_max\n";
    for (const auto& c : rep.cells) {
      grid << c.alpha << ' ' << c.tau << ' ' << c.mean_dinl << '\n';
      for (std::size_t r = 0; r < c.run_dinl.size(); ++r) {
        runs << c.alpha << ',' << c.tau << ',' << r << ',' << c.run_dinl[r] << '\n';
      }
    }
    write_config_echo(cfg);
  }
  return rep;
}

EpsilonReport run_epsilon(const ExperimentConfig& cfg) {
  cfg.validate();
  EpsilonReport rep;
  RunOptions options;
  options.stop = StopRule::kTraceTermination;
  options.keep_history = false;
  for (double eps : cfg.epsilons) {
    EstimatorConfig est = cfg.estimator();
    est.epsilon = eps;
    EpsilonStudy study;
    study.epsilon = eps;
    std::vector<double> its;
    std::vector<double> errs;
    for (const auto& r : run_batch(cfg, est, options)) {
      study.runs.push_back({r.iterations, r.dinl_max, r.terminated});
      study.not_converged += r.terminated ? 0 : 1;
      its.push_back(r.iterations);
      errs.push_back(r.dinl_max);
    }
    study.iterations = summarize(its);
    study.dinl = summarize(errs);
    rep.studies.push_back(std::move(study));
  }
  if (!cfg.out_dir.empty()) {
    auto summary = open_out(cfg, "summary.csv");
    summary << "epsilon,runs,not_converged,mean_iter,p10_iter,p90_iter,mean_dinl,p10_dinl,p90_dinl\n";
    for (const auto& s : rep.studies) {
      auto f = open_out(cfg, "eps_" + eps_tag(s.epsilon) + ".dat");
      for (std::size_t r = 0; r < s.runs.size(); ++r) {
        f << r << ' ' << s.runs[r].iterations << ' ' << s.runs[r].dinl_max << ' ' << (s.runs[r].terminated ? 1 : 0)
          << '\n';
      }
      summary << s.epsilon << ',' << s.runs.size() << ',' << s.not_converged << ',' << s.iterations.mean << ','
              << s.iterations.p10 << ',' << s.iterations.p90 << ',' << s.dinl.mean << ',' << s.dinl.p10 << ','
              << s.dinl.p90 << '\n';
    }
    write_config_echo(cfg);
  }
  return rep;
}

TimingReport run_timing(const ExperimentConfig& cfg) {
  cfg.validate();
  TimingReport rep;
  const int budget = cfg.iteration_budget();
  for (int n_bits : cfg.resolutions) {
    ExperimentConfig local = cfg;
    local.n_bits = n_bits;
    for (const auto& variant : cfg.variants) {
      EstimatorConfig est = local.estimator();
      est.max_iterations = budget;
      est.exact_check_every = 0;
      ExperimentConfig dev_cfg = local;
      if (variant == "dense-baseline") {
        est.update_mode = UpdateMode::kDense;
        est.inflation_mode = InflationMode::kUniform;
      } else {
        est.update_mode = UpdateMode::kRank1;
      }
      if (variant == "rank1+poly") {
        est.poly_order = std::max(2, cfg.poly_order);
        if (dev_cfg.carrier.empty() && dev_cfg.carrier_bow == 0.0) dev_cfg.carrier_bow = 1.0;
      } else {
        est.poly_order = -1;
      }
      const auto draw = study_device(dev_cfg, 0);
      const SweepConfig sweep = local.sweep();
      RunOptions options;
      options.stop = StopRule::kFixedIterations;
      Rng rng(cfg.seed);
      const RunResult r = run(draw.device, est, sweep, rng, options);

      TimingRow row;
      row.n_bits = n_bits;
      row.variant = variant;
      row.samples = sweep.samples;
      row.iterations = r.iterations;
      std::vector<double> sel;
      std::vector<double> upd;
      for (const auto& h : r.history) {
        sel.push_back(h.select_s * 1e6);
        upd.push_back(h.update_s * 1e6);
      }
      row.median_select_us = median(sel);
      row.median_update_us = median(upd);
      row.compute_ms = r.timing.compute_s() * 1e3;
      row.ops_per_iteration = static_cast<double>(r.ops.total()) / r.iterations;
      rep.rows.push_back(row);
    }
  }
  for (auto& row : rep.rows) {
    if (const TimingRow* base = rep.find(row.n_bits, "dense-baseline")) {
      row.speedup_vs_dense = base->compute_ms / row.compute_ms;
      row.ops_ratio_vs_dense = base->ops_per_iteration / row.ops_per_iteration;
    }
  }
  if (!cfg.out_dir.empty()) {
    auto csv = open_out(cfg, "timing.csv");
    csv << "n_bits,variant,samples,iterations,median_select_us,median_update_us,compute_ms,ops_per_iteration,"
           "speedup_vs_dense,ops_ratio_vs_dense\n";
    auto txt = open_out(cfg, "timing.txt");
    txt.precision(4);
    txt << "bits M variant select_us update_us compute_ms ops/iter speedup\n";
    for (const auto& r : rep.rows) {
      csv << r.n_bits << ',' << r.variant << ',' << r.samples << ',' << r.iterations << ',' << r.median_select_us << ','
          << r.median_update_us << ',' << r.compute_ms << ',' << r.ops_per_iteration << ',' << r.speedup_vs_dense
          << ',' << r.ops_ratio_vs_dense << '\n';
      txt << r.n_bits << ' ' << r.samples << ' ' << r.variant << ' ' << r.median_select_us << ' '
          << r.median_update_us << ' ' << r.compute_ms << ' ' << r.ops_per_iteration << ' ' << r.speedup_vs_dense
          << '\n';
    }
    write_config_echo(cfg);
  }
  return rep;
}

}  // namespace uglms
