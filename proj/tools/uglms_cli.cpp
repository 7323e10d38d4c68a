// Command-line driver for the experiment studies.
//
//   uglms <single|convergence|heatmap|epsilon|timing> [--config FILE] [--out DIR]
//         [--seed N] [--<key> VALUE ...]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical breakdown.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "uglms/errors.hpp"
#include "uglms/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void report(const uglms::ExperimentConfig& cfg) {
  using uglms::ExperimentKind;
  switch (cfg.experiment) {
    case ExperimentKind::kSingle: {
      const auto rep = uglms::run_single(cfg);
      std::printf("iterations %d terminated %d inflations %d R %.6g dinl_max %.6f ddnl_max %.6f\n",
                  rep.result.iterations, rep.result.terminated ? 1 : 0, rep.result.inflations, rep.result.R,
                  rep.result.dinl_max, rep.result.ddnl_max);
      break;
    }
    case ExperimentKind::kConvergence: {
      const auto rep = uglms::run_convergence(cfg);
      for (const auto& s : rep.series) {
        const auto& last = s.inl.back();
        std::printf("%-18s iter %d mean_dinl %.4f p10 %.4f p90 %.4f\n", s.mode.c_str(), s.iterations.back(), last.mean,
                    last.p10, last.p90);
      }
      break;
    }
    case ExperimentKind::kHeatmap: {
      const auto rep = uglms::run_heatmap(cfg);
      for (const auto& c : rep.cells) std::printf("alpha %-6g tau %-6g mean_dinl %.4f\n", c.alpha, c.tau, c.mean_dinl);
      break;
    }
    case ExperimentKind::kEpsilon: {
      const auto rep = uglms::run_epsilon(cfg);
      for (const auto& s : rep.studies) {
        std::printf("eps %-8g mean_iter %.1f p10 %.0f p90 %.0f mean_dinl %.4f not_converged %d\n", s.epsilon,
                    s.iterations.mean, s.iterations.p10, s.iterations.p90, s.dinl.mean, s.not_converged);
      }
      break;
    }
    case ExperimentKind::kTiming: {
      const auto rep = uglms::run_timing(cfg);
      std::printf("%4s %-15s %12s %12s %12s %14s %8s\n", "bits", "variant", "select_us", "update_us", "compute_ms",
                  "ops/iter", "speedup");
      for (const auto& r : rep.rows) {
        std::printf("%4d %-15s %12.2f %12.2f %12.2f %14.4g %8.2f\n", r.n_bits, r.variant.c_str(), r.median_select_us,
                    r.median_update_us, r.compute_ms, r.ops_per_iteration, r.speedup_vs_dense);
      }
      break;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop EKF linearity estimation for SAR ADCs"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> overrides;

  for (const char* name : {"single", "convergence", "heatmap", "epsilon", "timing"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " study");
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "base noise seed");
    for (const auto& key : uglms::ExperimentConfig::keys()) {
      if (key == "experiment" || key == "out" || key == "seed") continue;
      sub->add_option_function<std::string>(
          "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; }, "override config key " + key);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    uglms::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = uglms::ExperimentConfig::from_file(config_path);
    cfg.experiment = uglms::parse_experiment_kind(app.get_subcommands().front()->get_name());
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    report(cfg);
  } catch (const uglms::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const uglms::NumericalBreakdown& e) {
    std::cerr << "numerical breakdown: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const uglms::NonMonotoneDevice& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
