#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "uglms/experiment_config.hpp"

using namespace uglms;

TEST(ExperimentConfig, Defaults) {
  const ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.iteration_budget(), 200);
  const auto est = c.estimator();
  ASSERT_TRUE(est.measurement_variance.has_value());
  EXPECT_DOUBLE_EQ(*est.measurement_variance, 3.0);
  EXPECT_EQ(est.p0_mismatch_scale, 60.0);
  EXPECT_EQ(est.p0_poly_scale, 96.0);
  EXPECT_EQ(est.alpha, 9.1);
  EXPECT_EQ(est.tau, 0.04);
  EXPECT_EQ(est.n_term, 12);
  EXPECT_EQ(est.expected_unit_sigma, c.sigma_unit);
  EXPECT_DOUBLE_EQ(c.sweep().window_span, 4.0);
}

TEST(ExperimentConfig, BudgetsPerExperiment) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::kConvergence;
  EXPECT_EQ(c.iteration_budget(), 1000);
  c.iterations = 42;
  EXPECT_EQ(c.iteration_budget(), 42);
}

TEST(ExperimentConfig, ParseAndOverride) {
  const auto c = ExperimentConfig::parse(
      "# comment\n"
      "experiment = heatmap\n"
      "n_bits 12\n"
      "alphas = 3, 9.1\n"
      "R = 0.8   # trailing comment\n"
      "inflation_mode = aligned-diagonal\n"
      "stop = trace\n"
      "vary_device = yes\n");
  EXPECT_EQ(c.experiment, ExperimentKind::kHeatmap);
  EXPECT_EQ(c.n_bits, 12);
  EXPECT_EQ(c.alphas, (std::vector<double>{3.0, 9.1}));
  EXPECT_EQ(*c.R, 0.8);
  EXPECT_EQ(*c.estimator().measurement_variance, 0.8);
  EXPECT_EQ(c.inflation_mode, InflationMode::kAlignedDiagonal);
  EXPECT_EQ(c.stop, StopRule::kTraceTermination);
  EXPECT_TRUE(c.vary_device);
}

TEST(ExperimentConfig, CalibratedRWhenScaleIsZero) {
  ExperimentConfig c;
  c.set("r_scale", "0");
  EXPECT_FALSE(c.estimator().measurement_variance.has_value());
  c.set("R", "2.5");
  EXPECT_EQ(*c.estimator().measurement_variance, 2.5);
  c.set("R", "auto");
  EXPECT_FALSE(c.R.has_value());
}

TEST(ExperimentConfig, Errors) {
  ExperimentConfig c;
  EXPECT_THROW(c.set("nonsense", "1"), ConfigError);
  EXPECT_THROW(c.set("n_bits", "twelve"), ConfigError);
  EXPECT_THROW(c.set("n_bits", "12.5"), ConfigError);
  EXPECT_THROW(c.set("inflation_mode", "sideways"), ConfigError);
  EXPECT_THROW(ExperimentConfig::parse("n_bits\n"), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_file("/nonexistent/cfg.txt"), ConfigError);

  auto bad = [](auto mutate) {
    ExperimentConfig x;
    mutate(x);
    EXPECT_THROW(x.validate(), ConfigError);
  };
  bad([](auto& x) { x.n_bits = 0; });
  bad([](auto& x) { x.n_bits = 25; });
  bad([](auto& x) { x.alpha = 0.9; });
  bad([](auto& x) { x.runs = 0; });
  bad([](auto& x) { x.samples = 1; });
  bad([](auto& x) { x.experiment = ExperimentKind::kConvergence; });
  bad([](auto& x) { x.variants = {"gpu"}; });
  bad([](auto& x) { x.taus = {0.0}; });
  bad([](auto& x) { x.r_scale = -1.0; });
}

TEST(ExperimentConfig, TextRoundTrip) {
  ExperimentConfig c;
  c.n_bits = 11;
  c.carrier = {1.0, 0.0, -3.3e-7};
  c.epsilons = {1e-4, 2e-3};
  c.window_span = 6.0;
  c.out_dir = "/tmp/x";
  const auto back = ExperimentConfig::parse(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.carrier, c.carrier);

  const auto path = std::filesystem::temp_directory_path() / "uglms_cfg_test.txt";
  std::ofstream(path) << c.to_text();
  EXPECT_EQ(ExperimentConfig::from_file(path.string()).n_bits, 11);
  std::filesystem::remove(path);
}

TEST(ExperimentConfig, EveryKeyIsSettable) {
  const ExperimentConfig c;
  const auto text = c.to_text();
  for (const auto& k : ExperimentConfig::keys()) {
    if (k == "out" || k == "carrier") continue;  // empty by default
    EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
  }
}

TEST(QuadraticCarrier, PeakInlEqualsBow) {
  const auto p = quadratic_carrier(12, 1.0, 2.0);
  EXPECT_EQ(p.coeffs()[0], 1.0);
  const DeviceUnderTest dev(MismatchVector::ideal(12), p, 0.0);
  double peak = 0.0;
  for (double x : true_inl(dev)) peak = std::max(peak, std::abs(x));
  EXPECT_NEAR(peak, 2.0, 1e-9);
}
