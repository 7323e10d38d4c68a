#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "uglms/harness.hpp"

using namespace uglms;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("uglms_harness_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.n_bits = 10;
  c.samples = 64;
  c.iterations = 60;
  c.runs = 4;
  c.error_every = 20;
  return c;
}

}  // namespace

TEST(Percentile, NearestRank) {
  EXPECT_EQ(percentile({3.0, 1.0}, 0.1), 1.0);
  EXPECT_EQ(percentile({3.0, 1.0}, 0.9), 3.0);
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(i);
  EXPECT_EQ(percentile(v, 0.1), 1.0);
  EXPECT_EQ(percentile(v, 0.9), 9.0);
  EXPECT_EQ(percentile(v, 0.0), 1.0);
  EXPECT_EQ(percentile(v, 1.0), 10.0);
  EXPECT_THROW(percentile({}, 0.5), std::invalid_argument);
  const auto b = summarize(v);
  EXPECT_DOUBLE_EQ(b.mean, 5.5);
  EXPECT_LE(b.p10, b.p90);
}

TEST(RunBatch, WorkerCountDoesNotChangeResults) {
  auto c = small_config(ExperimentKind::kConvergence);
  const auto est = c.estimator();
  RunOptions opt;
  c.workers = 1;
  const auto a = run_batch(c, est, opt);
  c.workers = 3;
  const auto b = run_batch(c, est, opt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].theta_hat, b[i].theta_hat);
  EXPECT_NE(a[0].theta_hat, a[1].theta_hat);
}

TEST(Single, WritesDeterministicFiles) {
  auto c = small_config(ExperimentKind::kSingle);
  const auto d1 = scratch("single1");
  const auto d2 = scratch("single2");
  c.out_dir = d1.string();
  const auto rep = run_single(c);
  c.out_dir = d2.string();
  run_single(c);
  for (const char* f : {"true_inl.dat", "est_inl.dat", "diff_inl.dat", "true_dnl.dat", "est_dnl.dat", "diff_dnl.dat",
                        "history.dat", "device.txt", "final_state.txt", "summary.csv"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  EXPECT_EQ(rep.result.iterations, 60);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Single, IdealDeviceDiffIsTiny) {
  auto c = small_config(ExperimentKind::kSingle);
  c.sigma_unit = 0.0;
  c.noise_sigma = 0.0;
  c.iterations = 50;
  const auto rep = run_single(c);
  EXPECT_LT(rep.result.dinl_max, 0.01);
  EXPECT_LT(rep.result.ddnl_max, 0.01);
}

TEST(Convergence, TwoRunsDegenerateToMinMax) {
  auto c = small_config(ExperimentKind::kConvergence);
  c.runs = 2;
  const auto rep = run_convergence(c);
  ASSERT_EQ(rep.series.size(), 2u);
  EXPECT_EQ(rep.series[0].mode, "uniform");
  EXPECT_EQ(rep.series[1].mode, "aligned-full");
  for (const auto& s : rep.series) {
    for (std::size_t k = 0; k < s.iterations.size(); ++k) {
      const double a = s.run_inl[0][k];
      const double b = s.run_inl[1][k];
      EXPECT_EQ(s.inl[k].p10, std::min(a, b));
      EXPECT_EQ(s.inl[k].p90, std::max(a, b));
    }
  }
}

TEST(Convergence, MeanMatchesOfflineReaggregation) {
  auto c = small_config(ExperimentKind::kConvergence);
  const auto dir = scratch("conv");
  c.out_dir = dir.string();
  const auto rep = run_convergence(c);
  // Re-aggregate from the per-run CSV.
  std::ifstream runs(dir / "runs_uniform.csv");
  std::string line;
  std::getline(runs, line);
  std::map<int, std::vector<double>> by_iter;
  while (std::getline(runs, line)) {
    std::stringstream ss(line);
    std::string run;
    std::string it;
    std::string dinl;
    std::getline(ss, run, ',');
    std::getline(ss, it, ',');
    std::getline(ss, dinl, ',');
    by_iter[std::stoi(it)].push_back(std::stod(dinl));
  }
  const auto& s = rep.series[0];
  ASSERT_EQ(by_iter.size(), s.iterations.size());
  for (std::size_t k = 0; k < s.iterations.size(); ++k) {
    const auto& v = by_iter[s.iterations[k]];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    EXPECT_NEAR(mean, s.inl[k].mean, 1e-12);
  }
  EXPECT_TRUE(fs::exists(dir / "mean_inl_aligned-full.dat"));
  EXPECT_TRUE(fs::exists(dir / "p90_dnl_uniform.dat"));
  fs::remove_all(dir);
}

TEST(Heatmap, SingleCellMatchesConvergenceFinalMean) {
  auto h = small_config(ExperimentKind::kHeatmap);
  h.alphas = {h.alpha};
  h.taus = {h.tau};
  h.error_every = 0;
  const auto cells = run_heatmap(h).cells;
  ASSERT_EQ(cells.size(), 1u);

  auto c = small_config(ExperimentKind::kConvergence);
  const auto conv = run_convergence(c);
  EXPECT_NEAR(cells[0].mean_dinl, conv.series[1].inl.back().mean, 1e-12);
}

TEST(Heatmap, GridFileMatchesRunResults) {
  auto h = small_config(ExperimentKind::kHeatmap);
  h.alphas = {3.0, 9.1};
  h.taus = {0.04, 0.1};
  h.runs = 2;
  const auto dir = scratch("heat");
  h.out_dir = dir.string();
  const auto rep = run_heatmap(h);
  ASSERT_EQ(rep.cells.size(), 4u);
  std::ifstream f(dir / "heatmap.dat");
  for (const auto& cell : rep.cells) {
    double a = 0.0;
    double t = 0.0;
    double e = 0.0;
    f >> a >> t >> e;
    EXPECT_EQ(a, cell.alpha);
    EXPECT_EQ(t, cell.tau);
    EXPECT_DOUBLE_EQ(e, (cell.run_dinl[0] + cell.run_dinl[1]) / 2.0);
  }
  fs::remove_all(dir);
}

TEST(Epsilon, HugeEpsilonStopsAtNTerm) {
  auto c = small_config(ExperimentKind::kEpsilon);
  c.epsilons = {1e3};
  c.iterations = 500;
  const auto rep = run_epsilon(c);
  for (const auto& r : rep.studies[0].runs) {
    EXPECT_TRUE(r.terminated);
    EXPECT_EQ(r.iterations, c.n_term);
  }
  EXPECT_EQ(rep.studies[0].not_converged, 0);
}

TEST(Epsilon, SmallerEpsilonNeverStopsEarlier) {
  auto c = small_config(ExperimentKind::kEpsilon);
  c.epsilons = {3e-3, 1e-3, 3e-4};
  c.iterations = 400;
  const auto rep = run_epsilon(c);
  for (std::size_t e = 1; e < rep.studies.size(); ++e) {
    for (std::size_t r = 0; r < rep.studies[e].runs.size(); ++r) {
      EXPECT_GE(rep.studies[e].runs[r].iterations, rep.studies[e - 1].runs[r].iterations);
    }
    EXPECT_GE(rep.studies[e].iterations.mean, rep.studies[e - 1].iterations.mean);
  }
}

TEST(Timing, RowsForEveryCell) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::kTiming;
  c.resolutions = {8, 10};
  c.iterations = 20;
  const auto dir = scratch("timing");
  c.out_dir = dir.string();
  const auto rep = run_timing(c);
  ASSERT_EQ(rep.rows.size(), 6u);
  const auto* dense = rep.find(10, "dense-baseline");
  const auto* rank1 = rep.find(10, "rank1");
  ASSERT_TRUE(dense && rank1);
  EXPECT_EQ(dense->speedup_vs_dense, 1.0);
  EXPECT_GT(rank1->ops_ratio_vs_dense, 1.0);
  EXPECT_EQ(rank1->iterations, 20);
  EXPECT_EQ(rep.find(12, "rank1"), nullptr);
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  fs::remove_all(dir);
}
