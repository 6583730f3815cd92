#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "priorreg/sweep.hpp"
#include "support/synthetic.hpp"

using namespace priorreg;

namespace {

SweepConfig small_config(SolverFamily solver, int iterations = 20) {
  SweepConfig cfg;
  cfg.theta_grid = {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e6};
  cfg.train_size = 50;
  cfg.iterations = iterations;
  cfg.seed = 99;
  cfg.solver = solver;
  return cfg;
}

}  // namespace

TEST_CASE("config validation", "[sweep]") {
  TernaryDataset data = synthetic::planted_paired_dataset(1, 20, 4);
  SweepConfig cfg = small_config(SolverFamily::linear, 2);

  SECTION("grid must start at zero") {
    cfg.theta_grid = {0.1, 1.0};
    REQUIRE_THROWS_AS(run_sweep(data, cfg), config_error);
  }
  SECTION("grid must ascend") {
    cfg.theta_grid = {0.0, 1.0, 0.5};
    REQUIRE_THROWS_AS(run_sweep(data, cfg), config_error);
  }
  SECTION("train size must leave test rows") {
    cfg.train_size = static_cast<int>(data.size());
    REQUIRE_THROWS_AS(run_sweep(data, cfg), config_error);
  }
  SECTION("unknown model name") {
    cfg.model_set = {"zero", "mystery"};
    REQUIRE_THROWS_AS(run_sweep(data, cfg), config_error);
  }
}

TEST_CASE("linear sweep at theta zero matches OLS for every model",
          "[sweep]") {
  TernaryDataset data = synthetic::planted_paired_dataset(7, 25, 5);
  SweepConfig cfg = small_config(SolverFamily::linear, 6);
  PenaltySweepResult result = run_sweep(data, cfg);

  // at theta = 0 the penalty and the transform are both irrelevant, so all
  // four model curves must open at the same accuracy (exact equality would
  // need identical fitted weights; the transform is absorbed up to rounding,
  // so compare at solver precision)
  double ref = result.curve("zero").mean_acc[0];
  for (const auto& name : {"tal", "ttb", "permuted_ols"}) {
    REQUIRE(result.curve(name).mean_acc[0] == Catch::Approx(ref).margin(1e-9));
  }
}

TEST_CASE("prior-convergence behavior at the top of the grid", "[sweep]") {
  TernaryDataset data = synthetic::planted_paired_dataset(21, 30, 5);
  SweepConfig cfg = small_config(SolverFamily::logistic, 15);
  PenaltySweepResult result = run_sweep(data, cfg);
  std::size_t last = cfg.theta_grid.size() - 1;

  SECTION("zero prior decays to chance") {
    REQUIRE(result.curve("zero").mean_acc[last] == Catch::Approx(0.5));
  }

  SECTION("tal prior reaches the tallying accuracy") {
    double model = result.curve("tal").mean_acc[last];
    double heuristic = result.baseline("tal_heuristic").mean_acc;
    REQUIRE(std::abs(model - heuristic) < 0.005);
  }

  SECTION("ttb prior reaches the take-the-best accuracy") {
    double model = result.curve("ttb").mean_acc[last];
    double heuristic = result.baseline("ttb_heuristic").mean_acc;
    REQUIRE(std::abs(model - heuristic) < 0.02);
  }

  SECTION("tal entropy approaches one at the top") {
    REQUIRE(result.curve("tal").mean_entropy[last] > 0.99);
  }
}

TEST_CASE("sweep is deterministic given the seed", "[sweep]") {
  TernaryDataset data = synthetic::planted_paired_dataset(3, 20, 4);
  SweepConfig cfg = small_config(SolverFamily::logistic, 5);
  PenaltySweepResult a = run_sweep(data, cfg);
  PenaltySweepResult b = run_sweep(data, cfg);
  std::ostringstream csv_a, csv_b;
  write_sweep_csv(a, csv_a);
  write_sweep_csv(b, csv_b);
  REQUIRE(csv_a.str() == csv_b.str());

  SweepConfig other = cfg;
  other.seed = cfg.seed + 1;
  PenaltySweepResult c = run_sweep(data, other);
  std::ostringstream csv_c;
  write_sweep_csv(c, csv_c);
  REQUIRE(csv_a.str() != csv_c.str());
}

TEST_CASE("priors depend on training rows only", "[sweep]") {
  TernaryDataset data = synthetic::planted_paired_dataset(13, 25, 5);
  SweepConfig cfg = small_config(SolverFamily::logistic, 1);

  Rng split_rng(cfg.seed, {1, 0});
  auto [train_idx, test_idx] = [&] {
    std::vector<int> train = split_rng.sample_indices(
        static_cast<int>(data.size()), cfg.train_size);
    std::sort(train.begin(), train.end());
    std::vector<int> test;
    std::size_t t = 0;
    for (int i = 0; i < static_cast<int>(data.size()); ++i) {
      if (t < train.size() && train[t] == i) {
        ++t;
      } else {
        test.push_back(i);
      }
    }
    return std::make_pair(train, test);
  }();

  Matrix X_train(static_cast<Eigen::Index>(train_idx.size()), data.cue_count());
  Vector y_train(static_cast<Eigen::Index>(train_idx.size()));
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    X_train.row(static_cast<Eigen::Index>(i)) = data.X.row(train_idx[i]);
    y_train(static_cast<Eigen::Index>(i)) = data.y(train_idx[i]);
  }

  Rng perm_a(cfg.seed, {2, 0});
  IterationPriors before = fit_iteration_priors(X_train, y_train, cfg, perm_a);

  // corrupt every test row, rebuild the training slice, and refit
  TernaryDataset corrupted = data;
  for (int i : test_idx) {
    for (Eigen::Index j = 0; j < corrupted.cue_count(); ++j) {
      corrupted.X(i, j) = -corrupted.X(i, j);
    }
    corrupted.y(i) = -corrupted.y(i);
  }
  Matrix X_train2(static_cast<Eigen::Index>(train_idx.size()),
                  corrupted.cue_count());
  Vector y_train2(static_cast<Eigen::Index>(train_idx.size()));
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    X_train2.row(static_cast<Eigen::Index>(i)) = corrupted.X.row(train_idx[i]);
    y_train2(static_cast<Eigen::Index>(i)) = corrupted.y(train_idx[i]);
  }
  Rng perm_b(cfg.seed, {2, 0});
  IterationPriors after = fit_iteration_priors(X_train2, y_train2, cfg, perm_b);

  REQUIRE(before.priors.size() == after.priors.size());
  for (std::size_t k = 0; k < before.priors.size(); ++k) {
    REQUIRE(before.priors[k].first == after.priors[k].first);
    REQUIRE(before.priors[k].second.prior == after.priors[k].second.prior);
    REQUIRE(before.priors[k].second.transform ==
            after.priors[k].second.transform);
  }
  REQUIRE(before.stats.validities == after.stats.validities);
}

TEST_CASE("classification sweeps resample single-class training draws",
          "[sweep]") {
  // two rare positives out of 30: plain draws of 10 items frequently miss
  // them, so the resampling path is exercised
  TernaryDataset data;
  data.kind = DatasetKind::classification;
  data.X = Matrix::Zero(30, 3);
  data.y = Vector::Constant(30, -1.0);
  Rng fill(5);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 3; ++j) {
      data.X(i, j) = static_cast<double>(fill.uniform_int(-1, 1));
    }
  }
  data.y(4) = 1.0;
  data.y(17) = 1.0;
  data.cue_names = {"a", "b", "c"};

  SweepConfig cfg = small_config(SolverFamily::logistic, 8);
  cfg.train_size = 10;
  PenaltySweepResult result = run_sweep(data, cfg);  // must not throw
  REQUIRE(result.models.size() == 4);

  SECTION("a dataset with a single class exhausts the resample budget") {
    TernaryDataset hopeless = data;
    hopeless.y.setConstant(-1.0);
    REQUIRE_THROWS_AS(run_sweep(hopeless, cfg), input_error);
  }
}

TEST_CASE("csv writer emits one row per model and penalty", "[sweep]") {
  TernaryDataset data = synthetic::planted_paired_dataset(31, 20, 4);
  SweepConfig cfg = small_config(SolverFamily::logistic, 3);
  PenaltySweepResult result = run_sweep(data, cfg);
  std::ostringstream out;
  write_sweep_csv(result, out);
  std::string csv = out.str();
  std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  // header + models x grid + 3 baselines
  REQUIRE(lines == 1 + cfg.model_set.size() * cfg.theta_grid.size() + 3);

  nlohmann::json summary = sweep_summary_json(result);
  REQUIRE(summary["models"].contains("tal"));
  REQUIRE(summary["first_iteration_priors"].size() == 4);
}
