#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "priorreg/csv.hpp"
#include "priorreg/dataset.hpp"
#include "priorreg/entropy.hpp"
#include "priorreg/errors.hpp"
#include "priorreg/heuristics.hpp"
#include "priorreg/logistic.hpp"
#include "priorreg/priors.hpp"
#include "priorreg/rng.hpp"

namespace priorreg {

enum class SolverFamily { linear, logistic };

inline std::string to_string(SolverFamily f) {
  return f == SolverFamily::linear ? "linear" : "logistic";
}

/// Fitted weights closer to the prior than this (sup-norm, relative to the
/// prior scale) are treated as having reached the prior: the data-driven
/// correction left at such penalties is far below estimation noise, and
/// scoring the prior itself realizes the documented limit behavior (zero
/// prior decays to chance, heuristic priors to their heuristics).
inline constexpr double kPriorSnapTolerance = 1e-3;

/// {0} followed by 30 log-spaced penalties in [1e-3, 1e6].
inline std::vector<double> default_theta_grid() {
  std::vector<double> grid;
  grid.push_back(0.0);
  const int points = 30;
  const double lo = std::log10(1e-3), hi = std::log10(1e6);
  for (int k = 0; k < points; ++k) {
    grid.push_back(std::pow(10.0, lo + (hi - lo) * k / (points - 1)));
  }
  return grid;
}

struct SweepConfig {
  std::vector<double> theta_grid = default_theta_grid();
  int train_size = 50;
  int iterations = 1000;
  std::uint64_t seed = 0;
  std::vector<std::string> model_set = {"zero", "tal", "ttb", "permuted_ols"};
  SolverFamily solver = SolverFamily::logistic;

  void validate(Eigen::Index n) const {
    if (theta_grid.empty() || theta_grid.front() != 0.0) {
      throw config_error("theta grid must start at 0");
    }
    for (std::size_t k = 0; k < theta_grid.size(); ++k) {
      if (!(theta_grid[k] >= 0.0) ||
          (k > 0 && theta_grid[k] <= theta_grid[k - 1])) {
        throw config_error("theta grid must be ascending and non-negative");
      }
    }
    if (iterations < 1) throw config_error("iterations must be at least 1");
    if (train_size < 1 || train_size >= n) {
      throw config_error("train size must be in [1, n)");
    }
    if (model_set.empty()) throw config_error("model set is empty");
    for (const auto& m : model_set) {
      if (m != "zero" && m != "tal" && m != "ttb" && m != "permuted_ols") {
        throw config_error("unknown model: " + m);
      }
    }
  }
};

struct ModelCurve {
  std::string model;
  std::vector<double> mean_acc, sd_acc;
  std::vector<double> mean_entropy, sd_entropy;
  double best_theta = 0.0, best_acc = 0.0;
  double worst_theta = 0.0, worst_acc = 0.0;
};

struct BaselineStat {
  std::string model;
  double mean_acc = 0.0, sd_acc = 0.0;
  double mean_entropy = 0.0, sd_entropy = 0.0;
};

struct PenaltySweepResult {
  SweepConfig config;
  Eigen::Index n = 0, m = 0;
  DatasetKind kind = DatasetKind::paired_comparison;
  std::vector<ModelCurve> models;
  std::vector<BaselineStat> baselines;
  /// Fitted priors of the first iteration, kept for provenance.
  nlohmann::json first_iteration_priors;

  const ModelCurve& curve(const std::string& name) const {
    for (const auto& c : models) {
      if (c.model == name) return c;
    }
    throw contract_error("no such model in sweep result: " + name);
  }

  const BaselineStat& baseline(const std::string& name) const {
    for (const auto& b : baselines) {
      if (b.model == name) return b;
    }
    throw contract_error("no such baseline in sweep result: " + name);
  }
};

/// Everything fitted from one training split. Exposed so tests can verify
/// that nothing here depends on test rows.
struct IterationPriors {
  CueStats stats;
  std::vector<std::pair<std::string, PriorSpec>> priors;
};

/// Fits cue statistics and the configured priors on training data only.
/// The permutation stream drives the permuted-OLS control prior.
inline IterationPriors fit_iteration_priors(const Matrix& X_train,
                                            const Vector& y_train,
                                            const SweepConfig& cfg,
                                            Rng& perm_rng) {
  IterationPriors out;
  out.stats = cue_stats(X_train, y_train);
  Vector q = out.stats.directions_real();

  Vector y01(y_train.size());
  for (Eigen::Index i = 0; i < y_train.size(); ++i) {
    y01(i) = y_train(i) > 0 ? 1.0 : 0.0;
  }

  auto scale_along = [&](const Matrix& X) -> std::optional<double> {
    if ((q.array() == 0.0).all()) return std::nullopt;
    try {
      if (cfg.solver == SolverFamily::logistic) {
        return fit_logistic_scale(X, y01, q);
      }
      return fit_shared_scalar(X, y_train, q);
    } catch (const degenerate_error&) {
      return std::nullopt;
    }
  };

  for (const auto& name : cfg.model_set) {
    if (name == "zero") {
      out.priors.emplace_back(name, zero_prior(X_train.cols()));
    } else if (name == "tal") {
      PriorSpec spec = zero_prior(X_train.cols());
      spec.label = "tal";
      auto scale = scale_along(X_train);
      if (scale.has_value()) {
        spec.prior = cfg.solver == SolverFamily::logistic
                         ? Vector(q * std::abs(*scale))
                         : Vector(q * *scale);
      } else {
        spec.degenerate = true;
      }
      out.priors.emplace_back(name, std::move(spec));
    } else if (name == "ttb") {
      PriorSpec spec;
      spec.label = "ttb";
      spec.phi = 2.0;
      spec.transform.resize(X_train.cols());
      for (Eigen::Index j = 0; j < X_train.cols(); ++j) {
        spec.transform(j) = std::pow(2.0, out.stats.ranks(j));
      }
      Matrix X_ttb = spec.apply_transform(X_train);
      auto scale = scale_along(X_ttb);
      if (scale.has_value()) {
        spec.prior = cfg.solver == SolverFamily::logistic
                         ? Vector(q * std::abs(*scale))
                         : Vector(q * *scale);
      } else {
        spec.prior = Vector::Zero(X_train.cols());
        spec.degenerate = true;
      }
      out.priors.emplace_back(name, std::move(spec));
    } else if (name == "permuted_ols") {
      out.priors.emplace_back(name,
                              permuted_ols_prior(X_train, y_train, perm_rng));
    }
  }
  return out;
}

/// Mean 0/1 accuracy of sign(x.w) with 0.5 credit on an exactly zero score.
inline double weight_accuracy(const Matrix& X_test, const Vector& y_test,
                              const Vector& w) {
  if (X_test.rows() == 0) throw input_error("empty test set");
  double total = 0.0;
  Vector scores = X_test * w;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    total += score_choice(choice_from_sign(scores(i)), y_test(i));
  }
  return total / static_cast<double>(X_test.rows());
}

/// Returns the prior itself once the fit is numerically indistinguishable
/// from it; otherwise the fitted weights unchanged.
inline Vector effective_weights(const Vector& fitted, const Vector& prior) {
  double dist = (fitted - prior).lpNorm<Eigen::Infinity>();
  if (dist <= kPriorSnapTolerance *
                  (1.0 + prior.lpNorm<Eigen::Infinity>())) {
    return prior;
  }
  return fitted;
}

namespace detail {

struct RunningStat {
  double sum = 0.0, sumsq = 0.0;
  long count = 0;

  void add(double v) {
    if (std::isnan(v)) return;
    sum += v;
    sumsq += v * v;
    ++count;
  }
  double mean() const {
    return count > 0 ? sum / static_cast<double>(count)
                     : std::numeric_limits<double>::quiet_NaN();
  }
  double sd() const {
    if (count < 2) return count == 1 ? 0.0
                                     : std::numeric_limits<double>::quiet_NaN();
    double m = mean();
    double var = (sumsq - static_cast<double>(count) * m * m) /
                 static_cast<double>(count - 1);
    return std::sqrt(std::max(var, 0.0));
  }
};

inline std::pair<std::vector<int>, std::vector<int>> split_indices(
    Eigen::Index n, int train_size, const Vector& y, DatasetKind kind,
    Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> train =
        rng.sample_indices(static_cast<int>(n), train_size);
    std::sort(train.begin(), train.end());
    if (kind == DatasetKind::classification) {
      bool pos = false, neg = false;
      for (int i : train) {
        if (y(i) > 0) pos = true;
        if (y(i) < 0) neg = true;
      }
      if (!pos || !neg) continue;  // single-class draw, try again
    }
    std::vector<int> test;
    test.reserve(static_cast<std::size_t>(n) - train.size());
    std::size_t t = 0;
    for (int i = 0; i < static_cast<int>(n); ++i) {
      if (t < train.size() && train[t] == i) {
        ++t;
      } else {
        test.push_back(i);
      }
    }
    return {std::move(train), std::move(test)};
  }
  throw input_error(
      "could not draw a training set containing both classes in 1000 tries");
}

inline Matrix take_rows(const Matrix& X, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  }
  return out;
}

inline Vector take(const Vector& y, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(idx[i]);
  }
  return out;
}

}  // namespace detail

/// Monte-Carlo penalty sweep: repeatedly split into train/test, fit cue
/// statistics, priors and transforms on the training rows, fit every model
/// across the penalty grid (warm-started along the grid), and score held-out
/// accuracy and normalized entropy. Deterministic given the seed.
inline PenaltySweepResult run_sweep(const TernaryDataset& data,
                                    const SweepConfig& cfg) {
  cfg.validate(data.size());
  require_ternary(data.X);
  require_sign_labels(data.y);

  const auto n_theta = cfg.theta_grid.size();
  const auto n_models = cfg.model_set.size();

  std::vector<std::vector<detail::RunningStat>> acc(
      n_models, std::vector<detail::RunningStat>(n_theta));
  std::vector<std::vector<detail::RunningStat>> ent(
      n_models, std::vector<detail::RunningStat>(n_theta));
  std::map<std::string, detail::RunningStat> base_acc;
  std::map<std::string, detail::RunningStat> base_ent;

  PenaltySweepResult result;
  result.config = cfg;
  result.n = data.size();
  result.m = data.cue_count();
  result.kind = data.kind;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    Rng split_rng(cfg.seed, {1, static_cast<std::uint64_t>(iter)});
    auto [train_idx, test_idx] = detail::split_indices(
        data.size(), cfg.train_size, data.y, data.kind, split_rng);
    Matrix X_train = detail::take_rows(data.X, train_idx);
    Vector y_train = detail::take(data.y, train_idx);
    Matrix X_test = detail::take_rows(data.X, test_idx);
    Vector y_test = detail::take(data.y, test_idx);

    Rng perm_rng(cfg.seed, {2, static_cast<std::uint64_t>(iter)});
    IterationPriors ip =
        fit_iteration_priors(X_train, y_train, cfg, perm_rng);
    if (iter == 0) {
      nlohmann::json priors = nlohmann::json::array();
      for (const auto& [name, spec] : ip.priors) priors.push_back(to_json(spec));
      result.first_iteration_priors = priors;
    }

    Vector y01(y_train.size());
    for (Eigen::Index i = 0; i < y_train.size(); ++i) {
      y01(i) = y_train(i) > 0 ? 1.0 : 0.0;
    }

    for (std::size_t mi = 0; mi < n_models; ++mi) {
      const PriorSpec& spec = ip.priors[mi].second;
      Matrix X_tr = spec.apply_transform(X_train);
      Matrix X_te = spec.apply_transform(X_test);
      double phi = spec.label == "ttb" ? spec.phi : 1.0;

      Vector warm = Vector::Zero(X_tr.cols());
      for (std::size_t k = 0; k < n_theta; ++k) {
        double theta = cfg.theta_grid[k];
        Vector w;
        if (cfg.solver == SolverFamily::logistic) {
          auto [fit, trace] =
              fit_logistic_ridge({X_tr, y01, spec.prior, theta}, warm);
          w = std::move(fit);
          warm = w;
        } else {
          w = solve_ridge_with_prior({X_tr, y_train, spec.prior, theta});
        }
        Vector w_eff = effective_weights(w, spec.prior);
        acc[mi][k].add(weight_accuracy(X_te, y_test, w_eff));
        try {
          ent[mi][k].add(normalized_entropy(w, ip.stats.ranks, phi));
        } catch (const degenerate_error&) {
          // all-zero fit carries no entropy; skip this iteration's sample
        }
      }
    }

    // reference points: plain OLS and the raw heuristics
    Vector w_ols = solve_ols(X_train, y_train);
    base_acc["ols"].add(weight_accuracy(X_test, y_test, w_ols));
    try {
      base_ent["ols"].add(normalized_entropy(w_ols, ip.stats.ranks, 1.0));
    } catch (const degenerate_error&) {
    }
    base_acc["tal_heuristic"].add(
        heuristic_accuracy(X_test, y_test, ip.stats, HeuristicRule::tal));
    base_acc["ttb_heuristic"].add(
        heuristic_accuracy(X_test, y_test, ip.stats, HeuristicRule::ttb));
    Vector q = ip.stats.directions_real();
    if (!(q.array() == 0.0).all()) {
      base_ent["tal_heuristic"].add(
          normalized_entropy(q, ip.stats.ranks, 1.0));
      base_ent["ttb_heuristic"].add(
          normalized_entropy(q, ip.stats.ranks, 2.0));
    }
  }

  for (std::size_t mi = 0; mi < n_models; ++mi) {
    ModelCurve curve;
    curve.model = cfg.model_set[mi];
    curve.best_acc = -1.0;
    curve.worst_acc = 2.0;
    for (std::size_t k = 0; k < n_theta; ++k) {
      double ma = acc[mi][k].mean();
      curve.mean_acc.push_back(ma);
      curve.sd_acc.push_back(acc[mi][k].sd());
      curve.mean_entropy.push_back(ent[mi][k].mean());
      curve.sd_entropy.push_back(ent[mi][k].sd());
      if (ma > curve.best_acc) {
        curve.best_acc = ma;
        curve.best_theta = cfg.theta_grid[k];
      }
      if (ma < curve.worst_acc) {
        curve.worst_acc = ma;
        curve.worst_theta = cfg.theta_grid[k];
      }
    }
    result.models.push_back(std::move(curve));
  }
  for (const char* name : {"ols", "tal_heuristic", "ttb_heuristic"}) {
    BaselineStat stat;
    stat.model = name;
    stat.mean_acc = base_acc[name].mean();
    stat.sd_acc = base_acc[name].sd();
    stat.mean_entropy = base_ent[name].mean();
    stat.sd_entropy = base_ent[name].sd();
    result.baselines.push_back(std::move(stat));
  }
  return result;
}

inline void write_sweep_csv(const PenaltySweepResult& result,
                            std::ostream& out) {
  out << "model,theta,mean_acc,sd_acc,mean_entropy,sd_entropy\n";
  for (const auto& curve : result.models) {
    for (std::size_t k = 0; k < result.config.theta_grid.size(); ++k) {
      out << curve.model << ',' << format_double(result.config.theta_grid[k])
          << ',' << format_double(curve.mean_acc[k]) << ','
          << format_double(curve.sd_acc[k]) << ','
          << format_double(curve.mean_entropy[k]) << ','
          << format_double(curve.sd_entropy[k]) << '\n';
    }
  }
  for (const auto& b : result.baselines) {
    out << b.model << ",," << format_double(b.mean_acc) << ','
        << format_double(b.sd_acc) << ',' << format_double(b.mean_entropy)
        << ',' << format_double(b.sd_entropy) << '\n';
  }
}

inline nlohmann::json sweep_summary_json(const PenaltySweepResult& result) {
  nlohmann::json j;
  j["config"] = {
      {"theta_grid", result.config.theta_grid},
      {"train_size", result.config.train_size},
      {"iterations", result.config.iterations},
      {"seed", result.config.seed},
      {"model_set", result.config.model_set},
      {"solver", to_string(result.config.solver)},
  };
  j["dataset"] = {
      {"rows", result.n},
      {"cues", result.m},
      {"kind", result.kind == DatasetKind::paired_comparison
                   ? "paired_comparison"
                   : "classification"},
  };
  nlohmann::json models = nlohmann::json::object();
  for (const auto& c : result.models) {
    models[c.model] = {
        {"best_theta", c.best_theta},
        {"best_acc", c.best_acc},
        {"worst_theta", c.worst_theta},
        {"worst_acc", c.worst_acc},
    };
  }
  j["models"] = models;
  nlohmann::json baselines = nlohmann::json::object();
  for (const auto& b : result.baselines) {
    baselines[b.model] = {{"mean_acc", b.mean_acc}, {"sd_acc", b.sd_acc}};
  }
  j["baselines"] = baselines;
  j["first_iteration_priors"] = result.first_iteration_priors;
  return j;
}

}  // namespace priorreg
