#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "priorreg/errors.hpp"
#include "priorreg/heuristics.hpp"
#include "priorreg/linear.hpp"
#include "priorreg/rng.hpp"

namespace priorreg {

/// A prior weight vector together with the diagonal design transform that
/// must accompany it. The transform is all ones except for the geometric
/// rank scaling used by the take-the-best prior; storing it here keeps
/// train- and test-time designs consistent by construction.
struct PriorSpec {
  Vector prior;
  Vector transform;
  double phi = 1.0;
  std::string label;
  bool degenerate = false;

  Eigen::Index size() const { return prior.size(); }

  bool has_identity_transform() const {
    return (transform.array() == 1.0).all();
  }

  /// Applies the stored column scaling to a design matrix.
  Matrix apply_transform(const Matrix& X) const {
    if (X.cols() != transform.size()) {
      throw contract_error("transform length does not match design columns");
    }
    if (has_identity_transform()) return X;
    return X * transform.asDiagonal();
  }
};

inline PriorSpec zero_prior(Eigen::Index m) {
  if (m < 1) throw contract_error("zero_prior: need at least one predictor");
  PriorSpec spec;
  spec.prior = Vector::Zero(m);
  spec.transform = Vector::Ones(m);
  spec.phi = 1.0;
  spec.label = "zero";
  return spec;
}

/// Tallying prior: one shared least-squares scalar along the cue
/// directions, q * scale. An all-zero direction vector degrades to the
/// zero prior with the degenerate flag set.
inline PriorSpec tal_prior(const Matrix& X, const Vector& y,
                           const CueStats& stats) {
  if (stats.cue_count() != X.cols()) {
    throw contract_error("cue statistics do not match design columns");
  }
  PriorSpec spec;
  spec.transform = Vector::Ones(X.cols());
  spec.phi = 1.0;
  spec.label = "tal";
  Vector q = stats.directions_real();
  if ((q.array() == 0.0).all()) {
    spec.prior = Vector::Zero(X.cols());
    spec.degenerate = true;
    return spec;
  }
  double scale = 0.0;
  try {
    scale = fit_shared_scalar(X, y, q);
  } catch (const degenerate_error&) {
    // X*q can vanish even with nonzero q; treat as no usable direction.
    spec.prior = Vector::Zero(X.cols());
    spec.degenerate = true;
    return spec;
  }
  spec.prior = q * scale;
  return spec;
}

/// Column scaling X * diag(phi^rank): encodes the validity order into the
/// design as a geometric progression. phi = 1 leaves X unchanged.
inline Matrix ttb_transform(const Matrix& X, const CueStats& stats,
                            double phi = 2.0) {
  require_design(X);
  if (stats.cue_count() != X.cols()) {
    throw contract_error("cue statistics do not match design columns");
  }
  if (!(phi > 0.0)) throw input_error("ttb_transform: phi must be positive");
  Vector scales(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    scales(j) = std::pow(phi, stats.ranks(j));
  }
  return X * scales.asDiagonal();
}

/// Take-the-best prior. The shared scalar is fitted on the rank-scaled
/// design, and the returned transform must be applied to every design
/// (train and test) the prior is used with.
inline std::pair<PriorSpec, Matrix> ttb_prior(const Matrix& X, const Vector& y,
                                              const CueStats& stats,
                                              double phi = 2.0) {
  Matrix X_ttb = ttb_transform(X, stats, phi);
  PriorSpec spec;
  spec.phi = phi;
  spec.label = "ttb";
  spec.transform.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    spec.transform(j) = std::pow(phi, stats.ranks(j));
  }
  Vector q = stats.directions_real();
  if ((q.array() == 0.0).all()) {
    spec.prior = Vector::Zero(X.cols());
    spec.degenerate = true;
    return {std::move(spec), std::move(X_ttb)};
  }
  double scale = 0.0;
  try {
    scale = fit_shared_scalar(X_ttb, y, q);
  } catch (const degenerate_error&) {
    spec.prior = Vector::Zero(X.cols());
    spec.degenerate = true;
    return {std::move(spec), std::move(X_ttb)};
  }
  spec.prior = q * scale;
  return {std::move(spec), std::move(X_ttb)};
}

/// Control prior: a uniformly random permutation of the OLS coefficients.
inline PriorSpec permuted_ols_prior(const Matrix& X, const Vector& y,
                                    Rng& rng) {
  Vector ols = solve_ols(X, y);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ols.size()));
  for (Eigen::Index j = 0; j < ols.size(); ++j) {
    order[static_cast<std::size_t>(j)] = j;
  }
  rng.shuffle(order);
  PriorSpec spec;
  spec.prior.resize(ols.size());
  for (Eigen::Index j = 0; j < ols.size(); ++j) {
    spec.prior(j) = ols(order[static_cast<std::size_t>(j)]);
  }
  spec.transform = Vector::Ones(ols.size());
  spec.phi = 1.0;
  spec.label = "permuted_ols";
  return spec;
}

inline nlohmann::json to_json(const PriorSpec& spec) {
  nlohmann::json j;
  j["label"] = spec.label;
  j["prior"] = std::vector<double>(spec.prior.begin(), spec.prior.end());
  j["transform"] =
      std::vector<double>(spec.transform.begin(), spec.transform.end());
  j["phi"] = spec.phi;
  j["degenerate"] = spec.degenerate;
  return j;
}

inline PriorSpec prior_spec_from_json(const nlohmann::json& j) {
  PriorSpec spec;
  auto prior = j.at("prior").get<std::vector<double>>();
  auto transform = j.at("transform").get<std::vector<double>>();
  spec.prior = Eigen::Map<const Vector>(prior.data(),
                                        static_cast<Eigen::Index>(prior.size()));
  spec.transform = Eigen::Map<const Vector>(
      transform.data(), static_cast<Eigen::Index>(transform.size()));
  spec.phi = j.at("phi").get<double>();
  spec.label = j.at("label").get<std::string>();
  spec.degenerate = j.value("degenerate", false);
  return spec;
}

}  // namespace priorreg
