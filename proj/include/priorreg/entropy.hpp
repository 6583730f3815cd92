#pragma once

#include <cmath>

#include "priorreg/errors.hpp"
#include "priorreg/linear.hpp"

namespace priorreg {

/// Normalized Shannon entropy of the rescaled absolute weights
/// w~_j = (|w_j| / ||w||_1) * phi^rank_j, renormalized to sum to one, with
/// 0 log 0 = 0 and the result divided by log2(m) so it lies in [0, 1].
/// Measures how compensatory a solution is: 1 for uniform predictive force,
/// 0 for a single dominant weight. A single-predictor vector is trivially
/// uniform and scores 1.
inline double normalized_entropy(const Vector& w, const IntVector& ranks,
                                 double phi) {
  const Eigen::Index m = w.size();
  if (m < 1) throw contract_error("normalized_entropy: empty weight vector");
  if (ranks.size() != m) {
    throw contract_error("normalized_entropy: rank length mismatch");
  }
  if (!(phi > 0.0)) throw input_error("normalized_entropy: phi must be positive");
  require_finite(w, "weights");

  double l1 = w.cwiseAbs().sum();
  if (l1 == 0.0) {
    throw degenerate_error("normalized_entropy: all-zero weight vector");
  }
  if (m == 1) return 1.0;

  Vector scaled(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    scaled(j) = (std::abs(w(j)) / l1) * std::pow(phi, ranks(j));
  }
  double total = scaled.sum();

  double h = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    double p = scaled(j) / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(m));
}

}  // namespace priorreg
