#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "priorreg/errors.hpp"
#include "priorreg/linear.hpp"

namespace priorreg {

/// Outcome of a forced choice between a left (-1) and right (+1) option.
enum class Choice : int { left = -1, tie = 0, right = +1 };

inline Choice choice_from_sign(double s) {
  if (s > 0.0) return Choice::right;
  if (s < 0.0) return Choice::left;
  return Choice::tie;
}

/// 1 for a match, 0 for a mismatch, 0.5 for a tie; the tie credit is the
/// expected accuracy of a fair random pick.
inline double score_choice(Choice c, double y) {
  if (c == Choice::tie) return 0.5;
  return static_cast<double>(static_cast<int>(c)) == y ? 1.0 : 0.0;
}

/// Per-cue training statistics: validities v in [-1, 1], directions
/// q = sign(v), and ascending ranks of |v| forming a permutation of
/// {0, ..., m-1}. Ties in |v| are broken by column index, the lower index
/// taking the lower rank.
struct CueStats {
  Vector validities;
  IntVector directions;
  IntVector ranks;

  Eigen::Index cue_count() const { return validities.size(); }

  Vector directions_real() const { return directions.cast<double>(); }
};

inline void require_ternary(const Matrix& X) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      double v = X(i, j);
      if (v != -1.0 && v != 0.0 && v != 1.0) {
        throw input_error("cue matrix must have entries in {-1, 0, +1}");
      }
    }
  }
}

inline void require_sign_labels(const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != -1.0 && y(i) != 1.0) {
      throw input_error("labels must be -1 or +1");
    }
  }
}

inline void require_ternary_row(const Vector& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) != -1.0 && x(j) != 0.0 && x(j) != 1.0) {
      throw input_error("cue row must have entries in {-1, 0, +1}");
    }
  }
}

/// Cue validity per column: (R - W) / (R + W), counting rows where the cue
/// discriminates (x != 0) and its sign matches (R) or contradicts (W) the
/// label. Never-discriminating cues get validity 0.
inline Vector cue_validities(const Matrix& X, const Vector& y) {
  require_design(X);
  require_response(X, y);
  require_ternary(X);
  require_sign_labels(y);

  Vector v(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    long right = 0;
    long wrong = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double x = X(i, j);
      if (x == 0.0) continue;
      if (x == y(i)) {
        ++right;
      } else {
        ++wrong;
      }
    }
    long total = right + wrong;
    v(j) = total == 0 ? 0.0
                      : static_cast<double>(right - wrong) /
                            static_cast<double>(total);
  }
  return v;
}

inline CueStats cue_stats(const Matrix& X, const Vector& y) {
  CueStats stats;
  stats.validities = cue_validities(X, y);
  const Eigen::Index m = stats.validities.size();

  stats.directions.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double v = stats.validities(j);
    stats.directions(j) = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) {
              double fa = std::abs(stats.validities(a));
              double fb = std::abs(stats.validities(b));
              if (fa != fb) return fa < fb;
              return a < b;
            });
  stats.ranks.resize(m);
  for (Eigen::Index pos = 0; pos < m; ++pos) {
    stats.ranks(order[static_cast<std::size_t>(pos)]) =
        static_cast<int>(pos);
  }
  return stats;
}

/// Tallying: sign of the summed signed votes sign(v_j * x_j).
inline Choice tal_predict(const Vector& x, const CueStats& stats) {
  if (x.size() != stats.cue_count()) {
    throw contract_error("cue row length does not match statistics");
  }
  require_ternary_row(x);
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double vote = stats.validities(j) * x(j);
    total += vote > 0.0 ? 1.0 : (vote < 0.0 ? -1.0 : 0.0);
  }
  return choice_from_sign(total);
}

/// Take-the-best: the highest-|validity| cue that discriminates decides;
/// a tie only when no cue discriminates. Rank order resolves |v| ties.
inline Choice ttb_predict(const Vector& x, const CueStats& stats) {
  if (x.size() != stats.cue_count()) {
    throw contract_error("cue row length does not match statistics");
  }
  require_ternary_row(x);
  int best_rank = -1;
  Eigen::Index best = -1;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) == 0.0) continue;
    if (stats.ranks(j) > best_rank) {
      best_rank = stats.ranks(j);
      best = j;
    }
  }
  if (best < 0) return Choice::tie;
  return choice_from_sign(x(best));
}

enum class HeuristicRule { tal, ttb };

inline Choice heuristic_predict(const Vector& x, const CueStats& stats,
                                HeuristicRule rule) {
  return rule == HeuristicRule::tal ? tal_predict(x, stats)
                                    : ttb_predict(x, stats);
}

/// Mean per-row score of a heuristic on held-out rows (ties scored 0.5).
inline double heuristic_accuracy(const Matrix& X_test, const Vector& y_test,
                                 const CueStats& stats, HeuristicRule rule) {
  if (X_test.rows() == 0) {
    throw input_error("heuristic_accuracy: empty test set");
  }
  require_response(X_test, y_test);
  require_ternary(X_test);
  require_sign_labels(y_test);
  double total = 0.0;
  for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
    total += score_choice(heuristic_predict(X_test.row(i), stats, rule),
                          y_test(i));
  }
  return total / static_cast<double>(X_test.rows());
}

}  // namespace priorreg
