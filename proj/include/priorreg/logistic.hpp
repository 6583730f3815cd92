#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "priorreg/errors.hpp"
#include "priorreg/linear.hpp"
#include "priorreg/priors.hpp"

namespace priorreg {

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

inline void require_binary_labels(const Vector& y01) {
  for (Eigen::Index i = 0; i < y01.size(); ++i) {
    if (y01(i) != 0.0 && y01(i) != 1.0) {
      throw input_error("logistic labels must be 0 or 1");
    }
  }
}

/// Penalized logistic problem: maximize the log-likelihood minus
/// (theta / 2) * ||w - prior||^2.
struct LogisticProblem {
  Matrix X;
  Vector y01;
  Vector prior;
  double theta = 0.0;
};

struct NewtonTrace {
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool converged = false;
  /// Objective value after each accepted step, starting value first.
  std::vector<double> objective_path;
};

inline double log_likelihood(const Matrix& X, const Vector& y01,
                             const Vector& w) {
  Vector z = X * w;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    ll += y01(i) * z(i) - softplus(z(i));
  }
  return ll;
}

/// Maximum-likelihood scalar along direction q: argmax_w Pr[y | X, w q].
/// A ridge jitter of 1e-4 on the scalar keeps the optimum finite when the
/// collapsed problem is separable.
inline double fit_logistic_scale(const Matrix& X, const Vector& y01,
                                 const Vector& q) {
  require_design(X);
  require_response(X, y01);
  require_binary_labels(y01);
  if (q.size() != X.cols()) {
    throw contract_error("direction length does not match design columns");
  }
  constexpr double jitter = 1e-4;

  Vector z = X * q;
  if (z.squaredNorm() == 0.0) {
    throw degenerate_error("collapsed design X*q is the zero vector");
  }

  auto objective = [&](double w) {
    double val = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double u = w * z(i);
      val += y01(i) * u - softplus(u);
    }
    return val - 0.5 * jitter * w * w;
  };

  double w = 0.0;
  double f = objective(w);
  for (int iter = 0; iter < 100; ++iter) {
    double grad = -jitter * w;
    double hess = -jitter;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double p = sigmoid(w * z(i));
      grad += z(i) * (y01(i) - p);
      hess -= z(i) * z(i) * p * (1.0 - p);
    }
    if (std::abs(grad) < 1e-10 * (1.0 + static_cast<double>(z.size()))) break;
    double step = -grad / hess;
    double alpha = 1.0;
    double w_new = w + step;
    double f_new = objective(w_new);
    int halvings = 0;
    while (f_new < f && halvings < 60) {
      alpha *= 0.5;
      w_new = w + alpha * step;
      f_new = objective(w_new);
      ++halvings;
    }
    if (f_new < f) break;
    w = w_new;
    f = f_new;
  }
  return w;
}

/// Prior along the cue directions with the magnitude of the fitted scale:
/// prior_j = q_j * |scale|.
inline PriorSpec logistic_prior(double scale, const Vector& q,
                                const std::string& label = "logistic") {
  PriorSpec spec;
  spec.prior = q * std::abs(scale);
  spec.transform = Vector::Ones(q.size());
  spec.phi = 1.0;
  spec.label = label;
  return spec;
}

/// Damped Newton-Raphson for the penalized logistic objective. Steps use
/// the Hessian X'SX + theta*I and are halved until the objective does not
/// decrease. Stops when the gradient norm drops below 1e-8 * (1 + n) or
/// after 100 iterations, whichever comes first.
inline std::pair<Vector, NewtonTrace> fit_logistic_ridge(
    const LogisticProblem& p, std::optional<Vector> start = std::nullopt) {
  require_design(p.X);
  require_response(p.X, p.y01);
  require_binary_labels(p.y01);
  if (p.prior.size() != p.X.cols()) {
    throw contract_error("prior length does not match design columns");
  }
  if (!(p.theta >= 0.0)) {
    throw contract_error("theta must be non-negative");
  }

  const Eigen::Index n = p.X.rows();
  const Eigen::Index m = p.X.cols();
  const double tol = 1e-8 * (1.0 + static_cast<double>(n));

  auto objective = [&](const Vector& w) {
    return log_likelihood(p.X, p.y01, w) -
           0.5 * p.theta * (w - p.prior).squaredNorm();
  };

  Vector w = start.has_value() ? *start : p.prior;
  if (w.size() != m) {
    throw contract_error("start vector length does not match design columns");
  }

  NewtonTrace trace;
  double f = objective(w);
  if (!std::isfinite(f)) throw numeric_error("logistic objective not finite");
  trace.objective_path.push_back(f);

  for (int iter = 0; iter < 100; ++iter) {
    Vector z = p.X * w;
    Vector prob(n);
    for (Eigen::Index i = 0; i < n; ++i) prob(i) = sigmoid(z(i));
    Vector grad = p.X.transpose() * (p.y01 - prob) - p.theta * (w - p.prior);
    trace.final_gradient_norm = grad.norm();
    if (trace.final_gradient_norm < tol) {
      trace.converged = true;
      break;
    }

    Vector s = prob.array() * (1.0 - prob.array());
    Matrix H = p.X.transpose() * s.asDiagonal() * p.X;
    H.diagonal().array() += p.theta;

    Vector step;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(grad);
    } else {
      // Singular curvature (theta == 0 with flat directions): pseudo-solve.
      Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
      if (eig.info() != Eigen::Success) {
        throw numeric_error("logistic Hessian solve failed");
      }
      const Vector& d = eig.eigenvalues();
      double cutoff = kSingularValueCutoff * std::max(d(m - 1), 0.0) + 1e-300;
      Vector t = eig.eigenvectors().transpose() * grad;
      for (Eigen::Index i = 0; i < m; ++i) {
        t(i) = d(i) > cutoff ? t(i) / d(i) : 0.0;
      }
      step = eig.eigenvectors() * t;
    }
    if (!step.allFinite()) throw numeric_error("logistic Newton step not finite");

    double alpha = 1.0;
    Vector w_new = w + step;
    double f_new = objective(w_new);
    int halvings = 0;
    while ((!std::isfinite(f_new) || f_new < f) && halvings < 60) {
      alpha *= 0.5;
      w_new = w + alpha * step;
      f_new = objective(w_new);
      ++halvings;
    }
    ++trace.iterations;
    if (!std::isfinite(f_new) || f_new < f) {
      // No uphill step available; report the best point found.
      break;
    }
    bool representable_progress =
        (alpha * step).lpNorm<Eigen::Infinity>() >
        1e-14 * (1.0 + w.lpNorm<Eigen::Infinity>());
    w = std::move(w_new);
    f = f_new;
    trace.objective_path.push_back(f);
    // at extreme penalties the remaining correction sits below the
    // resolution of w itself; the gradient tolerance is then unreachable
    if (!representable_progress) break;
  }

  if (!trace.converged) {
    Vector z = p.X * w;
    Vector prob(n);
    for (Eigen::Index i = 0; i < n; ++i) prob(i) = sigmoid(z(i));
    trace.final_gradient_norm =
        (p.X.transpose() * (p.y01 - prob) - p.theta * (w - p.prior)).norm();
    trace.converged = trace.final_gradient_norm < tol;
  }
  return {std::move(w), std::move(trace)};
}

/// Class probability 1 / (1 + exp(-x.w)).
inline double predict_proba(const Vector& w, const Vector& x) {
  if (w.size() != x.size()) {
    throw contract_error("weight and feature lengths differ");
  }
  require_finite(w, "weights");
  require_finite(x, "features");
  return sigmoid(x.dot(w));
}

}  // namespace priorreg
