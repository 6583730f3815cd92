#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "priorreg/errors.hpp"
#include "priorreg/linear.hpp"
#include "priorreg/rng.hpp"

namespace priorreg {

/// Simulation parameters for the event-related BOLD protocol. Defaults give
/// a 7-voxel signal cube inside a 21-voxel volume, 40 trials of two stimulus
/// types over two runs, and heavy scanner noise smoothed to realistic
/// spatiotemporal correlation.
struct SimConfig {
  int d = 7;                 // signal cube side, voxels
  int reps_per_stim = 20;
  int n_stimuli = 2;
  int runs = 2;
  double tr = 1.0;           // seconds per scan
  double ed = 1.5;           // event duration, seconds
  double isi = 2.0;          // interstimulus interval, seconds
  double sigma2_psi = 20.0;  // variance of ground-truth weight means
  double sigma2_scanner = 10000.0;
  double fwhm_mm = 4.0;      // spatial smoothing kernel
  double fwhm_s = 4.5;       // temporal smoothing kernel
  std::array<double, 3> voxel_mm{3.0, 3.0, 3.75};
  double t_end = 20.0;       // decay slack after the last trial, seconds
  double v_offdiag = 0.7;    // base correlation of the Wishart scale matrix
  std::uint64_t seed = 0;

  int trials() const { return reps_per_stim * n_stimuli; }
  int null_epochs() const { return (trials() + 2) / 3; }
  int volume_side() const { return 3 * d; }
  int signal_voxels() const { return d * d * d; }
  int volume_voxels() const {
    return volume_side() * volume_side() * volume_side();
  }
  double trial_duration() const { return ed + isi; }

  /// Number of scans: ceil((4/3 * trials * (ED + ISI) + t_end) / TR).
  int timepoints() const {
    double span =
        4.0 / 3.0 * static_cast<double>(trials()) * trial_duration() + t_end;
    return static_cast<int>(std::ceil(span / tr - 1e-12));
  }

  void validate() const {
    if (d < 1) throw config_error("d must be at least 1");
    if (reps_per_stim < 1 || n_stimuli < 1 || runs < 1) {
      throw config_error("counts must be at least 1");
    }
    if (trials() < 2) throw config_error("need at least 2 trials");
    if (!(tr > 0.0) || !(ed > 0.0) || !(isi > 0.0)) {
      throw config_error("tr, ed and isi must be positive");
    }
    if (!(sigma2_psi >= 0.0) || !(sigma2_scanner >= 0.0)) {
      throw config_error("variances must be non-negative");
    }
    if (!(fwhm_mm >= 0.0) || !(fwhm_s >= 0.0)) {
      throw config_error("smoothing widths must be non-negative");
    }
    for (double v : voxel_mm) {
      if (!(v > 0.0)) throw config_error("voxel sizes must be positive");
    }
    if (!(t_end >= 0.0)) throw config_error("t_end must be non-negative");
    if (!(v_offdiag >= 0.0) || !(v_offdiag < 1.0)) {
      throw config_error("v_offdiag must lie in [0, 1)");
    }
  }
};

/// Canonical double-gamma haemodynamic response, peak-normalized to 1.
/// Response gamma with shape 6, undershoot gamma with shape 16, both unit
/// scale, undershoot ratio 1/6; the peak sits near 5 seconds.
inline double double_gamma_hrf(double t) {
  auto raw = [](double u) {
    if (u <= 0.0) return 0.0;
    auto gamma_pdf = [&](double shape) {
      return std::exp((shape - 1.0) * std::log(u) - u - std::lgamma(shape));
    };
    return gamma_pdf(6.0) - gamma_pdf(16.0) / 6.0;
  };
  static const double peak = [&] {
    double p = 0.0;
    for (double u = 0.0; u <= 40.0; u += 1e-3) p = std::max(p, raw(u));
    return p;
  }();
  return raw(t) / peak;
}

/// Trial onsets in seconds, one per trial, in temporal order.
struct EventSchedule {
  std::vector<double> onsets;
};

/// Lays the trials out on a slot grid of (ED + ISI)-second epochs with
/// ceil(trials/3) null epochs inserted at random slots.
inline EventSchedule make_schedule(const SimConfig& cfg, Rng& rng) {
  int slots = cfg.trials() + cfg.null_epochs();
  std::vector<bool> is_null(static_cast<std::size_t>(slots), false);
  for (int s : rng.sample_indices(slots, cfg.null_epochs())) {
    is_null[static_cast<std::size_t>(s)] = true;
  }
  EventSchedule schedule;
  for (int s = 0; s < slots; ++s) {
    if (!is_null[static_cast<std::size_t>(s)]) {
      schedule.onsets.push_back(s * cfg.trial_duration());
    }
  }
  return schedule;
}

/// One column per trial: a boxcar of the event duration convolved with the
/// double-gamma response, sampled on the TR grid.
inline Matrix build_design_lsa(const SimConfig& cfg,
                               const EventSchedule& schedule) {
  cfg.validate();
  if (static_cast<int>(schedule.onsets.size()) != cfg.trials()) {
    throw contract_error("schedule does not provide one onset per trial");
  }
  const int n = cfg.timepoints();
  const double horizon = n * cfg.tr;
  for (std::size_t k = 0; k < schedule.onsets.size(); ++k) {
    double onset = schedule.onsets[k];
    if (onset < 0.0 || onset + cfg.ed > horizon) {
      throw contract_error("event extends beyond the acquisition window");
    }
    if (k > 0 && onset < schedule.onsets[k - 1]) {
      throw contract_error("onsets must be in temporal order");
    }
  }

  const double dt = 0.05;
  const int steps = static_cast<int>(std::lround(cfg.ed / dt));
  Matrix X = Matrix::Zero(n, cfg.trials());
  for (int k = 0; k < cfg.trials(); ++k) {
    double onset = schedule.onsets[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i) {
      double t = i * cfg.tr;
      if (t < onset) continue;
      double acc = 0.0;
      for (int s = 0; s < steps; ++s) {
        double tau = onset + (s + 0.5) * dt;
        if (tau > t) break;
        acc += double_gamma_hrf(t - tau);
      }
      X(i, k) = acc * dt;
    }
  }
  return X;
}

/// One draw from the scaled Wishart W(V, df)/df given the lower Cholesky
/// factor of V.
inline Matrix sample_scaled_wishart(const Matrix& v_chol_lower, int df,
                                    Rng& rng) {
  const Eigen::Index dim = v_chol_lower.rows();
  Matrix Z(dim, df);
  for (Eigen::Index j = 0; j < df; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) Z(i, j) = rng.normal();
  }
  Matrix G = v_chol_lower * Z;
  return (G * G.transpose()) / static_cast<double>(df);
}

/// Quantities drawn once per simulation iteration and shared by all runs:
/// per-stimulus mean patterns, the voxel covariance, and where the signal
/// cube sits inside the volume.
struct IterationGroundTruth {
  std::vector<Vector> mu;        // one length-d^3 mean per stimulus
  Matrix sigma;                  // d^3 x d^3
  Matrix sigma_chol_lower;
  std::array<int, 3> effect_center;  // 1-based block corner per axis
};

inline IterationGroundTruth sample_iteration_truth(const SimConfig& cfg,
                                                   Rng& rng) {
  const int dim = cfg.signal_voxels();
  IterationGroundTruth truth;

  double sd_psi = std::sqrt(cfg.sigma2_psi);
  for (int s = 0; s < cfg.n_stimuli; ++s) {
    Vector mu(dim);
    for (int v = 0; v < dim; ++v) mu(v) = rng.normal(0.0, sd_psi);
    truth.mu.push_back(std::move(mu));
  }

  Matrix V = Matrix::Constant(dim, dim, cfg.v_offdiag);
  V.diagonal().setOnes();
  Eigen::LLT<Matrix> v_llt(V);
  if (v_llt.info() != Eigen::Success) {
    throw numeric_error("Wishart scale matrix is not positive definite");
  }
  Matrix v_chol = v_llt.matrixL();

  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    truth.sigma = sample_scaled_wishart(v_chol, dim, rng);
    Eigen::LLT<Matrix> llt(truth.sigma);
    if (llt.info() == Eigen::Success) {
      truth.sigma_chol_lower = llt.matrixL();
      ok = true;
    }
  }
  if (!ok) {
    throw numeric_error("drawn covariance never factored in 10 attempts");
  }

  // the 1-based corner range reproduces [1, 11] at the default d = 7 and
  // always keeps the signal cube inside the volume
  int hi = std::max(1, 2 * cfg.d - 3);
  for (int axis = 0; axis < 3; ++axis) {
    truth.effect_center[static_cast<std::size_t>(axis)] =
        static_cast<int>(rng.uniform_int(1, hi));
  }
  return truth;
}

/// Per-run trial weights: reps_per_stim draws from N(mu_s, Sigma) for each
/// stimulus, stacked and then permuted along the trial axis. Rows are
/// trials, columns signal voxels in row-major cube order.
inline Matrix sample_run_weights(const SimConfig& cfg,
                                 const IterationGroundTruth& truth, Rng& rng) {
  const int dim = cfg.signal_voxels();
  const int l = cfg.trials();
  Matrix M(l, dim);
  int row = 0;
  for (int s = 0; s < cfg.n_stimuli; ++s) {
    for (int rep = 0; rep < cfg.reps_per_stim; ++rep) {
      Vector z(dim);
      for (int v = 0; v < dim; ++v) z(v) = rng.normal();
      M.row(row++) = (truth.mu[static_cast<std::size_t>(s)] +
                      truth.sigma_chol_lower * z)
                         .transpose();
    }
  }
  std::vector<int> perm(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);
  Matrix permuted(l, dim);
  for (int i = 0; i < l; ++i) {
    permuted.row(i) = M.row(perm[static_cast<std::size_t>(i)]);
  }
  return permuted;
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

/// Blurs evenly strided lines in place. Boundary taps are renormalized so a
/// constant line stays constant.
inline void blur_lines(double* base, int length, int stride, int lines,
                       int line_stride, const std::vector<double>& kernel,
                       std::vector<double>& scratch) {
  const int radius = static_cast<int>(kernel.size() / 2);
  if (radius == 0) return;
  scratch.resize(static_cast<std::size_t>(length));
  for (int line = 0; line < lines; ++line) {
    double* p = base + static_cast<std::ptrdiff_t>(line) * line_stride;
    for (int i = 0; i < length; ++i) {
      double acc = 0.0, wsum = 0.0;
      int lo = std::max(-radius, -i);
      int hi = std::min(radius, length - 1 - i);
      for (int k = lo; k <= hi; ++k) {
        double w = kernel[static_cast<std::size_t>(k + radius)];
        acc += w * p[static_cast<std::ptrdiff_t>(i + k) * stride];
        wsum += w;
      }
      scratch[static_cast<std::size_t>(i)] = acc / wsum;
    }
    for (int i = 0; i < length; ++i) {
      p[static_cast<std::ptrdiff_t>(i) * stride] =
          scratch[static_cast<std::size_t>(i)];
    }
  }
}

}  // namespace detail

/// Separable Gaussian smoothing along the three spatial axes and time.
/// Sigma per axis comes from the configured FWHM divided by the sample
/// spacing (voxel size or TR); kernels are normalized and renormalized at
/// the boundaries.
///
/// E is timepoints x voxels with voxel columns in row-major (x, y, z) order
/// over the full volume.
inline Matrix smooth_noise(const Matrix& E, const SimConfig& cfg) {
  const int S = cfg.volume_side();
  const int V = cfg.volume_voxels();
  const int n = static_cast<int>(E.rows());
  if (E.cols() != V) {
    throw contract_error("noise tensor does not match the volume size");
  }
  require_finite(E, "noise");

  constexpr double fwhm_to_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)
  std::array<std::vector<double>, 3> spatial;
  for (int axis = 0; axis < 3; ++axis) {
    double sigma = cfg.fwhm_mm /
                   cfg.voxel_mm[static_cast<std::size_t>(axis)] /
                   fwhm_to_sigma;
    spatial[static_cast<std::size_t>(axis)] = detail::gaussian_kernel(sigma);
  }
  std::vector<double> temporal =
      detail::gaussian_kernel(cfg.fwhm_s / cfg.tr / fwhm_to_sigma);

  Matrix out = E;
  std::vector<double> slice(static_cast<std::size_t>(V));
  std::vector<double> scratch;

  // spatial axes, one time slice at a time (the slice fits in cache)
  for (int t = 0; t < n; ++t) {
    for (int v = 0; v < V; ++v) {
      slice[static_cast<std::size_t>(v)] = out(t, v);
    }
    // voxel index is (x * S + y) * S + z
    for (int x = 0; x < S; ++x) {  // z lines: stride 1
      detail::blur_lines(slice.data() + static_cast<std::ptrdiff_t>(x) * S * S,
                         S, 1, S, S, spatial[2], scratch);
    }
    for (int x = 0; x < S; ++x) {  // y lines: stride S
      detail::blur_lines(slice.data() + static_cast<std::ptrdiff_t>(x) * S * S,
                         S, S, S, 1, spatial[1], scratch);
    }
    // x lines: stride S*S, one line per (y, z)
    detail::blur_lines(slice.data(), S, S * S, S * S, 1, spatial[0], scratch);
    for (int v = 0; v < V; ++v) {
      out(t, v) = slice[static_cast<std::size_t>(v)];
    }
  }

  // temporal axis: columns are contiguous
  detail::blur_lines(out.data(), n, 1, V, n, temporal, scratch);
  return out;
}

/// One simulated run: design, ground truth, embedded weights, and the
/// observed series Y = X * Omega + smoothed noise.
struct FmriScene {
  Matrix X_lsa;   // timepoints x trials
  Matrix psi;     // trials x d^3, signal-voxel weights
  Matrix omega;   // trials x volume voxels, zero outside the signal block
  Matrix Y;       // timepoints x volume voxels
  std::array<int, 3> effect_center{1, 1, 1};  // 1-based corner, per axis
  int d = 0;

  int volume_side() const { return 3 * d; }

  /// Column indices of the signal voxels, ordered like the psi columns.
  std::vector<int> signal_voxel_indices() const {
    const int S = volume_side();
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(d) * d * d);
    for (int x = 0; x < d; ++x) {
      for (int y = 0; y < d; ++y) {
        for (int z = 0; z < d; ++z) {
          int gx = effect_center[0] - 1 + x;
          int gy = effect_center[1] - 1 + y;
          int gz = effect_center[2] - 1 + z;
          idx.push_back((gx * S + gy) * S + gz);
        }
      }
    }
    return idx;
  }
};

/// Simulates all runs of one iteration. Mean patterns, covariance and the
/// effect center are shared across runs; trial weights, schedules and noise
/// are drawn per run.
inline std::vector<FmriScene> simulate(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  IterationGroundTruth truth = sample_iteration_truth(cfg, rng);
  const int V = cfg.volume_voxels();
  const int n = cfg.timepoints();
  const double sd_scanner = std::sqrt(cfg.sigma2_scanner);

  std::vector<FmriScene> scenes;
  for (int run = 0; run < cfg.runs; ++run) {
    FmriScene scene;
    scene.d = cfg.d;
    scene.effect_center = truth.effect_center;
    scene.X_lsa = build_design_lsa(cfg, make_schedule(cfg, rng));
    scene.psi = sample_run_weights(cfg, truth, rng);

    scene.omega = Matrix::Zero(cfg.trials(), V);
    std::vector<int> sig = scene.signal_voxel_indices();
    for (std::size_t c = 0; c < sig.size(); ++c) {
      scene.omega.col(sig[c]) = scene.psi.col(static_cast<Eigen::Index>(c));
    }

    Matrix E(n, V);
    for (int v = 0; v < V; ++v) {
      for (int t = 0; t < n; ++t) E(t, v) = rng.normal(0.0, sd_scanner);
    }
    E = smooth_noise(E, cfg);

    scene.Y = std::move(E);
    scene.Y.noalias() += scene.X_lsa * scene.omega;
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

// ---------------------------------------------------------------------------
// Per-voxel estimators

struct LsaFit {
  Vector weights;
  bool rank_deficient = false;
};

/// One general linear model with one regressor per trial; plain least
/// squares, minimum-norm under rank deficiency.
inline LsaFit estimate_lsa(const Matrix& X_lsa, const Vector& y) {
  auto sol = detail::ols_min_norm(X_lsa, y);
  return {std::move(sol.weights), sol.rank < X_lsa.cols()};
}

struct LssFit {
  Vector weights;
  std::vector<std::uint8_t> collinear;  // per trial
};

/// One two-regressor model per trial: the target trial against the sum of
/// all other trials, keeping the target coefficient.
namespace detail {

/// Sum of every trial column except k, accumulated in ascending column
/// order so the two-trial case reduces to the other column bit for bit.
inline Vector nuisance_column(const Matrix& X, Eigen::Index k) {
  Vector out = Vector::Zero(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (j != k) out += X.col(j);
  }
  return out;
}

}  // namespace detail

inline LssFit estimate_lss(const Matrix& X_lsa, const Vector& y) {
  const Eigen::Index l = X_lsa.cols();
  if (l < 2) throw contract_error("estimate_lss needs at least two trials");
  require_response(X_lsa, y);

  LssFit fit;
  fit.weights.resize(l);
  fit.collinear.assign(static_cast<std::size_t>(l), 0);
  Matrix design(X_lsa.rows(), 2);
  for (Eigen::Index k = 0; k < l; ++k) {
    design.col(0) = X_lsa.col(k);
    design.col(1) = detail::nuisance_column(X_lsa, k);
    auto sol = detail::ols_min_norm(design, y);
    fit.weights(k) = sol.weights(0);
    if (sol.rank < 2) fit.collinear[static_cast<std::size_t>(k)] = 1;
  }
  return fit;
}

/// Ridge toward the LSS estimate: theta = 0 reproduces LSA, large theta
/// returns the prior.
inline Vector estimate_lss_prior(const Matrix& X_lsa, const Vector& y,
                                 const Vector& w_lss, double theta) {
  return solve_ridge_with_prior({X_lsa, y, w_lss, theta});
}

// ---------------------------------------------------------------------------
// Batched estimators over many voxels sharing one design

inline Matrix estimate_lsa_batch(const Matrix& X_lsa, const Matrix& Y) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X_lsa.rows(),
                                                     X_lsa.cols());
  cod.setThreshold(kSingularValueCutoff);
  cod.compute(X_lsa);
  return cod.solve(Y);
}

inline Matrix estimate_lss_batch(const Matrix& X_lsa, const Matrix& Y) {
  const Eigen::Index l = X_lsa.cols();
  if (l < 2) throw contract_error("estimate_lss needs at least two trials");
  Matrix W(l, Y.cols());
  Matrix design(X_lsa.rows(), 2);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X_lsa.rows(), 2);
  cod.setThreshold(kSingularValueCutoff);
  for (Eigen::Index k = 0; k < l; ++k) {
    design.col(0) = X_lsa.col(k);
    design.col(1) = detail::nuisance_column(X_lsa, k);
    cod.compute(design);
    W.row(k) = cod.solve(Y).row(0);
  }
  return W;
}

inline Matrix estimate_lss_prior_batch(const Matrix& X_lsa, const Matrix& Y,
                                       const Matrix& W_lss, double theta) {
  if (theta == 0.0) return estimate_lsa_batch(X_lsa, Y);
  Matrix A = X_lsa.transpose() * X_lsa;
  A.diagonal().array() += theta;
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw numeric_error("ridge normal matrix failed to factor");
  }
  Matrix B = X_lsa.transpose() * Y + theta * W_lss;
  return llt.solve(B);
}

// ---------------------------------------------------------------------------
// Scoring

/// Root mean squared error of one voxel's trial weights.
inline double rmse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) {
    throw contract_error("rmse: length mismatch");
  }
  return std::sqrt((estimate - truth).squaredNorm() /
                   static_cast<double>(truth.size()));
}

/// Mean per-voxel RMSE across the provided voxel columns.
inline double score_rmse(const Matrix& estimates, const Matrix& psi) {
  if (estimates.rows() != psi.rows() || estimates.cols() != psi.cols()) {
    throw contract_error("score_rmse: shape mismatch");
  }
  double total = 0.0;
  for (Eigen::Index v = 0; v < psi.cols(); ++v) {
    total += rmse(estimates.col(v), psi.col(v));
  }
  return total / static_cast<double>(psi.cols());
}

struct EstimatorRow {
  std::string estimator;
  double theta = 0.0;  // 0 for lsa, +inf for lss
  double mean_rmse = 0.0;
  double sd_rmse = 0.0;
  std::vector<double> per_iteration;
};

struct EstimatorReport {
  SimConfig config;
  std::vector<double> theta_grid;
  int iterations = 0;
  std::vector<EstimatorRow> rows;

  const EstimatorRow& row(const std::string& estimator, double theta) const {
    for (const auto& r : rows) {
      if (r.estimator == estimator &&
          (estimator != "lss_prior" || r.theta == theta)) {
        return r;
      }
    }
    throw contract_error("no such estimator row: " + estimator);
  }
};

/// Runs `iterations` simulations of one (ISI, SNR) cell and scores LSA,
/// LSS, and the LSS-prior model across the penalty grid. RMSE is averaged
/// over signal voxels and runs within an iteration; mean and SD are over
/// iterations.
inline EstimatorReport run_fmri_cell(const SimConfig& cfg,
                                     const std::vector<double>& theta_grid,
                                     int iterations) {
  cfg.validate();
  if (iterations < 1) throw config_error("iterations must be at least 1");
  if (theta_grid.empty() || theta_grid.front() != 0.0) {
    throw config_error("theta grid must start at 0");
  }
  for (std::size_t k = 1; k < theta_grid.size(); ++k) {
    if (!(theta_grid[k] > theta_grid[k - 1])) {
      throw config_error("theta grid must be ascending");
    }
  }

  EstimatorReport report;
  report.config = cfg;
  report.theta_grid = theta_grid;
  report.iterations = iterations;
  report.rows.push_back({"lsa", 0.0, 0.0, 0.0, {}});
  report.rows.push_back(
      {"lss", std::numeric_limits<double>::infinity(), 0.0, 0.0, {}});
  for (double theta : theta_grid) {
    report.rows.push_back({"lss_prior", theta, 0.0, 0.0, {}});
  }

  for (int iter = 0; iter < iterations; ++iter) {
    Rng rng(cfg.seed, {3, static_cast<std::uint64_t>(iter)});
    std::vector<FmriScene> scenes = simulate(cfg, rng);

    std::vector<double> sums(report.rows.size(), 0.0);
    for (const FmriScene& scene : scenes) {
      std::vector<int> sig = scene.signal_voxel_indices();
      Matrix Ys(scene.Y.rows(), static_cast<Eigen::Index>(sig.size()));
      for (std::size_t c = 0; c < sig.size(); ++c) {
        Ys.col(static_cast<Eigen::Index>(c)) = scene.Y.col(sig[c]);
      }
      Matrix W_lsa = estimate_lsa_batch(scene.X_lsa, Ys);
      Matrix W_lss = estimate_lss_batch(scene.X_lsa, Ys);
      sums[0] += score_rmse(W_lsa, scene.psi);
      sums[1] += score_rmse(W_lss, scene.psi);
      for (std::size_t k = 0; k < theta_grid.size(); ++k) {
        Matrix W = estimate_lss_prior_batch(scene.X_lsa, Ys, W_lss,
                                            theta_grid[k]);
        sums[2 + k] += score_rmse(W, scene.psi);
      }
    }
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      report.rows[r].per_iteration.push_back(
          sums[r] / static_cast<double>(scenes.size()));
    }
  }

  for (auto& row : report.rows) {
    double sum = 0.0, sumsq = 0.0;
    for (double v : row.per_iteration) {
      sum += v;
      sumsq += v * v;
    }
    double count = static_cast<double>(row.per_iteration.size());
    row.mean_rmse = sum / count;
    double var = count > 1.0
                     ? (sumsq - count * row.mean_rmse * row.mean_rmse) /
                           (count - 1.0)
                     : 0.0;
    row.sd_rmse = std::sqrt(std::max(var, 0.0));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Scene dumps: flat binary arrays for offline inspection. Each array is a
// 64-bit little-endian rank, then the dims as 64-bit counts, then the values
// as row-major 64-bit floats.

inline void write_binary_array(std::ostream& out,
                               const std::vector<std::uint64_t>& dims,
                               const std::vector<double>& row_major) {
  auto put_u64 = [&](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  };
  put_u64(static_cast<std::uint64_t>(dims.size()));
  for (std::uint64_t d : dims) put_u64(d);
  out.write(reinterpret_cast<const char*>(row_major.data()),
            static_cast<std::streamsize>(row_major.size() * sizeof(double)));
}

/// Writes <prefix>_design.bin (timepoints x trials) and <prefix>_psi.bin
/// (trials x d x d x d).
inline void dump_scene(const FmriScene& scene, const std::string& prefix) {
  {
    std::ofstream out(prefix + "_design.bin", std::ios::binary);
    if (!out) throw data_error("cannot write " + prefix + "_design.bin");
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(scene.X_lsa.size()));
    for (Eigen::Index i = 0; i < scene.X_lsa.rows(); ++i) {
      for (Eigen::Index j = 0; j < scene.X_lsa.cols(); ++j) {
        data.push_back(scene.X_lsa(i, j));
      }
    }
    write_binary_array(out,
                       {static_cast<std::uint64_t>(scene.X_lsa.rows()),
                        static_cast<std::uint64_t>(scene.X_lsa.cols())},
                       data);
  }
  {
    std::ofstream out(prefix + "_psi.bin", std::ios::binary);
    if (!out) throw data_error("cannot write " + prefix + "_psi.bin");
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(scene.psi.size()));
    for (Eigen::Index i = 0; i < scene.psi.rows(); ++i) {
      for (Eigen::Index j = 0; j < scene.psi.cols(); ++j) {
        data.push_back(scene.psi(i, j));
      }
    }
    auto d = static_cast<std::uint64_t>(scene.d);
    write_binary_array(
        out, {static_cast<std::uint64_t>(scene.psi.rows()), d, d, d}, data);
  }
}

}  // namespace priorreg
