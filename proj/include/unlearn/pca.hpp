#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/linalg.hpp"
#include "unlearn/mechanism.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

/// Eigengaps below this are treated as zero.
inline constexpr double kGapThreshold = 1e-10;

/// Spectrum of a covariance matrix and its rank-k projector.
struct SpectralReport {
  Eigen::VectorXd eigenvalues;  // nonincreasing
  Eigen::MatrixXd basis;        // d x k, top-k eigenvectors
  Eigen::MatrixXd projector;    // basis * basis^T
  Eigen::Index k = 1;
  double gap = 0.0;             // lambda_k - lambda_{k+1}

  bool degenerate() const { return gap < kGapThreshold; }
};

/// (1/n) X^T X without re-centering.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw DataError("covariance needs at least one row");
  Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(X.rows());
  return 0.5 * (cov + cov.transpose());
}

inline Eigen::MatrixXd covariance(const Dataset& data) {
  data.validate(/*require_labels=*/false);
  return covariance(data.X);
}

/// Fails unless the column means are within `tol` of zero in Euclidean norm.
/// The sensitivity analysis treats (1/n) X^T X as the covariance, so data must
/// be centred once at ingestion rather than inside each computation.
inline void require_centered(const Eigen::MatrixXd& X, double tol = 1e-6) {
  const double mean_norm = X.colwise().mean().norm();
  if (mean_norm > tol) {
    throw DataError("PCA data must be centred at ingestion (column-mean norm " +
                    format_sci(mean_norm) + ")");
  }
}

inline SpectralReport spectral(const Eigen::MatrixXd& cov, Eigen::Index k) {
  const Eigen::Index d = cov.rows();
  if (cov.cols() != d) throw ConfigError("covariance must be square");
  if (k < 1 || k > d - 1) throw ConfigError("k must lie in [1, d-1]");
  const SymmetricEigen eig = symmetric_eigen(cov);
  SpectralReport report;
  report.eigenvalues = eig.values;
  report.k = k;
  report.basis = eig.vectors.leftCols(k);
  report.projector = report.basis * report.basis.transpose();
  report.gap = std::max(0.0, eig.values[k - 1] - eig.values[k]);
  return report;
}

/// 2 sqrt(2) B^2 / ((n + 1) gap_k), Frobenius norm on projectors.
inline SensitivityReport rs_pca_bound(const SpectralReport& report, Eigen::Index n,
                                      double bound_B) {
  if (n < 1) throw ConfigError("n must be positive");
  if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
  if (report.degenerate()) {
    throw DegenerateError("eigengap is zero; the projector's retain sensitivity is unbounded");
  }
  const double value = 2.0 * std::numbers::sqrt2 * bound_B * bound_B /
                       (static_cast<double>(n + 1) * report.gap);
  return SensitivityReport::make(value, SensitivityKind::retain, "rs_pca_bound",
                                 {{"n", static_cast<double>(n)},
                                  {"k", static_cast<double>(report.k)},
                                  {"gap", report.gap},
                                  {"B", bound_B}});
}

/// Frobenius diameter of the rank-k projectors in dimension d,
/// sqrt(2 min(k, d - k)): the trivial data-independent bound.
inline SensitivityReport gs_pca_diameter(Eigen::Index d, Eigen::Index k) {
  if (k < 1 || k > d - 1) throw ConfigError("k must lie in [1, d-1]");
  return SensitivityReport::make(std::sqrt(2.0 * static_cast<double>(std::min(k, d - k))),
                                 SensitivityKind::global, "gs_pca_diameter",
                                 {{"d", static_cast<double>(d)}, {"k", static_cast<double>(k)}});
}

/// Sampled lower bound on the projector's retain sensitivity.
///
/// Candidates: x = 0, +-B along the top and the (k+1)-th eigenvectors,
/// B (v_k +- v_{k+1}) / sqrt 2 (the rotation that mixes the two sides of the
/// gap), and `trial_count` uniform directions on the radius-B sphere. The
/// report also records the largest covariance change seen in operator and
/// Frobenius norm.
inline SensitivityReport oracle_rs_pca(const Dataset& data, Eigen::Index k, int trial_count,
                                       std::uint64_t seed) {
  data.validate(/*require_labels=*/false);
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  const double B = data.bound_B;
  const Eigen::MatrixXd cov = covariance(data.X);
  const SpectralReport base = spectral(cov, k);
  if (base.degenerate()) throw DegenerateError("oracle_rs_pca needs a positive eigengap");
  const SymmetricEigen eig = symmetric_eigen(cov);

  std::vector<Eigen::VectorXd> candidates;
  candidates.push_back(Eigen::VectorXd::Zero(d));
  for (Eigen::Index j : {Eigen::Index{0}, k - 1, k}) {
    candidates.push_back(B * eig.vectors.col(j));
    candidates.push_back(-B * eig.vectors.col(j));
  }
  const Eigen::VectorXd mix_plus = (eig.vectors.col(k - 1) + eig.vectors.col(k)) / std::sqrt(2.0);
  const Eigen::VectorXd mix_minus = (eig.vectors.col(k - 1) - eig.vectors.col(k)) / std::sqrt(2.0);
  candidates.push_back(B * mix_plus);
  candidates.push_back(B * mix_minus);
  CounterRng rng(seed);
  for (int t = 0; t < trial_count; ++t) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.normal();
    const double norm = x.norm();
    if (norm == 0.0) continue;
    candidates.push_back(B * x / norm);
  }

  const double scale = 1.0 / static_cast<double>(n + 1);
  double worst = 0.0;
  double worst_cov_op = 0.0;
  double worst_cov_fro = 0.0;
  for (const Eigen::VectorXd& x : candidates) {
    const Eigen::MatrixXd shifted = (static_cast<double>(n) * cov + x * x.transpose()) * scale;
    const Eigen::MatrixXd delta = shifted - cov;
    worst_cov_op = std::max(worst_cov_op, symmetric_operator_norm(delta));
    worst_cov_fro = std::max(worst_cov_fro, delta.norm());
    const Eigen::MatrixXd moved = top_k_projector(shifted, k);
    worst = std::max(worst, (moved - base.projector).norm());
  }
  return SensitivityReport::make(worst, SensitivityKind::oracle, "oracle_rs_pca",
                                 {{"n", static_cast<double>(n)},
                                  {"k", static_cast<double>(k)},
                                  {"gap", base.gap},
                                  {"candidates", static_cast<double>(candidates.size())},
                                  {"max_cov_change_op", worst_cov_op},
                                  {"max_cov_change_fro", worst_cov_fro}});
}

struct PcaUnlearnResult {
  Eigen::MatrixXd projector;
  NoiseSpec noise;
};

/// Passive unlearning of the rank-k projector: add symmetric Gaussian noise
/// calibrated to the retain bound of R, then project back onto the nearest
/// rank-k projector (post-processing keeps the certificate).
inline PcaUnlearnResult unlearn_pca(const Eigen::MatrixXd& projector_trained,
                                    const SpectralReport& report_R, Eigen::Index n,
                                    double bound_B, const PrivacyParams& params,
                                    std::uint64_t seed) {
  const Eigen::Index d = projector_trained.rows();
  if (projector_trained.cols() != d || report_R.projector.rows() != d) {
    throw ConfigError("projector dimensions do not match the spectral report");
  }
  const SensitivityReport rs = rs_pca_bound(report_R, n, bound_B);
  PcaUnlearnResult out;
  out.noise = certify_unlearning(rs, params, NoiseShape::symmetric_matrix,
                                 static_cast<std::size_t>(d));
  const Eigen::MatrixXd noisy = projector_trained + draw_noise(out.noise, seed);
  out.projector = top_k_projector(noisy, report_R.k);
  return out;
}

}  // namespace unlearn
