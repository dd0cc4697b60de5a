#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/mechanism.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

struct KernelSpec {
  enum class Kind { linear, rbf };
  Kind kind = Kind::linear;
  double bandwidth = 1.0;

  static KernelSpec linear() { return {}; }
  static KernelSpec rbf(double bandwidth) {
    if (!(bandwidth > 0.0)) throw ConfigError("RBF bandwidth must be positive");
    return {Kind::rbf, bandwidth};
  }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) const {
    if (kind == Kind::linear) return a.dot(b);
    return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
  }
};

/// K(i, j) = k(A_i, B_j) over the rows of A and B.
inline Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& B) {
  if (kernel.kind == KernelSpec::Kind::linear) return A * B.transpose();
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
      K(i, j) = kernel(A.row(i).transpose(), B.row(j).transpose());
    }
  }
  return K;
}

/// Margins of a hard-margin solution. `true_margin` is the distributional
/// margin gamma, supplied by the caller (known exactly for synthetic data).
struct MarginReport {
  double empirical_margin = 0.0;  // gamma_R = min_i y_i <w, phi(x_i)> / ||w||
  std::optional<double> true_margin;
  double solution_norm = 0.0;     // ||w_R||_H
  std::vector<Eigen::Index> support_indices;
};

struct SvmOptions {
  double tolerance = 1e-8;        // KKT violation
  long max_sweeps = 200000;
  /// sum(alpha) equals ||w||^2 = 1 / gamma_R^2 at the optimum, so exceeding
  /// this cap means the margin is below 1/sqrt(cap) or the data cannot be
  /// separated through the origin.
  double divergence_cap = 1e8;
  std::uint64_t seed = 0x5eed;
};

/// w = sum_i alpha_i y_i phi(x_i) over the training rows.
struct SvmFit {
  Eigen::VectorXd alpha;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  KernelSpec kernel;
  MarginReport margin;
  long sweeps = 0;
  double kkt_violation = 0.0;

  Eigen::VectorXd coefficients() const { return alpha.cwiseProduct(y); }

  /// Primal weights (linear kernel only).
  Eigen::VectorXd weights() const {
    if (kernel.kind != KernelSpec::Kind::linear) {
      throw ConfigError("explicit weights exist only for the linear kernel");
    }
    return X.transpose() * coefficients();
  }

  double decision(const Eigen::VectorXd& x) const {
    double f = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (alpha[i] != 0.0) f += alpha[i] * y[i] * kernel(X.row(i).transpose(), x);
    }
    return f;
  }
};

/// Hard-margin SVM through the origin, dual coordinate ascent:
///   max_alpha  sum(alpha) - 1/2 alpha^T Q alpha,  alpha >= 0,  Q = Y K Y,
/// with random-permutation sweeps until every KKT violation is below the
/// tolerance. `warm_start` (same length as the data, or one shorter when a
/// row was appended) seeds alpha.
inline SvmFit train_hard_margin(const Dataset& data, const KernelSpec& kernel,
                                const SvmOptions& opts = {},
                                const Eigen::VectorXd* warm_start = nullptr) {
  data.validate();
  const Eigen::Index n = data.n();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.y[i] != 1.0 && data.y[i] != -1.0) throw DataError("SVM labels must be -1 or +1");
  }
  const Eigen::MatrixXd K = gram(kernel, data.X, data.X);
  const Eigen::MatrixXd Q = data.y.asDiagonal() * K * data.y.asDiagonal();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(Q(i, i) > 0.0)) {
      throw NonSeparableError("a point with zero feature norm cannot meet y<w,phi(x)> >= 1");
    }
  }

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  if (warm_start != nullptr) {
    const Eigen::Index m = std::min(n, warm_start->size());
    alpha.head(m) = warm_start->head(m).cwiseMax(0.0);
  }
  Eigen::VectorXd grad = Q * alpha;  // (Q alpha)_i = y_i f(x_i)

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  CounterRng rng(opts.seed);

  SvmFit fit;
  double violation = 0.0;
  long sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (Eigen::Index i : order) {
      const double step = std::max(-alpha[i], (1.0 - grad[i]) / Q(i, i));
      if (step == 0.0) continue;
      alpha[i] += step;
      grad.noalias() += step * Q.col(i);
    }
    violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = alpha[i] > 0.0 ? std::abs(1.0 - grad[i]) : std::max(0.0, 1.0 - grad[i]);
      violation = std::max(violation, v);
    }
    if (alpha.sum() > opts.divergence_cap) {
      throw NonSeparableError(
          "dual objective diverges: data are not separable through the origin in feature space "
          "(or the margin is below 1/sqrt(divergence_cap))");
    }
    if (violation <= opts.tolerance) break;
  }
  if (violation > opts.tolerance) {
    // At a finite optimum sum(alpha) equals alpha'Q alpha. A dual that keeps
    // gaining sum(alpha) along a flat direction of Q has no optimum.
    if (alpha.sum() > 2.0 * alpha.dot(grad) + 1.0) {
      throw NonSeparableError(
          "dual objective grows without bound: data are not separable through the origin in "
          "feature space");
    }
    throw ConvergenceError("SVM dual coordinate ascent hit the sweep cap (KKT violation " +
                           format_sci(violation) + ")");
  }

  const double norm_sq = alpha.dot(grad);
  fit.alpha = alpha;
  fit.X = data.X;
  fit.y = data.y;
  fit.kernel = kernel;
  fit.sweeps = sweep + 1;
  fit.kkt_violation = violation;
  fit.margin.solution_norm = std::sqrt(std::max(norm_sq, 0.0));
  fit.margin.empirical_margin = grad.minCoeff() / fit.margin.solution_norm;
  const double support_cut = std::max(opts.tolerance, 1e-12 * alpha.maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha[i] > support_cut) fit.margin.support_indices.push_back(i);
  }
  return fit;
}

/// ||w_a - w_b||_H through Gram algebra, no feature map needed.
inline double rkhs_distance(const SvmFit& a, const SvmFit& b) {
  const Eigen::VectorXd ca = a.coefficients();
  const Eigen::VectorXd cb = b.coefficients();
  const double aa = ca.dot(gram(a.kernel, a.X, a.X) * ca);
  const double bb = cb.dot(gram(b.kernel, b.X, b.X) * cb);
  const double ab = ca.dot(gram(a.kernel, a.X, b.X) * cb);
  return std::sqrt(std::max(0.0, aa - 2.0 * ab + bb));
}

/// sqrt(1/gamma^2 - 1/gamma_R^2), RKHS norm on classifiers.
inline SensitivityReport rs_svm(const MarginReport& report) {
  if (!report.true_margin) throw ConfigError("rs_svm needs the true margin gamma");
  const double gamma = *report.true_margin;
  const double gamma_R = report.empirical_margin;
  if (!(gamma > 0.0)) throw ConfigError("true margin must be positive");
  if (gamma_R < gamma) {
    throw ConfigError("empirical margin " + format_sci(gamma_R) +
                      " is below the configured true margin " + format_sci(gamma) +
                      "; the configured gamma cannot be the distribution's margin");
  }
  const double value = std::sqrt(std::max(0.0, 1.0 / (gamma * gamma) - 1.0 / (gamma_R * gamma_R)));
  return SensitivityReport::make(value, SensitivityKind::retain, "rs_svm",
                                 {{"gamma", gamma}, {"gamma_R", gamma_R}});
}

inline SensitivityReport gs_svm(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(1.0 / gamma)) {
    throw DegenerateError("true margin must be positive; GS = 1/gamma diverges");
  }
  return SensitivityReport::make(1.0 / gamma, SensitivityKind::global, "gs_svm",
                                 {{"gamma", gamma}});
}

struct LabeledPoint {
  Eigen::VectorXd x;
  double y = 1.0;
};

using CandidateSource = std::function<LabeledPoint(CounterRng&)>;

/// Empirical RS: retrain on R + {z} for sampled z and keep the largest RKHS move.
inline SensitivityReport oracle_rs_svm(const Dataset& data, const KernelSpec& kernel,
                                       const CandidateSource& candidates, int trial_count,
                                       std::uint64_t seed, const SvmOptions& opts = {}) {
  const SvmFit base = train_hard_margin(data, kernel, opts);
  CounterRng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trial_count; ++t) {
    const LabeledPoint z = candidates(rng);
    const SvmFit moved = train_hard_margin(data.with(z.x, z.y), kernel, opts, &base.alpha);
    worst = std::max(worst, rkhs_distance(base, moved));
  }
  return SensitivityReport::make(worst, SensitivityKind::oracle, "oracle_rs_svm",
                                 {{"n", static_cast<double>(data.n())},
                                  {"trials", static_cast<double>(trial_count)},
                                  {"gamma_R", base.margin.empirical_margin}});
}

}  // namespace unlearn
