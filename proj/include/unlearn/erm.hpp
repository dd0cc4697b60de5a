#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/linalg.hpp"
#include "unlearn/mechanism.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/svm.hpp"

namespace unlearn {

enum class LossKind { mse, logistic };

inline const char* to_string(LossKind kind) {
  return kind == LossKind::mse ? "mse" : "logistic";
}

/// Per-example loss plus an l2 regulariser:
///   F_R(w) = (1/n) sum_i loss(w; x_i, y_i) + (lambda/2) ||w||^2
/// with loss = (x^T w - y)^2 / 2 (MSE) or log(1 + exp(-y x^T w)) (logistic).
struct LossSpec {
  LossKind kind = LossKind::mse;
  double lambda = 0.0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ConfigError("lambda must be a nonnegative finite number");
    }
  }
};

namespace detail {

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + exp(-t)) without overflow.
inline double log1p_exp_neg(double t) {
  if (t > 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

}  // namespace detail

// Per-example pieces ---------------------------------------------------------
// `point_*` include the regulariser so that F_R is the average of
// f(w, z) = loss(w; z) + (lambda/2)||w||^2. The average identities used by the
// Newton update (Hessian recovery, deleted-point gradient) rely on this.

inline double point_loss(const LossSpec& loss, const Eigen::VectorXd& x, double y,
                         const Eigen::VectorXd& w) {
  const double t = x.dot(w);
  const double data_term =
      loss.kind == LossKind::mse ? 0.5 * (t - y) * (t - y) : detail::log1p_exp_neg(y * t);
  return data_term + 0.5 * loss.lambda * w.squaredNorm();
}

inline Eigen::VectorXd point_gradient(const LossSpec& loss, const Eigen::VectorXd& x, double y,
                                      const Eigen::VectorXd& w) {
  const double t = x.dot(w);
  const double scale =
      loss.kind == LossKind::mse ? t - y : -y * detail::sigmoid(-y * t);
  return scale * x + loss.lambda * w;
}

inline Eigen::MatrixXd point_hessian(const LossSpec& loss, const Eigen::VectorXd& x, double y,
                                     const Eigen::VectorXd& w) {
  double scale = 1.0;
  if (loss.kind == LossKind::logistic) {
    const double s = detail::sigmoid(y * x.dot(w));
    scale = s * (1.0 - s) * y * y;
  }
  Eigen::MatrixXd H = scale * x * x.transpose();
  H.diagonal().array() += loss.lambda;
  return H;
}

// Empirical risk --------------------------------------------------------------

inline double objective(const Dataset& data, const LossSpec& loss, const Eigen::VectorXd& w) {
  const Eigen::VectorXd t = data.X * w;
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    total += loss.kind == LossKind::mse ? 0.5 * (t[i] - data.y[i]) * (t[i] - data.y[i])
                                        : detail::log1p_exp_neg(data.y[i] * t[i]);
  }
  return total / static_cast<double>(data.n()) + 0.5 * loss.lambda * w.squaredNorm();
}

inline Eigen::VectorXd gradient(const Dataset& data, const LossSpec& loss,
                                const Eigen::VectorXd& w) {
  const Eigen::VectorXd t = data.X * w;
  Eigen::VectorXd scale(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    scale[i] = loss.kind == LossKind::mse ? t[i] - data.y[i]
                                          : -data.y[i] * detail::sigmoid(-data.y[i] * t[i]);
  }
  return data.X.transpose() * scale / static_cast<double>(data.n()) + loss.lambda * w;
}

inline Eigen::MatrixXd hessian(const Dataset& data, const LossSpec& loss,
                               const Eigen::VectorXd& w) {
  Eigen::MatrixXd H;
  if (loss.kind == LossKind::mse) {
    H = data.X.transpose() * data.X;
  } else {
    const Eigen::VectorXd t = data.X * w;
    Eigen::VectorXd weight(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const double s = detail::sigmoid(data.y[i] * t[i]);
      weight[i] = s * (1.0 - s) * data.y[i] * data.y[i];
    }
    H = data.X.transpose() * weight.asDiagonal() * data.X;
  }
  H /= static_cast<double>(data.n());
  H.diagonal().array() += loss.lambda;
  return 0.5 * (H + H.transpose());
}

inline double hessian_min_eigenvalue(const Dataset& data, const LossSpec& loss,
                                     const Eigen::VectorXd& w) {
  return min_eigenvalue(hessian(data, loss, w));
}

// Curvature -------------------------------------------------------------------

/// Data-dependent and global curvature constants for a loss on a fixed set.
///
/// lambda_R / beta_R bound the Hessian spectrum of F_R over the ball
/// ||w|| <= R_w; lambda / beta are the dataset-free counterparts over all
/// datasets with row norms <= B. L bounds ||grad f(w, z)|| for the parameter
/// range the minimisers can reach; M is the Hessian Lipschitz constant.
struct CurvatureReport {
  double lambda = 0.0;
  double beta = 0.0;
  double kappa = std::numeric_limits<double>::infinity();
  double gamma = 1.0;

  double lambda_R = 0.0;
  double beta_R = 0.0;
  double kappa_R = std::numeric_limits<double>::infinity();
  double gamma_R = 1.0;

  double L = 0.0;
  double M = 0.0;

  /// Smallest and largest eigenvalue of X^T X (not normalised by n).
  double gram_min_eigenvalue = 0.0;
  double gram_max_eigenvalue = 0.0;
  /// C = 1 for MSE, (2 cosh(B R_w / 2))^-2 for logistic.
  double curvature_scale = 1.0;
  /// Conservative R-only floor used inside L for MSE.
  double lambda_min_aug = 0.0;
  Eigen::Index n = 0;

  bool degenerate() const { return !(lambda_R > 0.0); }
  bool L_finite() const { return std::isfinite(L); }
};

namespace detail {

inline void fill_condition(double lo, double hi, double& kappa, double& gamma) {
  if (!(lo > 0.0)) {
    kappa = std::numeric_limits<double>::infinity();
    gamma = 1.0;
    return;
  }
  kappa = std::max(1.0, hi / lo);
  gamma = (kappa - 1.0) / (kappa + 1.0);
}

}  // namespace detail

inline CurvatureReport curvature(const Dataset& data, const LossSpec& loss) {
  data.validate();
  loss.validate();
  const double n = static_cast<double>(data.n());
  const double B = data.bound_B;
  const Eigen::MatrixXd gram_matrix = data.X.transpose() * data.X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (gram_matrix + gram_matrix.transpose()),
                                                        Eigen::EigenvaluesOnly);
  double gmin = solver.eigenvalues()(0);
  const double gmax = std::max(0.0, solver.eigenvalues()(gram_matrix.rows() - 1));
  // Round-off on a rank-deficient Gram matrix shows up as tiny +-eps values.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       static_cast<double>(gram_matrix.rows()) * std::max(gmax, 1.0);
  if (gmin < floor) gmin = 0.0;

  CurvatureReport r;
  r.n = data.n();
  r.lambda = loss.lambda;
  r.gram_min_eigenvalue = gmin;
  r.gram_max_eigenvalue = gmax;
  if (loss.kind == LossKind::mse) {
    r.curvature_scale = 1.0;
    r.lambda_R = gmin / n + loss.lambda;
    r.beta_R = gmax / n + loss.lambda;
    r.beta = B * B + loss.lambda;
    // lambda_min(X'^T X' / (n+1) + lambda I) >= lambda_min(X^T X) / (n+1) + lambda
    // for any appended row, and ||w_{R'}|| <= B / that floor.
    r.lambda_min_aug = gmin / (n + 1.0) + loss.lambda;
    if (r.lambda_min_aug > 0.0) {
      const double w_bound = B / r.lambda_min_aug;
      r.L = (B * B + loss.lambda) * w_bound + B;
    } else {
      r.L = std::numeric_limits<double>::infinity();
    }
    r.M = 0.0;
  } else {
    const double c = 2.0 * std::cosh(B * data.bound_Rw / 2.0);
    r.curvature_scale = 1.0 / (c * c);
    r.lambda_R = r.curvature_scale * gmin / n + loss.lambda;
    r.beta_R = gmax / (4.0 * n) + loss.lambda;
    r.beta = B * B / 4.0 + loss.lambda;
    r.lambda_min_aug = r.curvature_scale * gmin / (n + 1.0) + loss.lambda;
    r.L = B + loss.lambda * data.bound_Rw;
    r.M = B * B * B / (6.0 * std::sqrt(3.0));
  }
  detail::fill_condition(r.lambda_R, r.beta_R, r.kappa_R, r.gamma_R);
  detail::fill_condition(r.lambda, r.beta, r.kappa, r.gamma);
  return r;
}

// Training ----------------------------------------------------------------------

struct TrainOptions {
  double tolerance = 1e-10;  // on the (projected) gradient norm
  int max_newton_iterations = 100;
  int max_multiplier_iterations = 200;
};

/// Minimiser of F_R over the ball ||w|| <= R_w.
struct ErmSolution {
  Eigen::VectorXd w;
  /// Norm of grad F_R(w) + multiplier * w (zero at the constrained optimum).
  double gradient_norm = 0.0;
  /// KKT multiplier of the ball constraint; zero when it does not bind.
  double multiplier = 0.0;
  bool constraint_active = false;
  int newton_iterations = 0;
};

namespace detail {

struct PenalisedSolve {
  Eigen::VectorXd w;
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// argmin F_R(w) + (mu/2)||w||^2 by damped Newton (closed form for MSE).
inline PenalisedSolve solve_penalised(const Dataset& data, const LossSpec& loss, double mu,
                                      const Eigen::VectorXd& start, const TrainOptions& opts,
                                      double divergence_norm) {
  LossSpec shifted = loss;
  shifted.lambda += mu;
  PenalisedSolve out;
  if (loss.kind == LossKind::mse) {
    Eigen::MatrixXd A = data.X.transpose() * data.X / static_cast<double>(data.n());
    A.diagonal().array() += shifted.lambda;
    const Eigen::VectorXd b = data.X.transpose() * data.y / static_cast<double>(data.n());
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw DegenerateError("MSE normal equations are singular");
    out.w = llt.solve(b);
    // One refinement step keeps the gradient at round-off level.
    out.w -= llt.solve(gradient(data, shifted, out.w));
    out.gradient_norm = gradient(data, shifted, out.w).norm();
    out.converged = true;
    out.iterations = 1;
    return out;
  }
  Eigen::VectorXd w = start;
  double f = objective(data, shifted, w);
  for (int it = 0; it < opts.max_newton_iterations; ++it) {
    const Eigen::VectorXd g = gradient(data, shifted, w);
    out.gradient_norm = g.norm();
    out.iterations = it;
    if (out.gradient_norm <= opts.tolerance) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd H = hessian(data, shifted, w);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd step = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(g) >= 0.0) step = -g;
    double t = 1.0;
    const double slope = step.dot(g);
    Eigen::VectorXd candidate = w + step;
    if (-slope <= 1e-13 * (1.0 + std::abs(f))) {
      // The predicted decrease is below round-off in F, so Armijo cannot
      // discriminate; this close in, the full Newton step is safe.
      w = candidate;
      f = objective(data, shifted, w);
      continue;
    }
    double fc = objective(data, shifted, candidate);
    while (fc > f + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      candidate = w + t * step;
      fc = objective(data, shifted, candidate);
    }
    if (!(fc <= f) && t <= 1e-12) {
      // No further descent is representable; accept the current point.
      out.converged = out.gradient_norm <= std::sqrt(opts.tolerance);
      break;
    }
    w = candidate;
    f = fc;
    if (w.norm() > divergence_norm) break;
  }
  out.w = w;
  const double gn = gradient(data, shifted, w).norm();
  out.gradient_norm = gn;
  if (gn <= opts.tolerance) out.converged = true;
  return out;
}

}  // namespace detail

/// Trains the ball-constrained ERM.
///
/// The unconstrained minimiser is used when it exists inside the ball.
/// Otherwise the KKT multiplier mu > 0 with ||w(mu)|| = R_w is found by a
/// safeguarded Newton iteration on 1/||w(mu)|| - 1/R_w, where w(mu)
/// minimises F_R + (mu/2)||w||^2 (the norm is decreasing in mu).
inline ErmSolution train(const Dataset& data, const LossSpec& loss, const TrainOptions& opts = {},
                         const Eigen::VectorXd* warm_start = nullptr) {
  const CurvatureReport curv = curvature(data, loss);
  if (curv.degenerate()) {
    throw DegenerateError(loss.kind == LossKind::mse
                              ? "singular system: lambda = 0 and X^T X is rank deficient"
                              : "logistic risk has no strong convexity on the ball "
                                "(lambda = 0 and X^T X rank deficient)");
  }
  const Eigen::Index d = data.d();
  const double Rw = data.bound_Rw;
  Eigen::VectorXd start = Eigen::VectorXd::Zero(d);
  if (warm_start != nullptr && warm_start->size() == d) start = *warm_start;

  ErmSolution sol;
  const auto free_solve = detail::solve_penalised(data, loss, 0.0, start, opts, 1e6 * Rw);
  if (free_solve.converged && free_solve.w.norm() <= Rw) {
    sol.w = free_solve.w;
    sol.gradient_norm = free_solve.gradient_norm;
    sol.newton_iterations = free_solve.iterations;
    return sol;
  }

  // Constrained branch.
  const double g0 = gradient(data, loss, Eigen::VectorXd::Zero(d)).norm();
  double mu_hi = std::max(g0 / Rw, 1e-300);
  double mu_lo = 0.0;
  double mu = mu_hi;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  int total_iterations = free_solve.iterations;
  detail::PenalisedSolve current;
  for (int it = 0; it < opts.max_multiplier_iterations; ++it) {
    current = detail::solve_penalised(data, loss, mu, w, opts, 1e6 * Rw);
    total_iterations += current.iterations;
    w = current.w;
    const double norm = w.norm();
    if (norm > Rw) {
      mu_lo = mu;
    } else {
      mu_hi = mu;
    }
    if (std::abs(norm - Rw) <= 1e-14 * Rw && current.converged) break;
    // Newton step on phi(mu) = 1/||w|| - 1/R_w with phi' = w^T (H + mu I)^-1 w / ||w||^3.
    LossSpec shifted = loss;
    shifted.lambda += mu;
    const Eigen::MatrixXd H = hessian(data, shifted, w);
    const double quad = w.dot(Eigen::LDLT<Eigen::MatrixXd>(H).solve(w));
    double next = mu;
    if (norm > 0.0 && quad > 0.0) {
      const double phi = 1.0 / norm - 1.0 / Rw;
      next = mu - phi * norm * norm * norm / quad;
    }
    const bool inside = next > mu_lo && next < mu_hi;
    if (!inside || !std::isfinite(next)) next = 0.5 * (mu_lo + mu_hi);
    if (next == mu || (mu_hi - mu_lo) <= 1e-15 * mu_hi) {
      if (current.converged) break;
    }
    mu = next;
  }
  if (!current.converged) {
    throw ConvergenceError("Newton did not converge on the ball-constrained ERM (gradient norm " +
                           format_sci(current.gradient_norm) + ")");
  }
  // Place the iterate exactly on the sphere; the multiplier absorbs the rest.
  if (w.norm() > Rw) w *= Rw / w.norm();
  sol.w = w;
  sol.multiplier = mu;
  sol.constraint_active = true;
  sol.newton_iterations = total_iterations;
  const Eigen::VectorXd g = gradient(data, loss, w);
  sol.gradient_norm = (g + mu * w).norm();
  return sol;
}

// Sensitivity bounds --------------------------------------------------------------

/// L / (n lambda_R), flagged unbounded when lambda_R or L degenerates.
inline SensitivityReport rs_erm(const CurvatureReport& report, Eigen::Index n) {
  if (n < 1) throw ConfigError("n must be positive");
  std::map<std::string, double> inputs{{"n", static_cast<double>(n)},
                                       {"L", report.L},
                                       {"lambda_R", report.lambda_R},
                                       {"lambda", report.lambda}};
  if (report.degenerate() || !report.L_finite()) {
    return SensitivityReport::make_unbounded(SensitivityKind::retain, "rs_erm", inputs);
  }
  return SensitivityReport::make(report.L / (static_cast<double>(n) * report.lambda_R),
                                 SensitivityKind::retain, "rs_erm", inputs);
}

/// L / (n lambda); unbounded at lambda = 0.
inline SensitivityReport gs_erm(double L, Eigen::Index n, double lambda) {
  if (n < 1) throw ConfigError("n must be positive");
  std::map<std::string, double> inputs{
      {"n", static_cast<double>(n)}, {"L", L}, {"lambda", lambda}};
  if (!(lambda > 0.0) || !std::isfinite(L)) {
    return SensitivityReport::make_unbounded(SensitivityKind::global, "gs_erm", inputs);
  }
  return SensitivityReport::make(L / (static_cast<double>(n) * lambda), SensitivityKind::global,
                                 "gs_erm", inputs);
}

/// Refined bound (lambda0 - sqrt(lambda0^2 - 4ML/n)) / (2M), with lambda0 the
/// smallest Hessian eigenvalue at the trained optimum. Evaluated as
/// 2L / (n (lambda0 + sqrt(lambda0^2 - 4ML/n))), which is exact for M = 0.
/// For analysis only: it needs the optimum, so it is never used to calibrate.
inline SensitivityReport rs_erm_root(double lambda0, double L, double M, Eigen::Index n) {
  if (n < 1) throw ConfigError("n must be positive");
  if (!(M >= 0.0) || !(L >= 0.0)) throw ConfigError("L and M must be nonnegative");
  const double threshold = 4.0 * M * L / static_cast<double>(n);
  const double disc = lambda0 * lambda0 - threshold;
  if (!(lambda0 > 0.0) || disc < 0.0) {
    const double deficit = threshold - lambda0 * lambda0;
    throw ConditionFailedError("root bound needs lambda0^2 >= 4ML/n (deficit " +
                                   format_sci(deficit) + ")",
                               deficit);
  }
  const double value = 2.0 * L / (static_cast<double>(n) * (lambda0 + std::sqrt(disc)));
  return SensitivityReport::make(value, SensitivityKind::retain, "rs_erm_root",
                                 {{"lambda0", lambda0},
                                  {"L", L},
                                  {"M", M},
                                  {"n", static_cast<double>(n)}});
}

/// Empirical stability: retrain on R + {z} for sampled z with ||x|| <= B,
/// |y| <= 1 and report the largest parameter move. Deterministic candidates
/// (+-B along the extreme eigendirections of X^T X and against the current
/// solution, both labels) come first, then `trial_count` random ones.
inline SensitivityReport oracle_stability(const Dataset& data, const LossSpec& loss,
                                          const CandidateSource& candidates, int trial_count,
                                          std::uint64_t seed, const TrainOptions& opts = {}) {
  const ErmSolution base = train(data, loss, opts);
  const Eigen::Index d = data.d();
  const double B = data.bound_B;
  const SymmetricEigen eig = symmetric_eigen(data.X.transpose() * data.X);

  std::vector<LabeledPoint> fixed;
  std::vector<Eigen::VectorXd> directions{eig.vectors.col(0), eig.vectors.col(d - 1)};
  if (base.w.norm() > 0.0) directions.push_back(base.w / base.w.norm());
  for (const Eigen::VectorXd& u : directions) {
    for (double sign : {1.0, -1.0}) {
      for (double label : {1.0, -1.0}) fixed.push_back({sign * B * u, label});
    }
  }

  double worst = 0.0;
  auto consider = [&](const LabeledPoint& z) {
    const ErmSolution moved = train(data.with(z.x, z.y), loss, opts, &base.w);
    worst = std::max(worst, (moved.w - base.w).norm());
  };
  for (const LabeledPoint& z : fixed) consider(z);
  CounterRng rng(seed);
  for (int t = 0; t < trial_count; ++t) consider(candidates(rng));
  return SensitivityReport::make(worst, SensitivityKind::oracle, "oracle_stability",
                                 {{"n", static_cast<double>(data.n())},
                                  {"trials", static_cast<double>(trial_count + fixed.size())},
                                  {"lambda", loss.lambda}});
}

/// Uniform candidates: x uniform in the radius-B ball (half of them on the
/// sphere), y uniform in [-1, 1] for MSE or a fair sign for logistic.
inline CandidateSource ball_candidates(Eigen::Index d, double bound_B, LossKind kind) {
  return [d, bound_B, kind](CounterRng& rng) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = rng.normal();
    double radius = bound_B;
    if (rng.uniform() < 0.5) radius *= std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const double norm = x.norm();
    if (norm > 0.0) x *= radius / norm;
    double y = rng.uniform() < 0.5 ? -1.0 : 1.0;
    if (kind == LossKind::mse && rng.uniform() < 0.5) y = rng.uniform(-1.0, 1.0);
    return LabeledPoint{x, y};
  };
}

}  // namespace unlearn
