#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/dataset.hpp"
#include "unlearn/erm.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/linalg.hpp"
#include "unlearn/mechanism.hpp"

namespace unlearn {

enum class Calibration { retain, global };

inline const char* to_string(Calibration c) { return c == Calibration::retain ? "retain" : "global"; }

/// Single-point deletion: full_data is R' = R + {z}, z = full_data row
/// `delete_index`.
struct UnlearnRequest {
  Dataset full_data;
  Eigen::Index delete_index = 0;
  LossSpec loss;
  PrivacyParams params;
  double sigma = 0.1;  // Descent-to-Delete noise level
  std::uint64_t seed = 0;

  void validate() const {
    if (delete_index < 0 || delete_index >= full_data.n()) {
      throw ConfigError("delete_index out of range");
    }
    if (full_data.n() < 2) throw DataError("deletion needs at least two rows");
    loss.validate();
    params.validate();
  }
};

/// Everything needed to reconstruct the calibration decision.
struct UnlearnAudit {
  std::string algorithm;
  Calibration calibration = Calibration::retain;
  int iterations = 0;
  double iterations_real = 0.0;  // before the ceiling
  double step_size = 0.0;
  double contraction = 0.0;
  double sigma = 0.0;
  SensitivityReport sensitivity;
  double hessian_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  bool projection_active = false;
  std::map<std::string, double> inputs;
};

struct UnlearnResult {
  Eigen::VectorXd w_out;
  Eigen::VectorXd w_prenoise;
  UnlearnAudit audit;
  PrivacyParams certified;
};

namespace detail {

struct CurvatureChoice {
  double lambda;
  double beta;
  double gamma;
};

inline CurvatureChoice pick(const CurvatureReport& r, Calibration c) {
  if (c == Calibration::retain) return {r.lambda_R, r.beta_R, r.gamma_R};
  return {r.lambda, r.beta, r.gamma};
}

inline Eigen::VectorXd project_ball(const Eigen::VectorXd& w, double radius, bool& active) {
  const double norm = w.norm();
  if (norm <= radius) return w;
  active = true;
  return w * (radius / norm);
}

}  // namespace detail

// Descent-to-Delete -----------------------------------------------------------

/// ln(C / (sigma b)) / ln(1/gamma), C = L / (n lambda): the real-valued step
/// count before the ceiling. May be negative when no step is needed.
inline double d2d_iterations_real(double L, Eigen::Index n, double lambda, double gamma,
                                  double sigma, const PrivacyParams& params) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(lambda > 0.0)) throw DegenerateError("strong convexity is zero; no contraction");
  if (!(gamma < 1.0)) throw DegenerateError("gradient descent is not contractive (gamma >= 1)");
  if (!(gamma > 0.0)) return 0.0;
  const double initial = L / (static_cast<double>(n) * lambda);
  return std::log(initial / (sigma * shift_factor(params))) / std::log(1.0 / gamma);
}

/// Smallest I with gamma^I L / (n lambda) <= sigma b(eps, delta).
inline int d2d_iterations(double L, Eigen::Index n, double lambda, double gamma, double sigma,
                          const PrivacyParams& params) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(lambda > 0.0)) throw DegenerateError("strong convexity is zero; no contraction");
  if (!(gamma < 1.0)) throw DegenerateError("gradient descent is not contractive (gamma >= 1)");
  const double initial = L / (static_cast<double>(n) * lambda);
  if (initial <= sigma * shift_factor(params)) return 0;
  if (!(gamma > 0.0)) return 1;  // kappa = 1: one step lands on the optimum
  const double real = d2d_iterations_real(L, n, lambda, gamma, sigma, params);
  return std::max(0, static_cast<int>(std::ceil(real)));
}

inline int d2d_iterations(const CurvatureReport& report, Eigen::Index n, double sigma,
                          const PrivacyParams& params, Calibration calibration) {
  const auto c = detail::pick(report, calibration);
  return d2d_iterations(report.L, n, c.lambda, c.gamma, sigma, params);
}

struct D2DOptions {
  /// Refuse to run configurations needing more steps than this.
  long max_iterations = 50'000'000;
  /// Optional sink for the pre-noise iterates w'_0, ..., w'_I.
  std::vector<Eigen::VectorXd>* trace = nullptr;
};

/// Descent-to-Delete: from the full-data optimum, I projected gradient steps
/// on F_R with eta = 2 / (lambda + beta), then N(0, sigma^2 I).
inline UnlearnResult unlearn_d2d(const UnlearnRequest& request, Calibration calibration,
                                 const D2DOptions& opts = {}) {
  request.validate();
  const Dataset retain = request.full_data.without(request.delete_index);
  const CurvatureReport curv = curvature(retain, request.loss);
  const auto c = detail::pick(curv, calibration);
  if (!(c.lambda > 0.0)) {
    throw DegenerateError(std::string("Descent-to-Delete needs positive ") +
                          (calibration == Calibration::retain ? "lambda_R" : "lambda"));
  }
  if (!curv.L_finite()) throw DegenerateError("Lipschitz constant is unbounded");
  const Eigen::Index n = retain.n();
  const int iterations = d2d_iterations(curv.L, n, c.lambda, c.gamma, request.sigma, request.params);
  if (iterations > opts.max_iterations) {
    throw ConfigError("Descent-to-Delete needs " + std::to_string(iterations) +
                      " steps, above the configured cap");
  }

  UnlearnResult out;
  out.certified = request.params;
  UnlearnAudit& audit = out.audit;
  audit.algorithm = "d2d";
  audit.calibration = calibration;
  audit.iterations = iterations;
  audit.iterations_real = c.gamma > 0.0 ? d2d_iterations_real(curv.L, n, c.lambda, c.gamma,
                                                              request.sigma, request.params)
                                        : 0.0;
  audit.step_size = 2.0 / (c.lambda + c.beta);
  audit.contraction = c.gamma;
  audit.sigma = request.sigma;
  audit.sensitivity =
      calibration == Calibration::retain ? rs_erm(curv, n) : gs_erm(curv.L, n, curv.lambda);
  audit.inputs = {{"L", curv.L},
                  {"n", static_cast<double>(n)},
                  {"lambda", c.lambda},
                  {"beta", c.beta},
                  {"gamma", c.gamma},
                  {"b", shift_factor(request.params)}};

  Eigen::VectorXd w = train(request.full_data, request.loss).w;
  if (opts.trace != nullptr) opts.trace->assign(1, w);
  const double radius = retain.bound_Rw;
  for (int t = 0; t < iterations; ++t) {
    w = detail::project_ball(w - audit.step_size * gradient(retain, request.loss, w), radius,
                             audit.projection_active);
    if (opts.trace != nullptr) opts.trace->push_back(w);
  }
  out.w_prenoise = w;
  out.w_out = w + draw_noise_vector(request.sigma, static_cast<std::size_t>(w.size()),
                                    request.seed);
  return out;
}

// Newton step -------------------------------------------------------------------

/// M L^2 / (lambda^3 n^2) with lambda = lambda_R (retain) or lambda (global).
inline SensitivityReport newton_sensitivity(const CurvatureReport& report, Eigen::Index n,
                                            Calibration calibration) {
  if (n < 1) throw ConfigError("n must be positive");
  const double lambda = detail::pick(report, calibration).lambda;
  const SensitivityKind kind =
      calibration == Calibration::retain ? SensitivityKind::retain : SensitivityKind::global;
  std::map<std::string, double> inputs{{"M", report.M},
                                       {"L", report.L},
                                       {"lambda", lambda},
                                       {"n", static_cast<double>(n)}};
  if (!(lambda > 0.0) || !report.L_finite()) {
    return SensitivityReport::make_unbounded(kind, "newton_sensitivity", inputs);
  }
  const double nn = static_cast<double>(n);
  return SensitivityReport::make(report.M * report.L * report.L / (lambda * lambda * lambda * nn * nn),
                                 kind, "newton_sensitivity", inputs);
}

/// sigma = c_{eps,delta} M L^2 / (lambda^3 n^2). M = 0 (quadratic loss) gives
/// sigma = 0: the Newton step is then exact.
inline NoiseSpec newton_sigma(const CurvatureReport& report, Eigen::Index n, Eigen::Index dim,
                              const PrivacyParams& params, Calibration calibration) {
  const SensitivityReport s = newton_sensitivity(report, n, calibration);
  if (!s.finite()) throw DegenerateError("Newton noise is unbounded: zero strong convexity");
  // Calibrating to a global bound is legitimate here: it is the baseline.
  return gaussian_sigma(s, params, NoiseShape::vector, static_cast<std::size_t>(dim));
}

/// H_hat = ((n + 1) Hess F_{R'}(w) - Hess f(w, z)) / n, which equals Hess F_R(w).
inline Eigen::MatrixXd recover_hessian(const Dataset& full, Eigen::Index delete_index,
                                       const LossSpec& loss, const Eigen::VectorXd& w) {
  const double n = static_cast<double>(full.n() - 1);
  const Eigen::MatrixXd H =
      ((n + 1.0) * hessian(full, loss, w) -
       point_hessian(loss, full.X.row(delete_index).transpose(), full.y[delete_index], w)) /
      n;
  return 0.5 * (H + H.transpose());
}

/// One Newton step toward the retain optimum, then Gaussian noise.
/// When the ball constraint binds at w_{R'} the step is still taken and the
/// result is projected back onto the ball; the audit flags it.
inline UnlearnResult unlearn_newton(const UnlearnRequest& request, Calibration calibration) {
  request.validate();
  const Dataset retain = request.full_data.without(request.delete_index);
  const CurvatureReport curv = curvature(retain, request.loss);
  const Eigen::Index n = retain.n();
  const NoiseSpec noise = newton_sigma(curv, n, retain.d(), request.params, calibration);

  const ErmSolution full = train(request.full_data, request.loss);
  const Eigen::MatrixXd H_hat =
      recover_hessian(request.full_data, request.delete_index, request.loss, full.w);
  const double lmin = min_eigenvalue(H_hat);
  if (!(lmin > 0.0)) {
    throw DegenerateError("recovered Hessian is not positive definite (lambda_min = " +
                          format_sci(lmin) + ")");
  }
  const Eigen::VectorXd z = request.full_data.X.row(request.delete_index).transpose();
  const double zy = request.full_data.y[request.delete_index];
  const Eigen::VectorXd g = point_gradient(request.loss, z, zy, full.w);
  Eigen::VectorXd w = full.w + H_hat.llt().solve(g) / static_cast<double>(n);

  UnlearnResult out;
  out.certified = request.params;
  UnlearnAudit& audit = out.audit;
  audit.algorithm = "newton";
  audit.calibration = calibration;
  audit.sigma = noise.sigma;
  audit.sensitivity = newton_sensitivity(curv, n, calibration);
  audit.hessian_min_eigenvalue = lmin;
  audit.projection_active = full.constraint_active;
  w = detail::project_ball(w, retain.bound_Rw, audit.projection_active);
  audit.inputs = noise.audit;
  out.w_prenoise = w;
  out.w_out = noise.sigma > 0.0
                  ? Eigen::VectorXd(w + draw_noise_vector(noise.sigma,
                                                          static_cast<std::size_t>(w.size()),
                                                          request.seed))
                  : w;
  return out;
}

/// Fraction of rows with sign(x^T w) == y (labels +-1).
inline double accuracy(const Dataset& data, const Eigen::VectorXd& w) {
  const Eigen::VectorXd s = data.X * w;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if ((s[i] >= 0.0 ? 1.0 : -1.0) == data.y[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.n());
}

}  // namespace unlearn
