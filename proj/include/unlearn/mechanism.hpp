#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

/// Target (epsilon, delta) for an unlearning certificate.
struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 1e-5;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ConfigError("epsilon must be a positive finite number");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw ConfigError("delta must lie in (0, 1)");
    }
  }

  friend bool operator==(const PrivacyParams&, const PrivacyParams&) = default;
};

enum class SensitivityKind { retain, global, oracle };

inline const char* to_string(SensitivityKind kind) {
  switch (kind) {
    case SensitivityKind::retain: return "retain";
    case SensitivityKind::global: return "global";
    case SensitivityKind::oracle: return "oracle";
  }
  return "unknown";
}

/// A sensitivity value together with the formula arguments that produced it.
///
/// `unbounded` marks the degenerate regimes (zero regularisation with a
/// rank-deficient design, say) where no finite bound exists; `value` is
/// meaningless in that state and is kept at +inf so that comparisons still
/// order correctly.
struct SensitivityReport {
  double value = 0.0;
  SensitivityKind kind = SensitivityKind::retain;
  std::map<std::string, double> inputs;
  std::string source;
  bool unbounded = false;

  bool finite() const noexcept { return !unbounded && std::isfinite(value); }

  static SensitivityReport make(double value, SensitivityKind kind, std::string source,
                                std::map<std::string, double> inputs = {}) {
    if (!(value >= 0.0)) {
      throw DegenerateError(source + ": sensitivity must be nonnegative");
    }
    return {value, kind, std::move(inputs), std::move(source), false};
  }

  static SensitivityReport make_unbounded(SensitivityKind kind, std::string source,
                                          std::map<std::string, double> inputs = {}) {
    return {std::numeric_limits<double>::infinity(), kind, std::move(inputs),
            std::move(source), true};
  }
};

enum class NoiseShape { vector, symmetric_matrix };

/// Isotropic Gaussian noise law. `audit` carries the calibration inputs so a
/// reviewer can reconstruct sigma from the row alone.
struct NoiseSpec {
  double sigma = 0.0;
  NoiseShape shape = NoiseShape::vector;
  std::size_t dim = 1;
  std::map<std::string, double> audit;
  std::string audit_source;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// c_{eps,delta} = sqrt(2 ln(1.25/delta)) / eps, the classical Gaussian
/// mechanism multiplier. Only stated for eps in (0, 1].
inline double gaussian_multiplier(const PrivacyParams& params) {
  params.validate();
  if (params.epsilon > 1.0) {
    throw ConfigError(
        "the classical Gaussian multiplier requires epsilon in (0, 1]; "
        "use analytic_epsilon/max_shift for larger epsilon");
  }
  return std::sqrt(2.0 * std::log(1.25 / params.delta)) / params.epsilon;
}

/// sigma = sensitivity * c_{eps,delta}.
inline NoiseSpec gaussian_sigma(const SensitivityReport& sensitivity, const PrivacyParams& params,
                                NoiseShape shape = NoiseShape::vector, std::size_t dim = 1) {
  if (!sensitivity.finite()) {
    throw DegenerateError("cannot calibrate noise to an unbounded sensitivity (" +
                          sensitivity.source + ")");
  }
  if (sensitivity.value < 0.0) throw ConfigError("sensitivity must be nonnegative");
  if (dim == 0) throw ConfigError("noise dimension must be at least 1");
  NoiseSpec spec;
  spec.sigma = sensitivity.value * gaussian_multiplier(params);
  spec.shape = shape;
  spec.dim = dim;
  spec.audit = sensitivity.inputs;
  spec.audit["sensitivity"] = sensitivity.value;
  spec.audit["epsilon"] = params.epsilon;
  spec.audit["delta"] = params.delta;
  spec.audit_source = sensitivity.source;
  return spec;
}

/// b(eps, delta) = sqrt(2 ln(1/delta) + 2 eps) - sqrt(2 ln(1/delta)),
/// evaluated in the cancellation-free form 2 eps / (sqrt(a^2 + 2 eps) + a).
inline double shift_factor(const PrivacyParams& params) {
  params.validate();
  const double a = std::sqrt(2.0 * std::log(1.0 / params.delta));
  return 2.0 * params.epsilon / (std::sqrt(a * a + 2.0 * params.epsilon) + a);
}

/// Certified epsilon for two N(mu_i, sigma^2 I) laws with |mu_1 - mu_2| = shift
/// (Gaussian tail bound; valid for every epsilon > 0).
inline double analytic_epsilon(double shift, double sigma, double delta) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(shift >= 0.0)) throw ConfigError("shift must be nonnegative");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  const double ratio = shift / sigma;
  return 0.5 * ratio * ratio + ratio * std::sqrt(2.0 * std::log(1.0 / delta));
}

/// Largest mean shift certifiable at (eps, delta) with noise sigma.
inline double max_shift(const PrivacyParams& params, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  return sigma * shift_factor(params);
}

/// Isotropic N(0, sigma^2) vector of length `dim`.
inline Eigen::VectorXd draw_noise_vector(double sigma, std::size_t dim, std::uint64_t seed) {
  CounterRng rng(seed);
  Eigen::VectorXd out(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = sigma * rng.normal();
  return out;
}

/// Symmetric dim x dim matrix: upper triangle (diagonal included) i.i.d.
/// N(0, sigma^2), mirrored to the lower triangle.
inline Eigen::MatrixXd draw_noise_symmetric(double sigma, std::size_t dim, std::uint64_t seed) {
  CounterRng rng(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      const double v = sigma * rng.normal();
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

/// Draw according to `spec`. Vector-shaped specs come back as a dim x 1 matrix.
inline Eigen::MatrixXd draw_noise(const NoiseSpec& spec, std::uint64_t seed) {
  if (!(spec.sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");
  if (spec.dim == 0) throw ConfigError("noise dimension must be at least 1");
  if (spec.shape == NoiseShape::vector) return draw_noise_vector(spec.sigma, spec.dim, seed);
  return draw_noise_symmetric(spec.sigma, spec.dim, seed);
}

/// Noise law certifying (eps, delta)-unlearning from a retain report.
///
/// The report must depend on the retain set only, so the unlearn branch and
/// the retrain branch draw from the same law. Oracle (local) values depend on
/// the particular addition and global values do not need this path.
inline NoiseSpec certify_unlearning(const SensitivityReport& rs, const PrivacyParams& params,
                                    NoiseShape shape = NoiseShape::vector, std::size_t dim = 1) {
  if (rs.kind != SensitivityKind::retain) {
    throw CalibrationError(std::string("certify_unlearning needs a retain report, got ") +
                           to_string(rs.kind) +
                           "; calibrating to an oracle or local value is unsound across the "
                           "unlearn and retrain branches");
  }
  return gaussian_sigma(rs, params, shape, dim);
}

inline std::string describe(const NoiseSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "sigma=" << spec.sigma << " dim=" << spec.dim
     << " shape=" << (spec.shape == NoiseShape::vector ? "vector" : "symmetric") << " source="
     << spec.audit_source;
  for (const auto& [k, v] : spec.audit) os << ' ' << k << '=' << v;
  return os.str();
}

}  // namespace unlearn
