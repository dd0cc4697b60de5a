#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/median.hpp"
#include "unlearn/mst.hpp"
#include "unlearn/rng.hpp"

namespace unlearn::harness {

enum class LabelKind { none, real, binary };

inline Eigen::VectorXd random_unit(CounterRng& rng, Eigen::Index d) {
  Eigen::VectorXd u(d);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Eigen::Index i = 0; i < d; ++i) u[i] = rng.normal();
    norm = u.norm();
  }
  return u / norm;
}

/// Gaussian rows N(0, B^2 D / d) clipped into the B-ball, D = diag(decay^j)
/// (isotropic for decay = 1), with labels
/// from a random unit direction w*: y = clip(<w*, x> sqrt(d) / 3 + 0.1 noise)
/// (real) or its sign (binary). With `center` the rows are mean-centred and
/// rescaled to keep every norm within B.
inline Dataset gaussian_blob(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                             LabelKind labels = LabelKind::real, double bound_B = 1.0,
                             double bound_Rw = 1.0, bool center = false, double decay = 1.0) {
  if (n < 1 || d < 1) throw ConfigError("gaussian_blob needs n, d >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("spectrum decay must lie in (0, 1]");
  CounterRng rng(seed);
  CounterRng label_rng = rng.split("labels");
  const Eigen::VectorXd w_star = random_unit(label_rng, d);
  Dataset data;
  data.bound_B = bound_B;
  data.bound_Rw = bound_Rw;
  data.X.resize(n, d);
  const double sd = bound_B / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    double scale = sd;
    for (Eigen::Index j = 0; j < d; ++j, scale *= decay) data.X(i, j) = scale * rng.normal();
    const double norm = data.X.row(i).norm();
    if (norm > bound_B) data.X.row(i) *= bound_B / norm;
  }
  if (center) {
    data.X.rowwise() -= data.X.colwise().mean();
    const double max_norm = data.X.rowwise().norm().maxCoeff();
    if (max_norm > bound_B) data.X *= bound_B / max_norm;
  }
  if (labels != LabelKind::none) {
    data.y.resize(n);
    const double scale = std::sqrt(static_cast<double>(d)) / (3.0 * bound_B);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = scale * data.X.row(i).dot(w_star) + 0.1 * label_rng.normal();
      data.y[i] = labels == LabelKind::binary ? (s >= 0.0 ? 1.0 : -1.0) : std::clamp(s, -1.0, 1.0);
    }
  }
  data.metadata["generator"] = "gaussian_blob";
  data.metadata["seed"] = std::to_string(seed);
  return data;
}

/// Linearly separable data through the origin with true margin exactly
/// gamma: x uniform in the radius-B ball, y = sign(x_1), points with
/// |x_1| < gamma rejected. The direction is u = e_1.
inline Dataset margin_separable(Eigen::Index n, Eigen::Index d, double gamma, std::uint64_t seed,
                                double bound_B = 1.0) {
  if (n < 1 || d < 1) throw ConfigError("margin_separable needs n, d >= 1");
  if (!(gamma > 0.0) || !(gamma < bound_B)) {
    throw ConfigError("margin gamma must lie in (0, B)");
  }
  CounterRng rng(seed);
  Dataset data;
  data.bound_B = bound_B;
  data.X.resize(n, d);
  data.y.resize(n);
  const long budget = 100000L + 10000L * static_cast<long>(n);
  long attempts = 0;
  for (Eigen::Index i = 0; i < n;) {
    if (++attempts > budget) {
      throw DataError("margin_separable: rejection budget exhausted; gamma too large for d");
    }
    const Eigen::VectorXd u = random_unit(rng, d);
    const double r = bound_B * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const Eigen::VectorXd x = r * u;
    if (std::abs(x[0]) < gamma) continue;
    data.X.row(i) = x.transpose();
    data.y[i] = x[0] > 0.0 ? 1.0 : -1.0;
    ++i;
  }
  data.metadata["generator"] = "margin_separable";
  data.metadata["gamma"] = std::to_string(gamma);
  data.metadata["seed"] = std::to_string(seed);
  return data;
}

/// One fresh point from the margin_separable law (for oracle additions).
inline std::pair<Eigen::VectorXd, double> margin_point(CounterRng& rng, Eigen::Index d,
                                                       double gamma, double bound_B = 1.0) {
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const Eigen::VectorXd u = random_unit(rng, d);
    const double r = bound_B * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const Eigen::VectorXd x = r * u;
    if (std::abs(x[0]) >= gamma) return {x, x[0] > 0.0 ? 1.0 : -1.0};
  }
  throw DataError("margin_point: rejection budget exhausted");
}

inline ScalarSample uniform_scalar(std::size_t n, std::uint64_t seed, double bound_B = 1.0) {
  if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
  CounterRng rng(seed);
  ScalarSample s;
  s.bound_B = bound_B;
  s.values.resize(n);
  for (double& v : s.values) v = rng.uniform(0.0, bound_B);
  return s;
}

/// Erdos-Renyi G(n, p) with weights uniform on [0, B], redrawn until
/// connected. With `levels` > 0 the weights take values B k / levels for
/// k in {1, ..., levels}, so B = levels gives integer weights and exact
/// floating-point sums.
inline WeightedGraph random_graph(std::size_t n, double p, std::uint64_t seed,
                                  double bound_B = 1.0, int levels = 0) {
  if (n < 2) throw ConfigError("random_graph needs at least 2 vertices");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("edge probability must lie in (0, 1]");
  if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
  CounterRng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    WeightedGraph g;
    g.vertex_count = n;
    g.bound_B = bound_B;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) {
        if (rng.uniform() >= p) continue;
        const double w = levels > 0
                             ? bound_B * static_cast<double>(1 + rng.below(static_cast<std::uint64_t>(levels))) /
                                   static_cast<double>(levels)
                             : rng.uniform(0.0, bound_B);
        g.edges.push_back({u, v, w});
      }
    }
    if (is_connected(g)) return g;
  }
  throw DataError("random_graph: no connected draw in 1000 attempts; raise p");
}

}  // namespace unlearn::harness
