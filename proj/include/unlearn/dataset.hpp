#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/errors.hpp"

namespace unlearn {

/// Feature matrix (n x d, one example per row), labels, and the boundedness
/// constants the sensitivity bounds consume: B bounds every row norm and R_w
/// bounds the parameter norm.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double bound_B = 1.0;
  double bound_Rw = 1.0;
  /// Free-form provenance (preprocessing steps, seeds, source path).
  std::map<std::string, std::string> metadata;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }

  double max_row_norm() const { return X.rows() == 0 ? 0.0 : X.rowwise().norm().maxCoeff(); }

  /// Row norms within B (relative slack 1e-12); labels, when present, within [-1, 1].
  void validate(bool require_labels = true) const {
    if (!(bound_B > 0.0)) throw ConfigError("bound B must be positive");
    if (!(bound_Rw > 0.0)) throw ConfigError("bound R_w must be positive");
    if (X.rows() < 1) throw DataError("dataset needs at least one row");
    if (!X.allFinite()) throw DataError("dataset contains non-finite features");
    if (max_row_norm() > bound_B * (1.0 + 1e-12)) {
      throw DataError("a row norm exceeds the bound B");
    }
    if (require_labels || y.size() != 0) {
      if (y.size() != X.rows()) throw DataError("label count does not match row count");
      if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
        throw DataError("labels must lie in [-1, 1]");
      }
    }
  }

  /// Copy without row `index`.
  Dataset without(Eigen::Index index) const {
    if (index < 0 || index >= n()) throw ConfigError("row index out of range");
    Dataset out;
    out.bound_B = bound_B;
    out.bound_Rw = bound_Rw;
    out.metadata = metadata;
    out.X.resize(n() - 1, d());
    out.y.resize(y.size() == n() ? n() - 1 : 0);
    for (Eigen::Index i = 0, r = 0; i < n(); ++i) {
      if (i == index) continue;
      out.X.row(r) = X.row(i);
      if (out.y.size() > 0) out.y[r] = y[i];
      ++r;
    }
    return out;
  }

  /// Copy with one extra example appended.
  Dataset with(const Eigen::VectorXd& x, double label) const {
    Dataset out = *this;
    out.X.conservativeResize(n() + 1, Eigen::NoChange);
    out.X.row(n()) = x.transpose();
    out.y.conservativeResize(n() + 1);
    out.y[n()] = label;
    return out;
  }

  /// First `count` rows.
  Dataset head(Eigen::Index count) const {
    Dataset out = *this;
    out.X = X.topRows(count);
    if (y.size() == n()) out.y = y.head(count);
    return out;
  }
};

}  // namespace unlearn
