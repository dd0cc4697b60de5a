#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/dataset.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/harness/csv.hpp"
#include "unlearn/median.hpp"
#include "unlearn/mst.hpp"
#include "unlearn/rng.hpp"

namespace unlearn::harness {

struct CsvOptions {
  /// Header name or zero-based column index; empty means unlabelled data.
  std::string label_column;
  bool standardize = false;
  /// Map labels to -1 (y <= 0) or +1 (y > 0).
  bool binarize_labels = false;
  /// Divide labels by their largest magnitude so they lie in [-1, 1].
  bool scale_labels = false;
  std::optional<int> jl_target_dim;
  /// Rescale all rows by B / (largest row norm) after every other step.
  bool project_to_B = false;
  /// Subtract column means (applied after standardisation and projection,
  /// before the B rescale).
  bool center = false;
  double bound_B = 1.0;
  double bound_Rw = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian random projection: X G with G_ij ~ N(0, 1 / target_dim).
inline Eigen::MatrixXd jl_project(const Eigen::MatrixXd& X, int target_dim, std::uint64_t seed) {
  if (target_dim < 1) throw ConfigError("JL target dimension must be positive");
  CounterRng rng(seed);
  Eigen::MatrixXd G(X.cols(), target_dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(target_dim));
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = sd * rng.normal();
  }
  return X * G;
}

/// Column z-scores; constant columns are left centred at zero.
inline void standardize_columns(Eigen::MatrixXd& X) {
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(X.rows()));
    if (sd > 0.0) X.col(j) /= sd;
  }
}

inline void rescale_into_ball(Eigen::MatrixXd& X, double bound_B) {
  const double max_norm = X.rows() == 0 ? 0.0 : X.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) X *= bound_B / max_norm;
}

inline Dataset ingest_csv(const std::filesystem::path& path, const CsvOptions& opts = {}) {
  const Table table = read_table(path);
  if (table.rows.empty()) throw DataError(path.string() + ": no data rows");
  const std::size_t width = table.rows.front().size();

  std::optional<std::size_t> label;
  if (!opts.label_column.empty()) {
    const auto it = std::find(table.header.begin(), table.header.end(), opts.label_column);
    if (it != table.header.end()) {
      label = static_cast<std::size_t>(it - table.header.begin());
    } else if (const auto idx = parse_double(opts.label_column);
               idx && *idx >= 0 && *idx == std::floor(*idx) && *idx < static_cast<double>(width)) {
      label = static_cast<std::size_t>(*idx);
    } else {
      throw DataError(path.string() + ": missing label column '" + opts.label_column + "'");
    }
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto d = static_cast<Eigen::Index>(width - (label ? 1 : 0));
  if (d < 1) throw DataError(path.string() + ": no feature columns");
  Dataset data;
  data.bound_B = opts.bound_B;
  data.bound_Rw = opts.bound_Rw;
  data.X.resize(n, d);
  if (label) data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (label && j == *label) {
        data.y[i] = row[j];
      } else {
        data.X(i, c++) = row[j];
      }
    }
  }
  data.metadata["source"] = path.string();
  if (label) data.metadata["label_column"] = opts.label_column;

  if (label && opts.binarize_labels) {
    for (Eigen::Index i = 0; i < n; ++i) data.y[i] = data.y[i] > 0.0 ? 1.0 : -1.0;
    data.metadata["labels"] = "binarized";
  } else if (label && opts.scale_labels) {
    const double m = data.y.cwiseAbs().maxCoeff();
    if (m > 0.0) data.y /= m;
    data.metadata["labels"] = "scaled";
  }
  if (opts.standardize) {
    standardize_columns(data.X);
    data.metadata["standardize"] = "true";
  }
  if (opts.jl_target_dim) {
    data.X = jl_project(data.X, *opts.jl_target_dim, opts.seed);
    data.metadata["jl_target_dim"] = std::to_string(*opts.jl_target_dim);
    data.metadata["jl_seed"] = std::to_string(opts.seed);
  }
  if (opts.center) {
    data.X.rowwise() -= data.X.colwise().mean();
    data.metadata["center"] = "true";
  }
  if (opts.project_to_B) {
    rescale_into_ball(data.X, opts.bound_B);
    data.metadata["project_to_B"] = format_double(opts.bound_B);
  }
  data.validate(/*require_labels=*/label.has_value());
  return data;
}

struct EdgeList {
  WeightedGraph graph;
  std::vector<std::string> names;  // dense id -> original id
  std::vector<std::string> warnings;
};

/// Reads `u v w` lines (whitespace or comma separated, '#' comments).
/// Vertex ids are interned in order of first appearance. A repeated pair
/// keeps its smallest weight and adds a warning. B defaults to the largest
/// weight in the file.
inline EdgeList ingest_edges(const std::filesystem::path& path,
                             std::optional<double> bound_B = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  EdgeList out;
  std::unordered_map<std::string, std::size_t> ids;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_index;
  auto intern = [&](const std::string& name) {
    const auto [it, inserted] = ids.emplace(name, out.names.size());
    if (inserted) out.names.push_back(name);
    return it->second;
  };
  std::string line;
  std::size_t line_no = 0;
  double max_weight = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::string normalized(t);
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    const auto tok = split_whitespace(normalized);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (tok.size() != 3) throw DataError(where + ": expected 'u v w'");
    const auto w = parse_double(tok[2]);
    if (!w || !std::isfinite(*w)) throw DataError(where + ": non-numeric weight '" + tok[2] + "'");
    if (*w < 0.0) throw DataError(where + ": negative weight");
    const std::size_t u = intern(tok[0]);
    const std::size_t v = intern(tok[1]);
    if (u == v) {
      out.warnings.push_back(where + ": self-loop skipped");
      continue;
    }
    const auto key = std::minmax(u, v);
    const auto found = pair_index.find(key);
    if (found != pair_index.end()) {
      Edge& e = out.graph.edges[found->second];
      out.warnings.push_back(where + ": duplicate edge " + tok[0] + "-" + tok[1] +
                             " (keeping the smaller weight)");
      e.weight = std::min(e.weight, *w);
      continue;
    }
    pair_index.emplace(key, out.graph.edges.size());
    out.graph.edges.push_back({key.first, key.second, *w});
    max_weight = std::max(max_weight, *w);
  }
  out.graph.vertex_count = out.names.size();
  out.graph.bound_B = bound_B ? *bound_B : max_weight;
  if (!(out.graph.bound_B > 0.0)) {
    throw DataError(path.string() + ": B must be positive (all weights are zero?)");
  }
  out.graph.validate();
  return out;
}

/// One value per line, or the first column of a CSV; header auto-detected.
inline ScalarSample read_scalars(const std::filesystem::path& path, double bound_B) {
  const Table table = read_table(path);
  ScalarSample s;
  s.bound_B = bound_B;
  for (const auto& row : table.rows) s.values.push_back(row.front());
  s.validate();
  return s;
}

}  // namespace unlearn::harness
