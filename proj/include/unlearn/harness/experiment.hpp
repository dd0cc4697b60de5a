#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "unlearn/active.hpp"
#include "unlearn/dataset.hpp"
#include "unlearn/erm.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/harness/csv.hpp"
#include "unlearn/harness/ingest.hpp"
#include "unlearn/harness/synthetic.hpp"
#include "unlearn/mechanism.hpp"
#include "unlearn/median.hpp"
#include "unlearn/mst.hpp"
#include "unlearn/pca.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/svm.hpp"

namespace unlearn::harness {

enum class ExperimentKind {
  passive_mse,
  passive_logloss,
  passive_svm,
  passive_mst,
  passive_pca,
  passive_median,
  active_d2d,
  active_newton,
};

inline constexpr std::array kAllExperiments{
    ExperimentKind::passive_mse,    ExperimentKind::passive_logloss, ExperimentKind::passive_svm,
    ExperimentKind::passive_mst,    ExperimentKind::passive_pca,     ExperimentKind::passive_median,
    ExperimentKind::active_d2d,     ExperimentKind::active_newton};

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::passive_mse: return "passive_mse";
    case ExperimentKind::passive_logloss: return "passive_logloss";
    case ExperimentKind::passive_svm: return "passive_svm";
    case ExperimentKind::passive_mst: return "passive_mst";
    case ExperimentKind::passive_pca: return "passive_pca";
    case ExperimentKind::passive_median: return "passive_median";
    case ExperimentKind::active_d2d: return "active_d2d";
    case ExperimentKind::active_newton: return "active_newton";
  }
  return "unknown";
}

inline ExperimentKind parse_experiment(const std::string& name) {
  for (ExperimentKind k : kAllExperiments) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

/// Experiments whose cells vary lambda.
inline bool uses_lambda(ExperimentKind k) {
  return k == ExperimentKind::passive_mse || k == ExperimentKind::passive_logloss ||
         k == ExperimentKind::active_d2d || k == ExperimentKind::active_newton;
}

/// Where the data come from. `kind` is a synthetic generator name
/// (gaussian_blob, margin_separable, uniform_scalar, random_graph), one of
/// the file formats (csv, edges, scalars), or "auto" for the experiment's
/// natural generator.
struct DatasetSpec {
  std::string kind = "auto";
  std::string path;
  std::string label_column;
  bool standardize = false;
  bool project_to_B = true;
  std::optional<int> jl_target_dim;
  Eigen::Index dim = 10;          // synthetic feature dimension
  double gamma = 0.1;             // true margin for margin_separable / SVM
  double edge_probability = 0.2;  // random_graph
  std::size_t graph_vertices = 0; // 0: twice the largest n
  int weight_levels = 0;          // random_graph integer weight levels
  std::optional<double> edge_bound_B;
  /// Per-coordinate standard deviation ratio of gaussian_blob; unset means
  /// 0.7 for PCA (a visible eigengap) and 1 (isotropic) otherwise.
  std::optional<double> spectrum_decay;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::passive_mse;
  DatasetSpec dataset;
  std::vector<long> n_grid{200, 500, 700, 1000, 1500};
  std::vector<double> lambda_grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  PrivacyParams privacy;
  double sigma = 0.1;
  double bound_B = 1.0;
  double bound_Rw = 1.0;
  Eigen::Index pca_k = 1;
  int oracle_trials = 0;  // 0 disables the oracle column
  double min_density = 0.1;
  std::string active_loss = "logistic";
  int test_size = 1000;  // Newton accuracy evaluation
  std::filesystem::path output_dir = "results";
  std::string output_name;  // defaults to the experiment name
  unsigned workers = 1;
  std::uint64_t master_seed = 0;
  bool timing = false;

  void validate() const {
    if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
    if (uses_lambda(experiment) && lambda_grid.empty()) {
      throw ConfigError("lambda_grid must not be empty");
    }
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    for (long n : n_grid) {
      if (n < 1) throw ConfigError("n values must be positive");
    }
    for (double l : lambda_grid) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda values must be >= 0");
    }
    privacy.validate();
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(bound_B > 0.0) || !(bound_Rw > 0.0)) throw ConfigError("bounds must be positive");
    if (oracle_trials < 0) throw ConfigError("oracle_trials must be >= 0");
    if (active_loss != "mse" && active_loss != "logistic") {
      throw ConfigError("active loss must be mse or logistic");
    }
    if (dataset.dim < 1) throw ConfigError("dataset dimension must be positive");
  }

  std::string dataset_id() const {
    const std::string& k = dataset.kind;
    if (k == "csv" || k == "edges" || k == "scalars") {
      return std::filesystem::path(dataset.path).stem().string();
    }
    return resolved_kind() + (resolved_kind() == "gaussian_blob" || resolved_kind() == "margin_separable"
                                  ? "_d" + std::to_string(dataset.dim)
                                  : std::string());
  }

  std::string resolved_kind() const {
    if (dataset.kind != "auto") return dataset.kind;
    switch (experiment) {
      case ExperimentKind::passive_svm: return "margin_separable";
      case ExperimentKind::passive_mst: return "random_graph";
      case ExperimentKind::passive_median: return "uniform_scalar";
      default: return "gaussian_blob";
    }
  }
};

/// One sweep cell. Optional columns are empty in the CSV when absent.
struct ReportRow {
  std::string experiment;
  std::string dataset;
  long n = 0;
  std::optional<double> lambda;
  std::uint64_t seed = 0;
  std::optional<double> rs_value;
  std::optional<double> gs_value;
  std::optional<double> ratio;
  std::optional<double> oracle_value;
  std::optional<long> iterations;
  std::optional<double> sigma;
  std::optional<double> accuracy;
  std::optional<double> accuracy_retrain;
  std::optional<double> gram_min_eig;
  std::optional<double> gram_min_eig_over_n;
  std::optional<double> wall_time;
  std::string error;
};

inline constexpr const char* kSchemaLine = "# schema: unlearn-report v1";

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "experiment", "dataset",        "n",           "lambda",   "seed",
      "rs_value",   "gs_value",       "ratio",       "oracle_value", "iterations",
      "sigma",      "accuracy",       "accuracy_retrain", "gram_min_eig", "gram_min_eig_over_n",
      "wall_time",  "error"};
  return cols;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}
inline std::string cell(const std::optional<long>& v) {
  return v ? std::to_string(*v) : std::string();
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

}  // namespace detail

inline std::string render_report(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << kSchemaLine << '\n' << detail::join(report_columns()) << '\n';
  for (const ReportRow& r : rows) {
    os << detail::join({csv_escape(r.experiment), csv_escape(r.dataset), std::to_string(r.n),
                        detail::cell(r.lambda), std::to_string(r.seed), detail::cell(r.rs_value),
                        detail::cell(r.gs_value), detail::cell(r.ratio),
                        detail::cell(r.oracle_value), detail::cell(r.iterations),
                        detail::cell(r.sigma), detail::cell(r.accuracy),
                        detail::cell(r.accuracy_retrain), detail::cell(r.gram_min_eig),
                        detail::cell(r.gram_min_eig_over_n), detail::cell(r.wall_time),
                        csv_escape(r.error)})
       << '\n';
  }
  return os.str();
}

/// Mean and sample standard deviation per (experiment, dataset, n, lambda)
/// over the rows without an error.
inline std::string render_summary(const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, std::string, long, std::string>;
  struct Acc {
    long count = 0;
    long errors = 0;
    std::map<std::string, std::vector<double>> values;
  };
  std::vector<Key> order;
  std::map<Key, Acc> groups;
  const std::vector<std::string> metrics{"ratio", "rs_value", "gs_value", "oracle_value",
                                         "iterations", "sigma", "accuracy"};
  for (const ReportRow& r : rows) {
    Key key{r.experiment, r.dataset, r.n, detail::cell(r.lambda)};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    Acc& acc = it->second;
    if (!r.error.empty()) {
      ++acc.errors;
      continue;
    }
    ++acc.count;
    auto push = [&](const std::string& name, std::optional<double> v) {
      if (v && std::isfinite(*v)) acc.values[name].push_back(*v);
    };
    push("ratio", r.ratio);
    push("rs_value", r.rs_value);
    push("gs_value", r.gs_value);
    push("oracle_value", r.oracle_value);
    push("iterations", r.iterations ? std::optional<double>(static_cast<double>(*r.iterations))
                                    : std::nullopt);
    push("sigma", r.sigma);
    push("accuracy", r.accuracy);
  }
  std::ostringstream os;
  os << kSchemaLine << '\n';
  std::vector<std::string> header{"experiment", "dataset", "n", "lambda", "count", "errors"};
  for (const auto& m : metrics) {
    header.push_back(m + "_mean");
    header.push_back(m + "_std");
  }
  os << detail::join(header) << '\n';
  for (const Key& key : order) {
    const Acc& acc = groups.at(key);
    std::vector<std::string> cells{csv_escape(std::get<0>(key)), csv_escape(std::get<1>(key)),
                                   std::to_string(std::get<2>(key)), std::get<3>(key),
                                   std::to_string(acc.count), std::to_string(acc.errors)};
    for (const auto& m : metrics) {
      const auto found = acc.values.find(m);
      if (found == acc.values.end() || found->second.empty()) {
        cells.emplace_back();
        cells.emplace_back();
        continue;
      }
      const auto& v = found->second;
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      cells.push_back(format_double(mean));
      cells.push_back(format_double(sd));
    }
    os << detail::join(cells) << '\n';
  }
  return os.str();
}

/// Runs `job(i)` for i in [0, count) on at most `workers` threads. Jobs must
/// write only to their own slot; results are therefore independent of
/// scheduling.
inline void run_parallel(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t)>& job) {
  const unsigned threads =
      std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

namespace detail {

struct Cell {
  long n;
  std::optional<double> lambda;
  std::uint64_t seed;
};

/// File-backed inputs, loaded once and shared read-only across cells.
struct SharedInputs {
  std::optional<Dataset> table;
  std::optional<WeightedGraph> graph;
  std::optional<ScalarSample> scalars;
};

inline std::string error_text(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return std::string("config: ") + e.what();
  if (dynamic_cast<const DataError*>(&e)) return std::string("data: ") + e.what();
  if (dynamic_cast<const DegenerateError*>(&e)) return std::string("degenerate: ") + e.what();
  return std::string("error: ") + e.what();
}

/// Deterministic row subset of size n: the first n entries of a seeded
/// permutation, so subsets are nested in n for a fixed seed.
inline Dataset subsample(const Dataset& data, long n, std::uint64_t seed) {
  if (n > data.n()) {
    throw DataError("requested n = " + std::to_string(n) + " but the dataset has " +
                    std::to_string(data.n()) + " rows");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.n()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  CounterRng rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  Dataset out = data;
  out.X.resize(n, data.d());
  if (data.y.size() == data.n()) out.y.resize(n);
  for (long i = 0; i < n; ++i) {
    out.X.row(i) = data.X.row(idx[static_cast<std::size_t>(i)]);
    if (out.y.size() == n) out.y[i] = data.y[idx[static_cast<std::size_t>(i)]];
  }
  return out;
}

inline void center_into_ball(Dataset& data) {
  data.X.rowwise() -= data.X.colwise().mean();
  const double max_norm = data.X.rowwise().norm().maxCoeff();
  if (max_norm > data.bound_B) data.X *= data.bound_B / max_norm;
}

class CellRunner {
 public:
  CellRunner(const ExperimentConfig& cfg, const SharedInputs& shared)
      : cfg_(cfg), shared_(shared), dataset_id_(cfg.dataset_id()), kind_(cfg.resolved_kind()) {}

  ReportRow run(const Cell& cell) const {
    ReportRow row;
    row.experiment = to_string(cfg_.experiment);
    row.dataset = dataset_id_;
    row.n = cell.n;
    row.lambda = cell.lambda;
    row.seed = cell.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
      dispatch(cell, row);
    } catch (const std::exception& e) {
      row.error = error_text(e);
    }
    if (cfg_.timing) {
      row.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return row;
  }

  std::uint64_t data_seed(std::uint64_t seed) const {
    return derive_seed(cfg_.master_seed, std::string("data|") + to_string(cfg_.experiment) + "|" +
                                             dataset_id_ + "|" + std::to_string(seed));
  }

  std::uint64_t cell_seed(const Cell& c) const {
    return derive_seed(cfg_.master_seed,
                       std::string("cell|") + to_string(cfg_.experiment) + "|" + dataset_id_ +
                           "|" + std::to_string(c.n) + "|" +
                           (c.lambda ? format_double(*c.lambda) : std::string("-")) + "|" +
                           std::to_string(c.seed));
  }

  long max_n() const { return *std::max_element(cfg_.n_grid.begin(), cfg_.n_grid.end()); }

  /// Feature data with n rows (n + extra for the active experiments).
  Dataset features(long n, std::uint64_t seed, LabelKind labels) const {
    if (shared_.table) {
      Dataset d = subsample(*shared_.table, n, data_seed(seed));
      if (labels == LabelKind::binary) {
        for (Eigen::Index i = 0; i < d.n(); ++i) {
          if (d.y[i] != 1.0 && d.y[i] != -1.0) throw DataError("labels must be +-1 for this loss");
        }
      }
      return d;
    }
    const long pool = std::max(n, max_n() + 1);
    if (kind_ == "margin_separable") {
      Dataset d = margin_separable(pool, cfg_.dataset.dim, cfg_.dataset.gamma, data_seed(seed),
                                   cfg_.bound_B);
      d.bound_Rw = cfg_.bound_Rw;
      return d.head(n);
    }
    if (kind_ != "gaussian_blob") {
      throw ConfigError("dataset kind '" + kind_ + "' does not fit " +
                        to_string(cfg_.experiment));
    }
    return gaussian_blob(pool, cfg_.dataset.dim, data_seed(seed), labels, cfg_.bound_B,
                         cfg_.bound_Rw, false, decay())
        .head(n);
  }

 private:
  void dispatch(const Cell& c, ReportRow& row) const {
    switch (cfg_.experiment) {
      case ExperimentKind::passive_mse: return passive_erm(c, row, LossKind::mse);
      case ExperimentKind::passive_logloss: return passive_erm(c, row, LossKind::logistic);
      case ExperimentKind::passive_svm: return passive_svm(c, row);
      case ExperimentKind::passive_mst: return passive_mst(c, row);
      case ExperimentKind::passive_pca: return passive_pca(c, row);
      case ExperimentKind::passive_median: return passive_median(c, row);
      case ExperimentKind::active_d2d: return active_d2d(c, row);
      case ExperimentKind::active_newton: return active_newton(c, row);
    }
  }

  void set_ratio(ReportRow& row, const SensitivityReport& rs, const SensitivityReport& gs) const {
    if (rs.finite()) row.rs_value = rs.value;
    if (gs.finite()) row.gs_value = gs.value;
    else row.gs_value = std::numeric_limits<double>::infinity();
    if (rs.finite() && gs.finite() && gs.value > 0.0) row.ratio = rs.value / gs.value;
    if (rs.finite() && rs.kind == SensitivityKind::retain && cfg_.privacy.epsilon <= 1.0) {
      row.sigma = rs.value * gaussian_multiplier(cfg_.privacy);
    }
  }

  void passive_erm(const Cell& c, ReportRow& row, LossKind kind) const {
    const Dataset data =
        features(c.n, c.seed, kind == LossKind::mse ? LabelKind::real : LabelKind::binary);
    const LossSpec loss{kind, *c.lambda};
    const CurvatureReport curv = curvature(data, loss);
    row.gram_min_eig = curv.gram_min_eigenvalue;
    row.gram_min_eig_over_n = curv.gram_min_eigenvalue / static_cast<double>(c.n);
    set_ratio(row, rs_erm(curv, data.n()), gs_erm(curv.L, data.n(), loss.lambda));
    if (cfg_.oracle_trials > 0) {
      row.oracle_value = oracle_stability(data, loss, ball_candidates(data.d(), data.bound_B, kind),
                                          cfg_.oracle_trials, cell_seed(c))
                             .value;
    }
  }

  void passive_svm(const Cell& c, ReportRow& row) const {
    const Dataset data = features(c.n, c.seed, LabelKind::binary);
    SvmOptions opts;
    opts.seed = cell_seed(c);
    const SvmFit fit = train_hard_margin(data, KernelSpec::linear(), opts);
    MarginReport margin = fit.margin;
    margin.true_margin = cfg_.dataset.gamma;
    set_ratio(row, rs_svm(margin), gs_svm(cfg_.dataset.gamma));
    if (cfg_.oracle_trials > 0) {
      const Eigen::Index d = data.d();
      const double gamma = cfg_.dataset.gamma;
      const double B = data.bound_B;
      const CandidateSource source = [d, gamma, B](CounterRng& rng) {
        auto [x, y] = margin_point(rng, d, gamma, B);
        return LabeledPoint{x, y};
      };
      row.oracle_value =
          oracle_rs_svm(data, KernelSpec::linear(), source, cfg_.oracle_trials, cell_seed(c), opts)
              .value;
    }
  }

  void passive_mst(const Cell& c, ReportRow& row) const {
    WeightedGraph parent;
    if (shared_.graph) {
      parent = *shared_.graph;
    } else {
      const std::size_t vertices = cfg_.dataset.graph_vertices > 0
                                       ? cfg_.dataset.graph_vertices
                                       : static_cast<std::size_t>(2 * max_n());
      parent = random_graph(vertices, cfg_.dataset.edge_probability, data_seed(c.seed),
                            cfg_.bound_B, cfg_.dataset.weight_levels);
    }
    SubgraphSampling sampling;
    sampling.target_nodes = static_cast<std::size_t>(c.n);
    sampling.min_density = cfg_.min_density;
    sampling.count = 1;
    const WeightedGraph g = sample_subgraphs(parent, sampling, cell_seed(c)).front();
    set_ratio(row, rs_mst_edge(g), gs_mst_edge(g.bound_B));
    if (cfg_.oracle_trials > 0) row.oracle_value = oracle_rs_mst(g).value;
  }

  void passive_pca(const Cell& c, ReportRow& row) const {
    Dataset data = features(c.n, c.seed, LabelKind::none);
    center_into_ball(data);
    require_centered(data.X);
    const SpectralReport spec = spectral(covariance(data.X), cfg_.pca_k);
    set_ratio(row, rs_pca_bound(spec, data.n(), data.bound_B),
              gs_pca_diameter(data.d(), cfg_.pca_k));
    if (cfg_.oracle_trials > 0) {
      row.oracle_value = oracle_rs_pca(data, cfg_.pca_k, cfg_.oracle_trials, cell_seed(c)).value;
    }
  }

  void passive_median(const Cell& c, ReportRow& row) const {
    ScalarSample sample;
    if (shared_.scalars) {
      if (static_cast<std::size_t>(c.n) > shared_.scalars->values.size()) {
        throw DataError("requested n exceeds the sample size");
      }
      sample = *shared_.scalars;
      CounterRng rng(data_seed(c.seed));
      auto& v = sample.values;
      for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    } else {
      sample = uniform_scalar(static_cast<std::size_t>(max_n()), data_seed(c.seed), cfg_.bound_B);
    }
    sample.values.resize(static_cast<std::size_t>(c.n));
    const int grid = std::max(3, cfg_.oracle_trials);
    // The closed form covers odd n; for even n the oracle is exact (any
    // addition at or below the lower middle value, 0 included, is worst).
    const SensitivityReport rs =
        c.n % 2 == 1 ? rs_median(sample) : oracle_rs_median(sample, grid);
    SensitivityReport retain = rs;
    retain.kind = SensitivityKind::retain;
    set_ratio(row, retain, gs_median(sample.bound_B));
    if (cfg_.oracle_trials > 0) row.oracle_value = oracle_rs_median(sample, grid).value;
  }

  double decay() const {
    if (cfg_.dataset.spectrum_decay) return *cfg_.dataset.spectrum_decay;
    return cfg_.experiment == ExperimentKind::passive_pca ? 0.7 : 1.0;
  }

  LossSpec active_loss(double lambda) const {
    return {cfg_.active_loss == "mse" ? LossKind::mse : LossKind::logistic, lambda};
  }

  LabelKind active_labels() const {
    return cfg_.active_loss == "mse" ? LabelKind::real : LabelKind::binary;
  }

  void active_d2d(const Cell& c, ReportRow& row) const {
    const Dataset full = features(c.n + 1, c.seed, active_labels());
    const Eigen::Index del = full.n() - 1;
    const Dataset retain = full.without(del);
    const LossSpec loss = active_loss(*c.lambda);
    const CurvatureReport curv = curvature(retain, loss);
    row.gram_min_eig = curv.gram_min_eigenvalue;
    row.gram_min_eig_over_n = curv.gram_min_eigenvalue / static_cast<double>(c.n);
    const int i_retain = d2d_iterations(curv, retain.n(), cfg_.sigma, cfg_.privacy, Calibration::retain);
    const int i_global = d2d_iterations(curv, retain.n(), cfg_.sigma, cfg_.privacy, Calibration::global);
    const SensitivityReport rs = rs_erm(curv, retain.n());
    const SensitivityReport gs = gs_erm(curv.L, retain.n(), loss.lambda);
    if (rs.finite()) row.rs_value = rs.value;
    row.gs_value = gs.finite() ? gs.value : std::numeric_limits<double>::infinity();
    row.iterations = i_retain;
    // Counts floored at one step: a run that needs no descent still costs one
    // gradient evaluation, and the ratio stays defined when both are zero.
    row.ratio = static_cast<double>(std::max(i_retain, 1)) / static_cast<double>(std::max(i_global, 1));
    row.sigma = cfg_.sigma;

    UnlearnRequest req{full, del, loss, cfg_.privacy, cfg_.sigma, cell_seed(c)};
    const UnlearnResult res = unlearn_d2d(req, Calibration::retain);
    const Eigen::VectorXd w_R = train(retain, loss).w;
    row.oracle_value = (res.w_prenoise - w_R).norm();
  }

  void active_newton(const Cell& c, ReportRow& row) const {
    const Dataset full = features(c.n + 1, c.seed, active_labels());
    const Eigen::Index del = full.n() - 1;
    const Dataset retain = full.without(del);
    const LossSpec loss = active_loss(*c.lambda);
    const CurvatureReport curv = curvature(retain, loss);
    row.gram_min_eig = curv.gram_min_eigenvalue;
    row.gram_min_eig_over_n = curv.gram_min_eigenvalue / static_cast<double>(c.n);
    const SensitivityReport rs = newton_sensitivity(curv, retain.n(), Calibration::retain);
    const SensitivityReport gs = newton_sensitivity(curv, retain.n(), Calibration::global);
    if (rs.finite()) row.rs_value = rs.value;
    row.gs_value = gs.finite() ? gs.value : std::numeric_limits<double>::infinity();
    if (rs.finite() && gs.finite() && gs.value > 0.0) row.ratio = rs.value / gs.value;

    UnlearnRequest req{full, del, loss, cfg_.privacy, cfg_.sigma, cell_seed(c)};
    const UnlearnResult res = unlearn_newton(req, Calibration::retain);
    row.sigma = res.audit.sigma;
    const Eigen::VectorXd w_R = train(retain, loss).w;
    row.oracle_value = (res.w_prenoise - w_R).norm();
    if (loss.kind == LossKind::logistic) {
      const Dataset test = test_set(c.seed);
      row.accuracy = accuracy(test, res.w_out);
      row.accuracy_retrain = accuracy(test, w_R);
    }
  }

  Dataset test_set(std::uint64_t seed) const {
    const std::uint64_t s = derive_seed(data_seed(seed), "test");
    if (shared_.table) return subsample(*shared_.table, std::min<long>(cfg_.test_size, shared_.table->n()), s);
    if (kind_ == "margin_separable") {
      return margin_separable(cfg_.test_size, cfg_.dataset.dim, cfg_.dataset.gamma, s, cfg_.bound_B);
    }
    // Same w* as training: the blob generator draws it from the data seed.
    Dataset pool = gaussian_blob(max_n() + 1 + cfg_.test_size, cfg_.dataset.dim, data_seed(seed),
                                 LabelKind::binary, cfg_.bound_B, cfg_.bound_Rw, false, decay());
    Dataset out = pool;
    out.X = pool.X.bottomRows(cfg_.test_size);
    out.y = pool.y.tail(cfg_.test_size);
    return out;
  }

  const ExperimentConfig& cfg_;
  const SharedInputs& shared_;
  std::string dataset_id_;
  std::string kind_;
};

inline SharedInputs load_inputs(const ExperimentConfig& cfg) {
  SharedInputs shared;
  const DatasetSpec& ds = cfg.dataset;
  if (ds.kind == "csv") {
    CsvOptions opts;
    opts.label_column = ds.label_column;
    opts.standardize = ds.standardize;
    opts.jl_target_dim = ds.jl_target_dim;
    opts.project_to_B = ds.project_to_B;
    opts.bound_B = cfg.bound_B;
    opts.bound_Rw = cfg.bound_Rw;
    opts.seed = derive_seed(cfg.master_seed, "jl");
    opts.binarize_labels = cfg.experiment == ExperimentKind::passive_logloss ||
                           cfg.experiment == ExperimentKind::passive_svm ||
                           ((cfg.experiment == ExperimentKind::active_d2d ||
                             cfg.experiment == ExperimentKind::active_newton) &&
                            cfg.active_loss == "logistic");
    opts.scale_labels = !opts.binarize_labels;
    shared.table = ingest_csv(ds.path, opts);
  } else if (ds.kind == "edges") {
    shared.graph = ingest_edges(ds.path, ds.edge_bound_B).graph;
  } else if (ds.kind == "scalars") {
    shared.scalars = read_scalars(ds.path, cfg.bound_B);
  } else if (ds.kind != "auto" && ds.kind != "gaussian_blob" && ds.kind != "margin_separable" &&
             ds.kind != "uniform_scalar" && ds.kind != "random_graph") {
    throw ConfigError("unknown dataset kind '" + ds.kind + "'");
  }
  return shared;
}

}  // namespace detail

/// Runs every (n, lambda, seed) cell. Failing cells become rows with the
/// error column set; the sweep carries on.
inline std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const detail::SharedInputs shared = detail::load_inputs(cfg);
  std::vector<detail::Cell> cells;
  for (long n : cfg.n_grid) {
    if (uses_lambda(cfg.experiment)) {
      for (double l : cfg.lambda_grid) {
        for (std::uint64_t s : cfg.seeds) cells.push_back({n, l, s});
      }
    } else {
      for (std::uint64_t s : cfg.seeds) cells.push_back({n, std::nullopt, s});
    }
  }
  const detail::CellRunner runner(cfg, shared);
  std::vector<ReportRow> rows(cells.size());
  run_parallel(cells.size(), cfg.workers, [&](std::size_t i) { rows[i] = runner.run(cells[i]); });
  return rows;
}

struct SweepOutputs {
  std::filesystem::path report;
  std::filesystem::path summary;
};

inline SweepOutputs write_outputs(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows) {
  const std::string name =
      cfg.output_name.empty() ? std::string(to_string(cfg.experiment)) : cfg.output_name;
  SweepOutputs out{cfg.output_dir / (name + ".csv"), cfg.output_dir / (name + "_summary.csv")};
  write_atomic(out.report, render_report(rows));
  write_atomic(out.summary, render_summary(rows));
  return out;
}

}  // namespace unlearn::harness
