// Command-line front end: sensitivity reports, single deletions, sweeps,
// oracles and a quick self check.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unlearn/unlearn.hpp"

namespace fs = std::filesystem;
using namespace unlearn;
using namespace unlearn::harness;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDegenerate = 4 };

struct CommonInput {
  std::string problem;
  std::string input;
  std::string label_column;
  bool standardize = false;
  std::optional<int> jl_dim;
  double bound_B = 1.0;
  double bound_Rw = 1.0;
  double lambda = 1e-3;
  long k = 1;
  double gamma = 0.0;
  PrivacyParams privacy;
};

void add_common(CLI::App* app, CommonInput& in) {
  app->add_option("--problem", in.problem, "median | mst | pca | svm | mse | logistic")
      ->required()
      ->check(CLI::IsMember({"median", "mst", "pca", "svm", "mse", "logistic"}));
  app->add_option("--input", in.input, "data file (CSV, edge list or scalar list)")->required();
  app->add_option("--label-column", in.label_column, "label column name or index");
  app->add_flag("--standardize", in.standardize, "z-score the feature columns");
  app->add_option("--jl-dim", in.jl_dim, "Gaussian random projection target dimension");
  app->add_option("--B", in.bound_B, "bound on row norms / values / edge weights");
  app->add_option("--Rw", in.bound_Rw, "bound on the parameter norm");
  app->add_option("--lambda", in.lambda, "l2 regularisation strength");
  app->add_option("--k", in.k, "PCA subspace dimension");
  app->add_option("--gamma", in.gamma, "true margin (SVM)");
  app->add_option("--epsilon", in.privacy.epsilon, "target epsilon");
  app->add_option("--delta", in.privacy.delta, "target delta");
}

Dataset load_table(const CommonInput& in, bool labels, bool binary, bool center) {
  CsvOptions opts;
  opts.label_column = labels ? in.label_column : std::string();
  if (labels && opts.label_column.empty()) throw ConfigError("--label-column is required");
  opts.standardize = in.standardize;
  opts.jl_target_dim = in.jl_dim;
  opts.center = center;
  opts.project_to_B = true;
  opts.binarize_labels = binary;
  opts.scale_labels = labels && !binary;
  opts.bound_B = in.bound_B;
  opts.bound_Rw = in.bound_Rw;
  return ingest_csv(in.input, opts);
}

void print(const std::string& key, double value) {
  std::cout << key << '=' << format_double(value) << '\n';
}

void print_report(const std::string& prefix, const SensitivityReport& r) {
  std::cout << prefix << ".source=" << r.source << '\n' << prefix << ".kind=" << to_string(r.kind) << '\n';
  if (r.unbounded) {
    std::cout << prefix << ".value=unbounded\n";
  } else {
    print(prefix + ".value", r.value);
  }
  for (const auto& [k, v] : r.inputs) print(prefix + ".input." + k, v);
}

int cmd_sensitivity(const CommonInput& in) {
  std::optional<SensitivityReport> rs;
  std::optional<SensitivityReport> gs;
  if (in.problem == "median") {
    const ScalarSample s = read_scalars(in.input, in.bound_B);
    rs = rs_median(s);
    gs = gs_median(s.bound_B);
  } else if (in.problem == "mst") {
    const EdgeList edges = ingest_edges(in.input);
    for (const auto& w : edges.warnings) std::cerr << "warning: " << w << '\n';
    rs = rs_mst_edge(edges.graph);
    gs = gs_mst_edge(edges.graph.bound_B);
  } else if (in.problem == "pca") {
    const Dataset data = load_table(in, false, false, true);
    const SpectralReport spec = spectral(covariance(data.X), in.k);
    rs = rs_pca_bound(spec, data.n(), data.bound_B);
    gs = gs_pca_diameter(data.d(), in.k);
  } else if (in.problem == "svm") {
    const Dataset data = load_table(in, true, true, false);
    MarginReport margin = train_hard_margin(data, KernelSpec::linear()).margin;
    margin.true_margin = in.gamma;
    rs = rs_svm(margin);
    gs = gs_svm(in.gamma);
  } else {
    const bool logistic = in.problem == "logistic";
    const Dataset data = load_table(in, true, logistic, false);
    const LossSpec loss{logistic ? LossKind::logistic : LossKind::mse, in.lambda};
    const CurvatureReport curv = curvature(data, loss);
    rs = rs_erm(curv, data.n());
    gs = gs_erm(curv.L, data.n(), loss.lambda);
    print("lambda_R", curv.lambda_R);
    print("beta_R", curv.beta_R);
    print("gram_min_eig", curv.gram_min_eigenvalue);
    print("gram_min_eig_over_n", curv.gram_min_eigenvalue / static_cast<double>(data.n()));
  }
  print_report("rs", *rs);
  print_report("gs", *gs);
  if (rs->finite() && gs->finite() && gs->value > 0.0) print("ratio", rs->value / gs->value);
  if (rs->finite() && in.privacy.epsilon <= 1.0) {
    const NoiseSpec noise = certify_unlearning(*rs, in.privacy);
    print("sigma", noise.sigma);
  }
  return kOk;
}

int cmd_oracle(const CommonInput& in, int trials, std::uint64_t seed) {
  std::optional<SensitivityReport> oracle;
  if (in.problem == "median") {
    oracle = oracle_rs_median(read_scalars(in.input, in.bound_B), std::max(trials, 3));
  } else if (in.problem == "mst") {
    oracle = oracle_rs_mst(ingest_edges(in.input).graph);
  } else if (in.problem == "pca") {
    oracle = oracle_rs_pca(load_table(in, false, false, true), in.k, trials, seed);
  } else if (in.problem == "svm") {
    const Dataset data = load_table(in, true, true, false);
    const Eigen::Index d = data.d();
    const double gamma = in.gamma;
    const double B = data.bound_B;
    const CandidateSource source = [d, gamma, B](CounterRng& rng) {
      auto [x, y] = margin_point(rng, d, gamma, B);
      return LabeledPoint{x, y};
    };
    oracle = oracle_rs_svm(data, KernelSpec::linear(), source, trials, seed);
  } else {
    const bool logistic = in.problem == "logistic";
    const Dataset data = load_table(in, true, logistic, false);
    const LossSpec loss{logistic ? LossKind::logistic : LossKind::mse, in.lambda};
    oracle = oracle_stability(data, loss, ball_candidates(data.d(), data.bound_B, loss.kind),
                              trials, seed);
  }
  print_report("oracle", *oracle);
  return kOk;
}

struct UnlearnArgs {
  std::string algorithm = "newton";
  std::string calibration = "retain";
  std::string loss = "logistic";
  long delete_index = -1;
  double sigma = 0.1;
  std::uint64_t seed = 0;
};

int cmd_unlearn(const CommonInput& base, const UnlearnArgs& args, const fs::path& output_dir) {
  CommonInput in = base;
  const bool logistic = args.loss == "logistic";
  const Dataset data = load_table(in, true, logistic, false);
  UnlearnRequest req;
  req.full_data = data;
  req.delete_index = args.delete_index < 0 ? data.n() - 1 : args.delete_index;
  req.loss = {logistic ? LossKind::logistic : LossKind::mse, in.lambda};
  req.params = in.privacy;
  req.sigma = args.sigma;
  req.seed = args.seed;
  const Calibration cal = args.calibration == "global" ? Calibration::global : Calibration::retain;
  const UnlearnResult res =
      args.algorithm == "d2d" ? unlearn_d2d(req, cal) : unlearn_newton(req, cal);
  std::cout << "algorithm=" << res.audit.algorithm << '\n'
            << "calibration=" << to_string(res.audit.calibration) << '\n';
  print("sigma", res.audit.sigma);
  std::cout << "iterations=" << res.audit.iterations << '\n'
            << "projection_active=" << (res.audit.projection_active ? "true" : "false") << '\n';
  if (!std::isnan(res.audit.hessian_min_eigenvalue)) {
    print("hessian_min_eigenvalue", res.audit.hessian_min_eigenvalue);
  }
  print_report("sensitivity", res.audit.sensitivity);
  std::string csv = "w\n";
  for (Eigen::Index i = 0; i < res.w_out.size(); ++i) csv += format_double(res.w_out[i]) + "\n";
  const fs::path out = output_dir / "unlearned_weights.csv";
  write_atomic(out, csv);
  std::cout << "weights=" << out.string() << '\n';
  return kOk;
}

/// Frozen reference values for the scalar formulas.
int cmd_selftest() {
  struct Check {
    const char* name;
    double got;
    double want;
    double tol;
  };
  const PrivacyParams p{1.0, 1e-5};
  const std::vector<Check> checks{
      {"gaussian_multiplier(1, 1e-5)", gaussian_multiplier(p), 4.844805262605389, 1e-12},
      {"shift_factor(1, 1e-5)", shift_factor(p), 0.20405851288067088, 1e-14},
      {"max_shift(1, 1e-5, 0.1)", max_shift(p, 0.1), 0.020405851288067088, 1e-15},
      {"rs_erm_root(1, 1, 1, 100)", rs_erm_root(1.0, 1.0, 1.0, 100).value, 0.010102051443364380, 1e-15},
      {"rs_median({1..5}, B=10)", rs_median(ScalarSample{{1, 2, 3, 4, 5}, 10.0}).value, 0.5, 0.0},
      {"gs_pca_diameter(4, 1)", gs_pca_diameter(4, 1).value, std::sqrt(2.0), 1e-15},
  };
  int failures = 0;
  for (const Check& c : checks) {
    const bool ok = std::abs(c.got - c.want) <= c.tol;
    failures += ok ? 0 : 1;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.name << " = " << format_double(c.got) << '\n';
  }
  return failures == 0 ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified unlearning: sensitivity bounds, noise calibration and sweeps"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML configuration file ([sweep] etc. sections)");
  fs::path output_dir = "results";
  unsigned workers = 1;
  std::uint64_t master_seed = 0;
  app.add_option("--output-dir", output_dir, "directory for CSV outputs")
      ->envname("UNLEARN_OUTPUT_DIR");
  app.add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--master-seed", master_seed, "master seed for per-cell seed derivation");

  CommonInput sens_in;
  auto* sens = app.add_subcommand("sensitivity", "retain and global sensitivity of one dataset");
  add_common(sens, sens_in);

  CommonInput oracle_in;
  int oracle_trials = 200;
  std::uint64_t oracle_seed = 0;
  auto* oracle = app.add_subcommand("oracle", "empirical retain sensitivity by retraining");
  add_common(oracle, oracle_in);
  oracle->add_option("--trials", oracle_trials, "random additions to try");
  oracle->add_option("--seed", oracle_seed, "oracle seed");

  CommonInput unl_in;
  UnlearnArgs unl_args;
  auto* unl = app.add_subcommand("unlearn", "delete one row with Descent-to-Delete or Newton");
  unl->add_option("--input", unl_in.input, "labelled CSV")->required();
  unl->add_option("--label-column", unl_in.label_column, "label column name or index")->required();
  unl->add_flag("--standardize", unl_in.standardize, "z-score the feature columns");
  unl->add_option("--jl-dim", unl_in.jl_dim, "Gaussian random projection target dimension");
  unl->add_option("--B", unl_in.bound_B, "bound on row norms");
  unl->add_option("--Rw", unl_in.bound_Rw, "bound on the parameter norm");
  unl->add_option("--lambda", unl_in.lambda, "l2 regularisation strength");
  unl->add_option("--epsilon", unl_in.privacy.epsilon, "target epsilon");
  unl->add_option("--delta", unl_in.privacy.delta, "target delta");
  unl->add_option("--algorithm", unl_args.algorithm)->check(CLI::IsMember({"d2d", "newton"}));
  unl->add_option("--calibration", unl_args.calibration)->check(CLI::IsMember({"retain", "global"}));
  unl->add_option("--loss", unl_args.loss)->check(CLI::IsMember({"mse", "logistic"}));
  unl->add_option("--delete-index", unl_args.delete_index, "row to delete (default: last)");
  unl->add_option("--sigma", unl_args.sigma, "Descent-to-Delete noise level");
  unl->add_option("--seed", unl_args.seed, "noise seed");

  ExperimentConfig cfg;
  std::vector<std::string> experiments{"passive_mse"};
  auto* sweep = app.add_subcommand("sweep", "run experiment grids and write CSV reports");
  sweep->add_option("--experiment", experiments, "one or more experiment names")->delimiter(',');
  sweep->add_option("--dataset", cfg.dataset.kind,
                    "auto | gaussian_blob | margin_separable | uniform_scalar | random_graph | "
                    "csv | edges | scalars");
  sweep->add_option("--data-path", cfg.dataset.path, "input file for csv/edges/scalars");
  sweep->add_option("--label-column", cfg.dataset.label_column);
  sweep->add_flag("--standardize", cfg.dataset.standardize);
  sweep->add_option("--jl-dim", cfg.dataset.jl_target_dim);
  sweep->add_option("--dim", cfg.dataset.dim, "synthetic feature dimension");
  sweep->add_option("--gamma", cfg.dataset.gamma, "true margin for SVM data");
  sweep->add_option("--spectrum-decay", cfg.dataset.spectrum_decay,
                    "per-coordinate scale ratio of gaussian_blob features");
  sweep->add_option("--edge-probability", cfg.dataset.edge_probability);
  sweep->add_option("--graph-vertices", cfg.dataset.graph_vertices);
  sweep->add_option("--weight-levels", cfg.dataset.weight_levels);
  sweep->add_option("--n", cfg.n_grid, "sample sizes")->delimiter(',');
  sweep->add_option("--lambda", cfg.lambda_grid, "regularisation grid")->delimiter(',');
  sweep->add_option("--seeds", cfg.seeds, "seed list")->delimiter(',');
  sweep->add_option("--epsilon", cfg.privacy.epsilon);
  sweep->add_option("--delta", cfg.privacy.delta);
  sweep->add_option("--sigma", cfg.sigma, "Descent-to-Delete noise level");
  sweep->add_option("--B", cfg.bound_B);
  sweep->add_option("--Rw", cfg.bound_Rw);
  sweep->add_option("--k", cfg.pca_k, "PCA subspace dimension");
  sweep->add_option("--oracle-trials", cfg.oracle_trials, "0 disables the oracle column");
  sweep->add_option("--min-density", cfg.min_density, "MST subgraph density floor");
  sweep->add_option("--loss", cfg.active_loss, "loss for the active experiments");
  sweep->add_option("--test-size", cfg.test_size);
  sweep->add_option("--output-name", cfg.output_name, "report file stem (single experiment)");
  sweep->add_flag("--timing", cfg.timing, "fill the wall_time column (breaks byte stability)");

  app.add_subcommand("selftest", "check the scalar formulas against frozen values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sens) return cmd_sensitivity(sens_in);
    if (*oracle) return cmd_oracle(oracle_in, oracle_trials, oracle_seed);
    if (*unl) return cmd_unlearn(unl_in, unl_args, output_dir);
    if (*sweep) {
      cfg.output_dir = output_dir;
      cfg.workers = workers;
      cfg.master_seed = master_seed;
      if (experiments.size() > 1 && !cfg.output_name.empty()) {
        throw ConfigError("--output-name needs a single experiment");
      }
      int degenerate_rows = 0;
      for (const std::string& name : experiments) {
        cfg.experiment = parse_experiment(name);
        const auto rows = run_experiment(cfg);
        const SweepOutputs out = write_outputs(cfg, rows);
        for (const auto& r : rows) degenerate_rows += r.error.empty() ? 0 : 1;
        std::cout << name << ": " << rows.size() << " rows -> " << out.report.string() << '\n';
      }
      if (degenerate_rows > 0) {
        std::cerr << degenerate_rows << " cells failed; see the error column\n";
      }
      return kOk;
    }
    return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const DegenerateError& e) {
    std::cerr << "degenerate: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
