#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "unlearn/harness/experiment.hpp"

namespace fs = std::filesystem;
using namespace unlearn;
using namespace unlearn::harness;

namespace {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("unlearn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name) << content;
    return path_ / name;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.n_grid = {40, 80};
  cfg.lambda_grid = {1e-3, 1.0};
  cfg.seeds = {1, 2};
  cfg.dataset.dim = 4;
  cfg.test_size = 200;
  return cfg;
}

double column(const std::optional<double>& v) { return v ? *v : std::nan(""); }

}  // namespace

TEST(Csv, FormatsShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-5), "1e-05");
  EXPECT_EQ(*parse_double(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_FALSE(parse_double("abc").has_value());
}

TEST(Csv, HeaderDetectionAndComments) {
  TempDir dir;
  const auto t = read_table(dir.write("a.csv", "# note\na,b\n1,2\n\n3,4\n"));
  ASSERT_EQ(t.header.size(), 2u);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 4.0);
  EXPECT_TRUE(read_table(dir.write("b.csv", "1,2\n3,4\n")).header.empty());
}

TEST(Csv, RaggedAndNonNumericRowsNameTheLine) {
  TempDir dir;
  try {
    read_table(dir.write("r.csv", "a,b\n1,2\n3\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  try {
    read_table(dir.write("n.csv", "1,2\n3,x\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_table(dir.path() / "missing.csv"), DataError);
}

TEST(Csv, EscapesQuotesAndCommas) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Ingest, LabelColumnByNameOrIndex) {
  TempDir dir;
  const auto p = dir.write("d.csv", "x,y,label\n0.1,0.2,1\n0.3,-0.1,-1\n");
  CsvOptions by_name;
  by_name.label_column = "label";
  CsvOptions by_index;
  by_index.label_column = "2";
  const Dataset a = ingest_csv(p, by_name);
  const Dataset b = ingest_csv(p, by_index);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.d(), 2);
  CsvOptions missing;
  missing.label_column = "target";
  EXPECT_THROW(ingest_csv(p, missing), DataError);
}

TEST(Ingest, RowsAboveBoundAreRejectedUnlessProjected) {
  TempDir dir;
  const auto p = dir.write("big.csv", "3,4\n0.5,0\n");
  EXPECT_THROW(ingest_csv(p), DataError);
  CsvOptions opts;
  opts.project_to_B = true;
  opts.bound_B = 2.0;
  const Dataset d = ingest_csv(p, opts);
  EXPECT_NEAR(d.max_row_norm(), 2.0, 1e-12);
  EXPECT_NEAR(d.X(1, 0), 0.2, 1e-12);  // one global rescale by B / 5
}

TEST(Ingest, StandardizeCentresAndScales) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 10, 2, 10, 3, 10, 4, 10;
  standardize_columns(X);
  EXPECT_NEAR(X.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(X.col(0).squaredNorm() / 4.0, 1.0, 1e-12);
  EXPECT_TRUE(X.col(1).isZero());
}

TEST(Ingest, JlPreservesDistancesApproximately) {
  CounterRng rng(2);
  Eigen::MatrixXd X(20, 500);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const Eigen::MatrixXd Y = jl_project(X, 400, 9);
  EXPECT_EQ(Y.cols(), 400);
  for (int i = 0; i < 20; ++i) {
    for (int j = i + 1; j < 20; ++j) {
      const double r = (Y.row(i) - Y.row(j)).norm() / (X.row(i) - X.row(j)).norm();
      EXPECT_NEAR(r, 1.0, 0.25);
    }
  }
  EXPECT_EQ(jl_project(X, 10, 3), jl_project(X, 10, 3));
}

TEST(Edges, TriangleWithCommentsAndDuplicates) {
  TempDir dir;
  const auto p = dir.write("g.edges", "# comment\na b 1\nb c 2\n\na,c,3\nc a 2.5\n");
  const EdgeList e = ingest_edges(p);
  EXPECT_EQ(e.graph.vertex_count, 3u);
  EXPECT_EQ(e.graph.edges.size(), 3u);
  EXPECT_EQ(e.warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(e.graph.bound_B, 3.0);
  EXPECT_DOUBLE_EQ(mst_weight(e.graph), 3.0);
}

TEST(Edges, MalformedLinesAreDataErrors) {
  TempDir dir;
  EXPECT_THROW(ingest_edges(dir.write("a", "a b\n")), DataError);
  EXPECT_THROW(ingest_edges(dir.write("b", "a b x\n")), DataError);
  EXPECT_THROW(ingest_edges(dir.write("c", "a b -1\n")), DataError);
}

TEST(Scalars, ReadsFirstColumnAndChecksRange) {
  TempDir dir;
  EXPECT_EQ(read_scalars(dir.write("v", "0.1\n0.5\n0.9\n"), 1.0).values.size(), 3u);
  EXPECT_THROW(read_scalars(dir.write("w", "0.1\n1.5\n"), 1.0), DataError);
}

TEST(Samples, BundledInputsLoad) {
  const fs::path s = UNLEARN_SAMPLES_DIR;
  CsvOptions reg;
  reg.label_column = "y";
  reg.project_to_B = true;
  EXPECT_EQ(ingest_csv(s / "regression.csv", reg).d(), 3);
  CsvOptions cls;
  cls.label_column = "label";
  cls.binarize_labels = true;
  cls.project_to_B = true;
  const Dataset c = ingest_csv(s / "classification.csv", cls);
  EXPECT_NO_THROW(train_hard_margin(c, KernelSpec::linear()));
  EXPECT_TRUE(is_connected(ingest_edges(s / "graph.edges").graph));
  EXPECT_EQ(read_scalars(s / "values.txt", 1.0).values.size(), 101u);
}

TEST(Generators, BoundsRespected) {
  const Dataset a = gaussian_blob(200, 5, 1, LabelKind::binary, 0.5);
  EXPECT_LE(a.max_row_norm(), 0.5 + 1e-12);
  const Dataset b = margin_separable(200, 3, 0.2, 2);
  for (Eigen::Index i = 0; i < b.n(); ++i) EXPECT_GE(b.y[i] * b.X(i, 0), 0.2);
  const Dataset c = gaussian_blob(100, 4, 3, LabelKind::none, 1.0, 1.0, true);
  EXPECT_LT(c.X.colwise().mean().norm(), 1e-12);
  EXPECT_EQ(gaussian_blob(50, 3, 9).X, gaussian_blob(50, 3, 9).X);
}

TEST(Sweep, EveryExperimentRunsWithoutErrors) {
  for (ExperimentKind k : kAllExperiments) {
    ExperimentConfig cfg = small(k);
    if (k == ExperimentKind::passive_mst) cfg.n_grid = {10, 20};
    const auto rows = run_experiment(cfg);
    const std::size_t cells = cfg.n_grid.size() * cfg.seeds.size() *
                              (uses_lambda(k) ? cfg.lambda_grid.size() : 1u);
    ASSERT_EQ(rows.size(), cells) << to_string(k);
    for (const auto& r : rows) {
      EXPECT_TRUE(r.error.empty()) << to_string(k) << ": " << r.error;
      EXPECT_FALSE(r.wall_time.has_value());
    }
  }
}

TEST(Sweep, PassiveOrderingOracleRetainGlobal) {
  for (ExperimentKind k : {ExperimentKind::passive_mse, ExperimentKind::passive_logloss,
                           ExperimentKind::passive_svm, ExperimentKind::passive_mst,
                           ExperimentKind::passive_pca, ExperimentKind::passive_median}) {
    ExperimentConfig cfg = small(k);
    cfg.oracle_trials = 10;
    if (k == ExperimentKind::passive_mst) cfg.n_grid = {8, 12};
    if (k == ExperimentKind::passive_median) cfg.n_grid = {41, 80};
    // The PCA bound only drops below the projector diameter once n is large
    // relative to B^2 / gap.
    if (k == ExperimentKind::passive_pca) cfg.n_grid = {400, 800};
    for (const auto& r : run_experiment(cfg)) {
      ASSERT_TRUE(r.error.empty()) << r.error;
      EXPECT_LE(column(r.oracle_value), column(r.rs_value) * (1 + 1e-9)) << to_string(k);
      EXPECT_LE(column(r.rs_value), column(r.gs_value) * (1 + 1e-12)) << to_string(k);
    }
  }
}

TEST(Sweep, MseRatioIsLambdaOverLambdaR) {
  for (const auto& r : run_experiment(small(ExperimentKind::passive_mse))) {
    const double lambda_R = *r.gram_min_eig_over_n + *r.lambda;
    EXPECT_NEAR(*r.ratio, *r.lambda / lambda_R, 1e-12);
  }
}

TEST(Sweep, NewtonRatioIsCubedCurvatureRatio) {
  ExperimentConfig cfg = small(ExperimentKind::active_newton);
  const double C = 1.0 / std::pow(2.0 * std::cosh(0.5), 2);
  for (const auto& r : run_experiment(cfg)) {
    const double lambda_R = C * *r.gram_min_eig_over_n + *r.lambda;
    EXPECT_NEAR(*r.ratio, std::pow(*r.lambda / lambda_R, 3), 1e-12 * std::max(*r.ratio, 1e-30));
    EXPECT_LE(*r.oracle_value, *r.rs_value);
  }
}

TEST(Sweep, D2DLandsWithinShift) {
  const double target = 0.1 * shift_factor({1.0, 1e-5});
  for (const auto& r : run_experiment(small(ExperimentKind::active_d2d))) {
    EXPECT_LE(*r.oracle_value, target) << r.n << ' ' << *r.lambda;
    EXPECT_LE(*r.ratio, 1.0);
  }
}

TEST(Sweep, ByteIdenticalAcrossRunsAndWorkerCounts) {
  ExperimentConfig cfg = small(ExperimentKind::passive_logloss);
  cfg.oracle_trials = 5;
  const std::string a = render_report(run_experiment(cfg));
  const std::string b = render_report(run_experiment(cfg));
  cfg.workers = 3;
  const std::string c = render_report(run_experiment(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  cfg.master_seed = 1;
  EXPECT_NE(a, render_report(run_experiment(cfg)));
}

TEST(Sweep, SamplesAreNestedInN) {
  ExperimentConfig cfg = small(ExperimentKind::passive_mse);
  const harness::detail::SharedInputs shared = harness::detail::load_inputs(cfg);
  const harness::detail::CellRunner runner(cfg, shared);
  const Dataset small_set = runner.features(40, 1, LabelKind::real);
  const Dataset large_set = runner.features(80, 1, LabelKind::real);
  EXPECT_EQ(small_set.X, large_set.X.topRows(40));
}

TEST(Sweep, FailingCellsBecomeErrorRows) {
  ExperimentConfig cfg = small(ExperimentKind::passive_pca);
  cfg.dataset.spectrum_decay = 1.0;
  cfg.pca_k = 3;
  cfg.dataset.dim = 4;
  cfg.n_grid = {2};
  const auto rows = run_experiment(cfg);
  for (const auto& r : rows) EXPECT_FALSE(r.error.empty());
  EXPECT_NE(render_report(rows).find("degenerate: "), std::string::npos);
}

TEST(Sweep, CsvDatasetIsSubsampled) {
  ExperimentConfig cfg = small(ExperimentKind::passive_logloss);
  cfg.dataset.kind = "csv";
  cfg.dataset.path = std::string(UNLEARN_SAMPLES_DIR) + "/classification.csv";
  cfg.dataset.label_column = "label";
  cfg.dataset.project_to_B = true;
  cfg.n_grid = {30, 60, 100};
  const auto rows = run_experiment(cfg);
  for (const auto& r : rows) {
    if (r.n == 100) {
      EXPECT_NE(r.error.find("data: "), std::string::npos);
    } else {
      EXPECT_TRUE(r.error.empty()) << r.error;
      EXPECT_EQ(r.dataset, "classification");
    }
  }
}

TEST(Outputs, ReportAndSummaryFiles) {
  TempDir dir;
  ExperimentConfig cfg = small(ExperimentKind::passive_median);
  cfg.output_dir = dir.path();
  const auto rows = run_experiment(cfg);
  const SweepOutputs out = write_outputs(cfg, rows);
  const std::string report = slurp(out.report);
  EXPECT_EQ(report.rfind(kSchemaLine, 0), 0u);
  std::istringstream lines(report);
  std::string schema, header;
  std::getline(lines, schema);
  std::getline(lines, header);
  EXPECT_EQ(header,
            "experiment,dataset,n,lambda,seed,rs_value,gs_value,ratio,oracle_value,iterations,"
            "sigma,accuracy,accuracy_retrain,gram_min_eig,gram_min_eig_over_n,wall_time,error");
  const std::string summary = slurp(out.summary);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2 + 2);  // schema, header, one per n
  EXPECT_NE(summary.find("ratio_mean,ratio_std"), std::string::npos);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  run_parallel(100, 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Config, ValidationRejectsBadValues) {
  ExperimentConfig cfg;
  cfg.n_grid = {0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.active_loss = "hinge";
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_experiment("no_such"), ConfigError);
  cfg = ExperimentConfig{};
  cfg.dataset.kind = "parquet";
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}
