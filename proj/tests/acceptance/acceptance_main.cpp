// Acceptance suite: one [PASS]/[FAIL] line per primary criterion.
// Exit status is the number of failed criteria (capped at 1 for ctest).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "unlearn/unlearn.hpp"

using namespace unlearn;
using namespace unlearn::harness;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  const char* name;
  double time_limit_s;  // 0: no limit
  std::function<Outcome()> check;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

// Least-squares line through (x, y); returns slope and R^2.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0};
}

const PrivacyParams kParams{1.0, 1e-5};

// 1 -------------------------------------------------------------------------
Outcome median_oracle_equivalence() {
  CounterRng rng(101);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 3 + 2 * rng.below(100);
    ScalarSample s;
    s.values.resize(n);
    for (double& v : s.values) v = rng.uniform();
    if (t % 7 == 0) s.values[2] = s.values[0];
    if (rs_median(s).value != oracle_rs_median(s, 101).value) ++mismatches;
  }
  return {mismatches == 0, (Detail() << "1000 samples, " << mismatches << " mismatches").str()};
}

// 2 -------------------------------------------------------------------------
Outcome median_scaling() {
  const std::vector<std::size_t> sizes{101, 201, 401, 801, 1601, 3201};
  std::vector<double> lx, ly;
  for (std::size_t n : sizes) {
    double total = 0.0;
    for (int t = 0; t < 200; ++t) {
      total += rs_median(uniform_scalar(n, derive_seed(2, std::to_string(n) + "|" + std::to_string(t))))
                   .value;
    }
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(total / 200.0));
  }
  const auto [slope, r2] = fit_line(lx, ly);
  return {std::abs(slope + 1.0) <= 0.1,
          (Detail() << "log-log slope " << slope << " (R^2 " << r2 << ")").str()};
}

// 3 -------------------------------------------------------------------------
Outcome mst_oracle_equivalence() {
  CounterRng rng(303);
  int mismatches = 0;
  int graphs = 0;
  for (; graphs < 600; ++graphs) {
    const std::size_t n = 2 + rng.below(7);
    const WeightedGraph g = random_graph(n, rng.uniform(0.3, 1.0), rng(), 10.0, 10);
    if (rs_mst_edge(g).value != oracle_rs_mst(g).value) ++mismatches;
  }
  return {mismatches == 0,
          (Detail() << graphs << " graphs with <= 8 vertices, " << mismatches << " mismatches").str()};
}

// 4 -------------------------------------------------------------------------
Outcome mst_global_tightness() {
  bool ok = true;
  int cases = 0;
  for (std::size_t n = 3; n <= 12; ++n) {
    for (double B : {1.0, 2.5, 28010.0}) {
      const WeightedGraph g = near_complete_graph(n, B);
      ok = ok && rs_mst_edge(g).value == B && gs_mst_edge(B).value == B &&
           oracle_rs_mst(g).value == B;
      ++cases;
    }
  }
  return {ok, (Detail() << cases << " near-complete graphs, RS = oracle = GS = B").str()};
}

// 5 -------------------------------------------------------------------------
Outcome pca_bound_validity() {
  int violations = 0;
  int cov_violations = 0;
  double worst_fraction = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index k = 1 + t % 3;
    const Dataset data = gaussian_blob(50, 10, derive_seed(5, std::to_string(t)), LabelKind::none,
                                       1.0, 1.0, true, 0.7);
    const SpectralReport rep = spectral(covariance(data.X), k);
    const SensitivityReport oracle = oracle_rs_pca(data, k, 50, static_cast<std::uint64_t>(t));
    const double bound = rs_pca_bound(rep, data.n(), data.bound_B).value;
    if (oracle.value > bound) ++violations;
    if (oracle.inputs.at("max_cov_change_op") > 2.0 / 51.0) ++cov_violations;
    worst_fraction = std::max(worst_fraction, oracle.value / bound);
  }
  return {violations == 0 && cov_violations == 0,
          (Detail() << "100 datasets, bound violations " << violations
                    << ", covariance-change violations " << cov_violations
                    << ", largest oracle/bound " << worst_fraction)
              .str()};
}

// 6 -------------------------------------------------------------------------
Dataset spiked(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  CounterRng rng(seed);
  Dataset data;
  data.X.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.X(i, 0) = rng.uniform() < 0.5 ? -0.8 : 0.8;
    for (Eigen::Index j = 1; j < d; ++j) data.X(i, j) = 0.05 * rng.normal();
  }
  data.X.rowwise() -= data.X.colwise().mean();
  const double m = data.X.rowwise().norm().maxCoeff();
  if (m > 1.0) data.X /= m;
  return data;
}

Outcome pca_unlearning_utility() {
  const Eigen::Index n = 1000, d = 10, k = 1;
  const double c = gaussian_multiplier(kParams);
  int within = 0;
  bool projector_ok = true;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Dataset full = spiked(n + 1, d, derive_seed(6, std::to_string(t)));
    const Dataset retain = full.without(n);
    const SpectralReport rep_full = spectral(covariance(full.X), k);
    const SpectralReport rep_R = spectral(covariance(retain.X), k);
    const PcaUnlearnResult out =
        unlearn_pca(rep_full.projector, rep_R, n, 1.0, kParams, static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd& P = out.projector;
    projector_ok = projector_ok && (P * P - P).norm() <= 1e-8 &&
                   std::abs(P.trace() - static_cast<double>(k)) <= 1e-8;
    const double dist = symmetric_operator_norm(rep_R.projector - P);
    const double scale = static_cast<double>(n + 1) * rep_R.gap;
    const double bound = 10.0 * (1.0 / scale + std::sqrt(static_cast<double>(d)) * c / scale);
    if (dist <= bound) ++within;
    worst = std::max(worst, dist / bound);
  }
  return {projector_ok && within >= 48,
          (Detail() << "idempotent with trace k: " << (projector_ok ? "yes" : "no") << ", "
                    << within << "/50 within bound, largest distance/bound " << worst)
              .str()};
}

// 7 -------------------------------------------------------------------------
Outcome svm_checks() {
  const KernelSpec lin = KernelSpec::linear();
  // (a) norm identity, margin measured geometrically from the primal weights.
  double worst_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index d = 2 + t % 5;
    const Dataset data = margin_separable(40 + 2 * t, d, 0.1, derive_seed(7, std::to_string(t)));
    const Eigen::VectorXd w = train_hard_margin(data, lin).weights();
    const double gamma_R = (data.y.asDiagonal() * (data.X * w)).minCoeff() / w.norm();
    worst_rel = std::max(worst_rel, std::abs(w.norm() - 1.0 / gamma_R) * gamma_R);
  }
  // (b) additions respecting the true margin never move w beyond the bound.
  int additions = 0, exceed = 0;
  for (int inst = 0; inst < 5; ++inst) {
    const Dataset data = margin_separable(100, 3, 0.1, derive_seed(77, std::to_string(inst)));
    const SvmFit base = train_hard_margin(data, lin);
    MarginReport m = base.margin;
    m.true_margin = 0.1;
    const double bound = rs_svm(m).value;
    CounterRng rng(derive_seed(78, std::to_string(inst)));
    for (int a = 0; a < 100; ++a, ++additions) {
      const auto [x, y] = margin_point(rng, 3, 0.1);
      const SvmFit moved = train_hard_margin(data.with(x, y), lin, {}, &base.alpha);
      if (rkhs_distance(base, moved) > bound * (1.0 + 1e-6)) ++exceed;
    }
  }
  // (c) the RS/GS ratio falls as the retained prefix grows.
  int increases = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset pool = margin_separable(500, 5, 0.1, derive_seed(79, std::to_string(seed)));
    double prev = std::numeric_limits<double>::infinity();
    for (int f = 1; f <= 10; ++f) {
      MarginReport m = train_hard_margin(pool.head(50 * f), lin).margin;
      m.true_margin = 0.1;
      const double ratio = rs_svm(m).value / gs_svm(0.1).value;
      if (ratio > prev * (1.0 + 1e-6)) ++increases;
      prev = ratio;
    }
  }
  return {worst_rel <= 1e-6 && exceed == 0 && increases == 0,
          (Detail() << "norm identity worst rel. error " << worst_rel << "; " << exceed << "/"
                    << additions << " additions above bound; " << increases
                    << " ratio increases over 5 seeds")
              .str()};
}

// 8 -------------------------------------------------------------------------
Outcome erm_identities() {
  double worst_identity = 0.0;
  int violations = 0, retrainings = 0;
  for (LossKind kind : {LossKind::mse, LossKind::logistic}) {
    const LabelKind labels = kind == LossKind::mse ? LabelKind::real : LabelKind::binary;
    for (double lambda : {1e-5, 1e-3, 1e-1, 10.0}) {
      for (int t = 0; t < 10; ++t) {
        const Dataset data =
            gaussian_blob(50, 5, derive_seed(8, std::to_string(t)), labels);
        const LossSpec loss{kind, lambda};
        const CurvatureReport curv = curvature(data, loss);
        const double ratio = rs_erm(curv, 50).value / gs_erm(curv.L, 50, lambda).value;
        worst_identity = std::max(worst_identity, std::abs(ratio - lambda / curv.lambda_R) /
                                                      (lambda / curv.lambda_R));
        // 12 fixed candidates plus 38 random ones: 50 retrainings per dataset.
        const SensitivityReport oracle = oracle_stability(
            data, loss, ball_candidates(5, 1.0, kind), 38, static_cast<std::uint64_t>(t));
        retrainings += static_cast<int>(oracle.inputs.at("trials"));
        if (oracle.value > rs_erm(curv, 50).value) ++violations;
      }
    }
  }
  bool zero_lambda_ok = true;
  for (LossKind kind : {LossKind::mse, LossKind::logistic}) {
    const Dataset data = gaussian_blob(50, 5, 88, kind == LossKind::mse ? LabelKind::real
                                                                        : LabelKind::binary);
    const LossSpec loss{kind, 0.0};
    const CurvatureReport curv = curvature(data, loss);
    const SensitivityReport oracle =
        oracle_stability(data, loss, ball_candidates(5, 1.0, kind), 20, 1);
    zero_lambda_ok = zero_lambda_ok && curv.gram_min_eigenvalue > 0.0 &&
                     std::isfinite(oracle.value) && !gs_erm(curv.L, 50, 0.0).finite() &&
                     rs_erm(curv, 50).finite();
  }
  return {worst_identity <= 1e-12 && violations == 0 && zero_lambda_ok,
          (Detail() << "rs/gs vs lambda/lambda_R worst rel. error " << worst_identity << "; "
                    << retrainings << " retrainings, " << violations
                    << " datasets above L/(n lambda_R); lambda = 0: oracle finite, GS unbounded: "
                    << (zero_lambda_ok ? "yes" : "no"))
              .str()};
}

// 9 -------------------------------------------------------------------------
Outcome erm_root_bound() {
  // The root bound always sits at or above the first-order term L/(n lambda0)
  // (the square root is concave); check that ordering, that it covers
  // measured retraining moves, and the 1/n^2 decay of the gap.
  CounterRng rng(909);
  int order_failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const double lambda0 = std::pow(10.0, rng.uniform(-3.0, 1.0));
    const double L = rng.uniform(0.1, 5.0);
    const double M = rng.uniform(0.0, 2.0);
    const auto n = static_cast<Eigen::Index>(10 + rng.below(100000));
    if (lambda0 * lambda0 < 4.0 * M * L / static_cast<double>(n)) continue;
    const double first = L / (static_cast<double>(n) * lambda0);
    const double root = rs_erm_root(lambda0, L, M, n).value;
    if (root < first * (1.0 - 1e-12) || root > 2.0 * first * (1.0 + 1e-12)) ++order_failures;
  }
  int cover_failures = 0;
  for (int t = 0; t < 10; ++t) {
    Dataset data = gaussian_blob(300, 3, derive_seed(9, std::to_string(t)), LabelKind::binary);
    data.bound_Rw = 20.0;  // keeps the optimum interior
    const LossSpec loss{LossKind::logistic, 0.1};
    const ErmSolution sol = train(data, loss);
    if (sol.constraint_active) {
      ++cover_failures;
      continue;
    }
    const CurvatureReport curv = curvature(data, loss);
    const double root =
        rs_erm_root(hessian_min_eigenvalue(data, loss, sol.w), curv.L, curv.M, 300).value;
    const double oracle = oracle_stability(data, loss, ball_candidates(3, 1.0, LossKind::logistic),
                                           20, static_cast<std::uint64_t>(t))
                              .value;
    if (oracle > root) ++cover_failures;
  }
  const double lambda0 = 0.5, L = 1.1, M = 1.0 / (6.0 * std::sqrt(3.0));
  std::vector<double> lx, ly;
  for (Eigen::Index n : {100, 1000, 10000, 100000}) {
    const double residual =
        rs_erm_root(lambda0, L, M, n).value - L / (static_cast<double>(n) * lambda0);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(residual));
  }
  const auto [slope, r2] = fit_line(lx, ly);
  return {order_failures == 0 && cover_failures == 0 && r2 >= 0.99 && std::abs(slope + 2.0) <= 0.1,
          (Detail() << "L/(n lambda0) <= root <= 2L/(n lambda0) failures " << order_failures
                    << "; oracle above root " << cover_failures << "/10; residual slope " << slope
                    << " (R^2 " << r2 << ")")
              .str()};
}

// 10 ------------------------------------------------------------------------
Outcome d2d_certificate() {
  const double target = 0.1 * shift_factor(kParams);
  CounterRng rng(1010);
  int failures = 0;
  double worst_formula = 0.0;
  for (int t = 0; t < 200; ++t) {
    const LossKind kind = t % 2 == 0 ? LossKind::mse : LossKind::logistic;
    const Eigen::Index n = 50 + static_cast<Eigen::Index>(rng.below(250));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(5));
    UnlearnRequest req;
    req.full_data = gaussian_blob(n + 1, d, rng(),
                                  kind == LossKind::mse ? LabelKind::real : LabelKind::binary);
    req.delete_index = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1)));
    req.loss = {kind, std::pow(10.0, rng.uniform(-3.0, 0.0))};
    req.params = kParams;
    req.sigma = 0.1;
    req.seed = static_cast<std::uint64_t>(t);
    const Dataset retain = req.full_data.without(req.delete_index);
    const UnlearnResult out = unlearn_d2d(req, Calibration::retain);
    if ((out.w_prenoise - train(retain, req.loss).w).norm() > target) ++failures;

    const CurvatureReport r = curvature(retain, req.loss);
    const double nn = static_cast<double>(n);
    const double formula = (std::log(r.L / (nn * r.lambda_R * target)) * std::log(1.0 / r.gamma)) /
                           (std::log(r.L / (nn * r.lambda * target)) * std::log(1.0 / r.gamma_R));
    const double got = d2d_iterations_real(r.L, n, r.lambda_R, r.gamma_R, 0.1, kParams) /
                       d2d_iterations_real(r.L, n, r.lambda, r.gamma, 0.1, kParams);
    worst_formula = std::max(worst_formula, std::abs(got - formula));
  }
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::active_d2d;
  cfg.n_grid = {1000};
  cfg.lambda_grid = {1e-5, 10.0};
  cfg.seeds = {1, 2, 3};
  cfg.dataset.dim = 10;
  double small = 0.0, large = 0.0;
  for (const ReportRow& row : run_experiment(cfg)) {
    if (!row.error.empty() || !row.ratio) return {false, "sweep row failed: " + row.error};
    (*row.lambda < 1.0 ? small : large) += *row.ratio / 3.0;
  }
  return {failures == 0 && worst_formula <= 1e-9 && small < 0.1 && large > 0.9,
          (Detail() << failures << "/200 above sigma b; step-ratio formula error " << worst_formula
                    << "; mean I_R/I at lambda 1e-5: " << small << ", at 10: " << large)
              .str()};
}

// 11 ------------------------------------------------------------------------
Outcome newton_certificate() {
  CounterRng rng(1111);
  double worst_recovery = 0.0;
  double worst_sigma_ratio = 0.0;
  int failures = 0;
  int interior = 0;
  for (int t = 0; t < 500; ++t) {
    const Eigen::Index n = 50 + static_cast<Eigen::Index>(rng.below(250));
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(5));
    UnlearnRequest req;
    req.full_data = gaussian_blob(n + 1, d, rng(), LabelKind::binary);
    req.full_data.bound_Rw = 50.0;
    req.delete_index = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n + 1)));
    req.loss = {LossKind::logistic, std::pow(10.0, rng.uniform(-3.0, 0.0))};
    req.params = kParams;
    req.seed = static_cast<std::uint64_t>(t);
    const Dataset retain = req.full_data.without(req.delete_index);
    const CurvatureReport r = curvature(retain, req.loss);
    const UnlearnResult out = unlearn_newton(req, Calibration::retain);
    const ErmSolution sol_R = train(retain, req.loss);
    // The second-order bound is stated for an interior optimum.
    if (!sol_R.constraint_active && !out.audit.projection_active) {
      ++interior;
      const double bound = r.L * r.L * r.M / (static_cast<double>(n) * static_cast<double>(n) *
                                              std::pow(r.lambda_R, 3));
      if ((out.w_prenoise - sol_R.w).norm() > bound) ++failures;
    }

    const Eigen::VectorXd probe = train(req.full_data, req.loss).w;
    worst_recovery = std::max(
        worst_recovery,
        (recover_hessian(req.full_data, req.delete_index, req.loss, probe) - hessian(retain, req.loss, probe))
            .norm());
    const double ratio = newton_sigma(r, n, d, kParams, Calibration::retain).sigma /
                         newton_sigma(r, n, d, kParams, Calibration::global).sigma;
    const double expected = std::pow(r.lambda / r.lambda_R, 3);
    worst_sigma_ratio = std::max(worst_sigma_ratio, std::abs(ratio - expected) / expected);
  }
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::active_newton;
  cfg.dataset.kind = "margin_separable";
  cfg.dataset.dim = 10;
  cfg.dataset.gamma = 0.1;
  cfg.n_grid = {4000};
  cfg.lambda_grid = {1e-4};
  cfg.seeds = {1, 2, 3};
  cfg.test_size = 2000;
  double worst_gap = 0.0;
  for (const ReportRow& row : run_experiment(cfg)) {
    if (!row.error.empty() || !row.accuracy) return {false, "sweep row failed: " + row.error};
    worst_gap = std::max(worst_gap, std::abs(*row.accuracy - *row.accuracy_retrain));
  }
  return {worst_recovery <= 1e-10 && failures == 0 && interior >= 400 &&
              worst_sigma_ratio <= 1e-12 && worst_gap <= 0.02,
          (Detail() << "Hessian recovery error " << worst_recovery << "; " << failures << "/"
                    << interior << " interior instances above L^2 M/(n^2 lambda_R^3); sigma ratio rel. error "
                    << worst_sigma_ratio << "; accuracy gap to retraining " << worst_gap)
              .str()};
}

// 12 ------------------------------------------------------------------------
// Hockey-stick estimate from equal-mass bins of the pooled sample: the
// smallest eps with sum_b max(0, p_b - e^eps q_b) <= delta, both directions.
double empirical_epsilon(const std::vector<double>& a, const std::vector<double>& b, double delta) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  const std::size_t bins = 200;
  std::vector<double> edges;
  for (std::size_t i = 1; i < bins; ++i) edges.push_back(pooled[i * pooled.size() / bins]);
  auto histogram = [&](const std::vector<double>& s) {
    std::vector<double> h(bins, 0.0);
    for (double x : s) {
      h[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin())] +=
          1.0 / static_cast<double>(s.size());
    }
    return h;
  };
  const std::vector<double> p = histogram(a), q = histogram(b);
  auto excess = [&](const std::vector<double>& x, const std::vector<double>& y, double eps) {
    double s = 0.0;
    for (std::size_t i = 0; i < bins; ++i) s += std::max(0.0, x[i] - std::exp(eps) * y[i]);
    return s;
  };
  double lo = 0.0, hi = 50.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::max(excess(p, q, mid), excess(q, p, mid)) <= delta ? hi : lo) = mid;
  }
  return hi;
}

Outcome mechanism_round_trip() {
  double worst = 0.0;
  int points = 0;
  for (int i = 0; i < 10; ++i) {
    const double eps = std::pow(10.0, -2.0 + 3.0 * i / 9.0);
    for (int j = 0; j < 10; ++j) {
      const double delta = std::pow(10.0, -12.0 + 10.0 * j / 9.0);
      for (int k = 0; k < 10; ++k, ++points) {
        const double sigma = std::pow(10.0, -3.0 + 6.0 * k / 9.0);
        const double back = analytic_epsilon(max_shift({eps, delta}, sigma), sigma, delta);
        worst = std::max(worst, std::abs(back - eps));
      }
    }
  }
  double worst_excess = -1e9;
  std::ostringstream estimates;
  for (double eps : {0.5, 1.0, 2.0, 4.0}) {
    const double sigma = 1.0;
    const double shift = max_shift({eps, 1e-5}, sigma);
    const Eigen::VectorXd a = draw_noise_vector(sigma, 1000000, derive_seed(12, "a" + std::to_string(eps)));
    Eigen::VectorXd b = draw_noise_vector(sigma, 1000000, derive_seed(12, "b" + std::to_string(eps)));
    b.array() += shift;
    const double est = empirical_epsilon(std::vector<double>(a.data(), a.data() + a.size()),
                                         std::vector<double>(b.data(), b.data() + b.size()), 1e-5);
    const double certified = analytic_epsilon(shift, sigma, 1e-5);
    worst_excess = std::max(worst_excess, est - certified);
    estimates << " " << est << "/" << certified;
  }
  return {worst <= 1e-9 && worst_excess <= 0.05,
          (Detail() << points << "-point grid worst error " << worst
                    << "; empirical/certified eps:" << estimates.str())
              .str()};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"Median oracle equivalence", 10.0, median_oracle_equivalence},
      {"Median scaling", 60.0, median_scaling},
      {"MST oracle equivalence", 30.0, mst_oracle_equivalence},
      {"MST global tightness", 0.0, mst_global_tightness},
      {"PCA bound validity", 60.0, pca_bound_validity},
      {"PCA unlearning utility", 0.0, pca_unlearning_utility},
      {"SVM margin and stability", 0.0, svm_checks},
      {"ERM identities", 300.0, erm_identities},
      {"ERM root bound", 0.0, erm_root_bound},
      {"Descent-to-Delete certificate", 0.0, d2d_certificate},
      {"Newton certificate", 0.0, newton_certificate},
      {"Mechanism round trip", 0.0, mechanism_round_trip},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs > c.time_limit_s) {
      out.pass = false;
      out.detail += " (time limit exceeded)";
    }
    failed += out.pass ? 0 : 1;
    std::printf("[%s] %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
