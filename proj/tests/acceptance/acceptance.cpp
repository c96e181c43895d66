#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "secu/assignment.hpp"
#include "secu/centers.hpp"
#include "secu/discrimination.hpp"
#include "secu/metrics.hpp"
#include "secu/probes.hpp"
#include "secu/run_config.hpp"
#include "secu/toy.hpp"
#include "secu/trainer.hpp"

using namespace secu;

namespace {

// Tolerances and sizes, pinned.
constexpr double kGradRelTol = 1e-6;
constexpr double kGradSeconds = 10.0;
constexpr double kFixedPointTol = 1e-6;
constexpr double kClosedFormTol = 1e-10;
constexpr double kMonotoneSlack = 1e-12;
constexpr double kMinUncovered = 0.896;
constexpr double kVarianceRelTol = 0.10;
constexpr double kProbeSeconds = 60.0;
constexpr double kMinAcc = 0.95;
constexpr double kMinNmi = 0.90;
constexpr double kRunSeconds = 300.0;
constexpr double kCollapseFraction = 0.5;
constexpr double kBalancedSpreadFraction = 0.2;
constexpr double kBatchAccSpread = 0.04;
constexpr std::uint64_t kToySeed = 49;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Loss with the negative centers held at w0 and the positive one live.
double frozen_negative_loss(const Mat& x, const std::vector<std::size_t>& y, const Mat& w, const Mat& w0,
                            double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double pos = dot(x.row(i), w.row(y[i])) / lambda;
    double z = std::exp(pos);
    for (std::size_t k = 0; k < w.rows(); ++k) {
      if (k != y[i]) z += std::exp(dot(x.row(i), w0.row(k)) / lambda);
    }
    total += -(pos - std::log(z));
  }
  return total;
}

Outcome a1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(101);
  const std::size_t k = 8, d = 16, n = 100;
  double worst_x = 0.0, worst_ce = 0.0, worst_secu = 0.0;
  bool zero_rows = true;
  for (double lam : {0.05, 0.2, 1.0}) {
    const Temperature t(lam);
    Mat x = testing::random_unit_rows(n, d, rng);
    Mat w = testing::random_unit_rows(k, d, rng);
    std::vector<std::size_t> y(n);
    // Clusters 0 and 5 get no positives in this batch.
    for (auto& v : y) {
      v = rng.below(k - 2) + 1;
      if (v == 5) v = 7;
    }
    for (std::size_t i = 0; i < n; ++i) {
      Prediction other;
      other.probs = stable_softmax(testing::random_vec(k, rng));
      const SoftLabel target = soft_labels(y[i], other, 0.2);
      Vec xi(x.row(i).begin(), x.row(i).end());
      const Vec analytic = grad_x(xi, target, w, t);
      const Vec fd = testing::central_diff(xi, [&] { return soft_ce_loss(xi, target, w, t); });
      worst_x = std::max(worst_x, testing::max_rel_error(analytic, fd));
    }
    const Mat ce = grad_w_ce(x, y, w, t);
    const Vec ce_fd = testing::central_diff(w.values(), [&] { return ce_batch_loss(x, y, w, t); });
    worst_ce = std::max(worst_ce, testing::max_rel_error(ce.values(), ce_fd));
    const Mat w0 = w;
    const Mat sc = grad_w_secu(x, y, w, t);
    const Vec sc_fd = testing::central_diff(w.values(), [&] { return frozen_negative_loss(x, y, w, w0, lam); });
    worst_secu = std::max(worst_secu, testing::max_rel_error(sc.values(), sc_fd));
    for (std::size_t j : {0, 5}) {
      for (double v : sc.row(j)) zero_rows = zero_rows && v == 0.0;
    }
  }
  const double secs = seconds_since(t0);
  o.check(worst_x <= kGradRelTol, "grad_x max rel err " + num(worst_x));
  o.check(worst_ce <= kGradRelTol, "grad_w_ce max rel err " + num(worst_ce));
  o.check(worst_secu <= kGradRelTol, "grad_w_secu (frozen negatives) max rel err " + num(worst_secu));
  o.check(zero_rows, "grad_w_secu rows without positives are exactly zero");
  o.check(secs < kGradSeconds, "runtime " + num(secs) + " s");
  return o;
}

Outcome a2() {
  Outcome o;
  SeededRng rng(202);
  const std::size_t n = 200, k = 5, d = 8;
  const double lam = 0.05;
  const Mat dirs = testing::random_unit_rows(k, d, rng);
  Mat x(n, d);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % k;
    for (std::size_t c = 0; c < d; ++c) x(i, c) = dirs(y[i], c) + 0.4 * rng.normal();
  }
  normalize_rows(x);
  auto probs_at = [&](const Mat& w, double l) {
    Vec p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = predict(x.row(i), w, Temperature(l)).probs[y[i]];
    return p;
  };
  // p with the positive center live and every other center held at w0.
  auto frozen_probs = [&](const Mat& w, const Mat& w0, double l) {
    Vec p(n);
    Mat mixed = w0;
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(w.row(y[i]).begin(), w.row(y[i]).end(), mixed.row(y[i]).begin());
      p[i] = predict(x.row(i), mixed, Temperature(l)).probs[y[i]];
      std::copy(w0.row(y[i]).begin(), w0.row(y[i]).end(), mixed.row(y[i]).begin());
    }
    return p;
  };
  auto max_diff = [](const Mat& a, const Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
  };
  auto iterate = [&](double l, int& iters) {
    const Mat w0 = testing::random_unit_rows(k, d, rng);
    Mat w = w0;
    double residual = 1.0;
    for (iters = 0; iters < 1000 && residual > 1e-14; ++iters) {
      CenterAccumulator acc(k, d);
      accumulate(acc, x, y, frozen_probs(w, w0, l));
      const Mat before = w;
      closed_form_update(acc, w);
      residual = max_diff(w, before);
    }
    return residual;
  };

  for (double l : {0.2, 0.5, 1.0}) {
    int iters = 0;
    const double residual = iterate(l, iters);
    o.check(residual <= kFixedPointTol, "lambda " + num(l) + ": fixed point residual " + num(residual) + " after " +
                                            std::to_string(iters) + " steps");
  }
  {
    // Not counted: at the training temperature the undamped map falls into a 2-cycle.
    int iters = 0;
    const double residual = iterate(lam, iters);
    o.notes.push_back("info lambda " + num(lam) + ": residual " + num(residual) + " after " + std::to_string(iters) +
                      " steps");
  }

  Mat start = testing::random_unit_rows(k, d, rng);
  CenterAccumulator acc(k, d);
  accumulate(acc, x, y, probs_at(start, lam));
  Mat closed = start, pgd = start;
  closed_form_update(acc, closed, false);
  projected_gd_step(acc, pgd, 1.0);
  const double step_gap = max_diff(closed, pgd);
  o.check(step_gap <= kClosedFormTol, "closed form vs projected GD (lr 1) " + num(step_gap));

  CenterAccumulator hot(k, d);
  accumulate(hot, x, y, probs_at(start, 1e12));
  Mat hot_w = start, uniform = start;
  closed_form_update(hot, hot_w);
  coke_update(x, y, uniform);
  const double mean_gap = max_diff(hot_w, uniform);
  o.check(mean_gap <= kClosedFormTol, "lambda -> inf vs uniform mean " + num(mean_gap));
  return o;
}

Outcome a3() {
  Outcome o;
  SeededRng rng(303);
  const std::size_t n = 1000, k = 20;
  Mat costs(n, k);
  for (double& v : costs.values()) v = rng.uniform(-1.0, 1.0);
  for (double alpha : {0.0, 1.0, 10.0}) {
    AssignmentState s(n, k);
    for (std::size_t i = 0; i < n; ++i) s.set_label(i, rng.below(k));
    std::size_t violations = 0;
    double worst = -1e300;
    double before = objective_entropy(costs, s, alpha);
    const double first = before;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < n; ++i) {
        assign_entropy(costs.row(i), i, s, alpha);
        const double after = objective_entropy(costs, s, alpha);
        worst = std::max(worst, after - before);
        violations += after > before + kMonotoneSlack;
        before = after;
      }
    }
    o.check(violations == 0, "alpha " + num(alpha) + ": " + std::to_string(2 * n) + " moves, largest increase " +
                                 num(worst) + ", objective " + num(first) + " -> " + num(before));
  }
  return o;
}

Outcome a4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const CoverageResult cov = coverage_probe(10000, 1024, 1000, SeededRng(404));
  o.check(cov.max_covered <= 1024, "max covered " + std::to_string(cov.max_covered) + " of b = 1024");
  o.check(cov.mean_uncovered_fraction() >= kMinUncovered,
          "mean uncovered fraction " + num(cov.mean_uncovered_fraction()) + " (expected " +
              num(1.0 - expected_coverage(10000, 1024) / 10000.0) + ")");
  SeededRng model_rng(405), sample_rng(406);
  const auto model = SphereClusterModel::random(50, 128, 0.9, model_rng);
  const VarianceProbeResult v = variance_ratio_probe(model, 100000, sample_rng);
  const double rel = std::abs(v.empirical_ratio - v.predicted_ratio) / v.predicted_ratio;
  o.check(rel <= kVarianceRelTol, "variance ratio empirical " + num(v.empirical_ratio) + " predicted " +
                                      num(v.predicted_ratio) + " rel err " + num(rel));
  const double secs = seconds_since(t0);
  o.check(secs < kProbeSeconds, "runtime " + num(secs) + " s");
  return o;
}

// The separable mixture every end-to-end criterion shares.
Dataset mixture(std::uint64_t seed) {
  SeededRng rng(1000 + seed);
  return gen_gaussian_mixture({10, 200, 32, 10.0, 1.0}, rng);
}

TrainConfig base_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = 50;
  cfg.batch_size = 128;
  cfg.heads = {10};
  cfg.lr_encoder.total_epochs = cfg.epochs;
  return cfg;
}

TrainConfig size_config(std::uint64_t seed, double gamma) {
  TrainConfig cfg = base_config(seed);
  cfg.constraint.mode = ConstraintMode::kSizeLowerBound;
  cfg.constraint.gamma = gamma;
  return cfg;
}

TrainConfig entropy_config(std::uint64_t seed, double alpha) {
  TrainConfig cfg = base_config(seed);
  cfg.constraint.mode = ConstraintMode::kEntropy;
  cfg.constraint.alpha = alpha;
  return cfg;
}

TrainConfig greedy_config(std::uint64_t seed) {
  TrainConfig cfg = base_config(seed);
  cfg.constraint.mode = ConstraintMode::kGreedy;
  return cfg;
}

struct RunStats {
  MetricsReport metrics;
  double seconds = 0.0;
};

RunStats run(const Dataset& data, const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const FitResult r = fit(data, cfg);
  RunStats s{evaluate(r.model, 0, data), seconds_since(t0)};
  std::cerr << "  run seed " << cfg.seed << " mode " << to_string(cfg.constraint.mode) << " b " << cfg.batch_size
            << ": acc " << s.metrics.acc << " nmi " << s.metrics.nmi << " max " << s.metrics.max_count << " min "
            << s.metrics.min_count << " (" << s.seconds << " s)\n";
  return s;
}

Outcome a5() {
  Outcome o;
  const std::size_t n = 2000;
  struct Variant {
    std::string name;
    std::function<TrainConfig(std::uint64_t)> make;
  };
  const std::vector<Variant> variants{
      {"size gamma 0.9", [](std::uint64_t s) { return size_config(s, 0.9); }},
      {"entropy alpha 6N/50", [n](std::uint64_t s) { return entropy_config(s, default_alpha(n)); }},
  };
  for (const auto& v : variants) {
    std::vector<double> accs, nmis;
    double slowest = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RunStats r = run(mixture(seed), v.make(seed));
      accs.push_back(r.metrics.acc);
      nmis.push_back(r.metrics.nmi);
      slowest = std::max(slowest, r.seconds);
    }
    o.check(median(accs) >= kMinAcc, v.name + ": median ACC " + num(median(accs)));
    o.check(median(nmis) >= kMinNmi, v.name + ": median NMI " + num(median(nmis)));
    o.check(slowest < kRunSeconds, v.name + ": slowest run " + num(slowest) + " s");
  }
  return o;
}

Outcome a6() {
  Outcome o;
  const Dataset data = mixture(0);
  const double n = static_cast<double>(data.size());
  const RunStats greedy = run(data, greedy_config(0));
  const RunStats alpha0 = run(data, entropy_config(0, 0.0));
  const RunStats alpha_mid = run(data, entropy_config(0, default_alpha(data.size())));
  const RunStats alpha_big = run(data, entropy_config(0, 100.0 * n / 50.0));
  const RunStats gamma_mid = run(data, size_config(0, 0.9));
  const RunStats gamma_one = run(data, size_config(0, 1.0));

  auto spread = [](const RunStats& r) { return static_cast<double>(r.metrics.max_count - r.metrics.min_count); };
  o.check(static_cast<double>(greedy.metrics.max_count) >= kCollapseFraction * n,
          "no constraint: max count " + std::to_string(greedy.metrics.max_count) + " vs 0.5 N = " + num(0.5 * n));
  o.check(static_cast<double>(alpha0.metrics.max_count) >= kCollapseFraction * n,
          "alpha 0: max count " + std::to_string(alpha0.metrics.max_count) + " vs 0.5 N = " + num(0.5 * n));
  o.check(spread(alpha_big) <= kBalancedSpreadFraction * n,
          "alpha 100N/50: spread " + num(spread(alpha_big)) + " vs 0.2 N = " + num(0.2 * n));
  o.check(spread(gamma_one) <= kBalancedSpreadFraction * n,
          "gamma 1: spread " + num(spread(gamma_one)) + " vs 0.2 N = " + num(0.2 * n));
  o.check(alpha_mid.metrics.acc >= std::max(alpha0.metrics.acc, alpha_big.metrics.acc),
          "alpha 6N/50 ACC " + num(alpha_mid.metrics.acc) + " vs 0: " + num(alpha0.metrics.acc) +
              ", 100N/50: " + num(alpha_big.metrics.acc));
  o.check(gamma_mid.metrics.acc >= std::max(greedy.metrics.acc, gamma_one.metrics.acc),
          "gamma 0.9 ACC " + num(gamma_mid.metrics.acc) + " vs none: " + num(greedy.metrics.acc) +
              ", 1: " + num(gamma_one.metrics.acc));
  return o;
}

Outcome a7() {
  Outcome o;
  SeededRng rng(707);
  auto labels = [&](std::size_t n, std::size_t k) {
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = rng.below(k);
    return v;
  };
  std::size_t acc_bad = 0, ari_bad = 0;
  double nmi_worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(60);
    const auto p = labels(n, 1 + rng.below(6));
    const auto q = labels(n, 1 + rng.below(6));
    acc_bad += std::abs(accuracy(p, q) - testing::brute_force_accuracy(p, q)) > 1e-12;
  }
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(9);
    const auto p = labels(n, 1 + rng.below(5));
    const auto q = labels(n, 1 + rng.below(5));
    ari_bad += std::abs(ari(p, q) - testing::brute_force_ari(p, q)) > 1e-12;
  }
  for (int t = 0; t < 1000; ++t) {
    auto p = labels(2 + rng.below(200), 2 + rng.below(20));
    p[0] = 0;
    p[1] = 1;  // non-constant
    nmi_worst = std::max(nmi_worst, std::abs(nmi(p, p) - 1.0));
  }
  o.check(acc_bad == 0, "ACC vs brute-force matching: " + std::to_string(acc_bad) + " of 1000 differ");
  o.check(ari_bad == 0, "ARI vs pair counting: " + std::to_string(ari_bad) + " of 1000 differ");
  o.check(nmi_worst <= 1e-12, "NMI of identical partitions, worst |nmi - 1| " + num(nmi_worst));
  return o;
}

Outcome a8() {
  Outcome o;
  std::vector<double> medians;
  std::string detail;
  for (std::size_t b : {32, 64, 128, 256}) {
    std::vector<double> accs;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      TrainConfig cfg = size_config(seed, 0.9);
      cfg.batch_size = b;
      accs.push_back(run(mixture(seed), cfg).metrics.acc);
    }
    medians.push_back(median(accs));
    detail += " b" + std::to_string(b) + "=" + num(medians.back());
  }
  const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
  o.check(*hi - *lo <= kBatchAccSpread, "median ACC spread " + num(*hi - *lo) + ":" + detail);
  return o;
}

Outcome a9() {
  Outcome o;
  const std::string text =
      "[data]\nsource = gaussian\ncomponents = 4\nper_component = 100\ndim = 16\n"
      "[train]\nepochs = 4\nbatch_size = 64\nheads = 4,8\n"
      "[constraint]\nmode = entropy\n"
      "[run]\nseed = 9\n";
  auto outputs = [&] {
    const RunConfig rc = parse_run_config(text);
    const Dataset data = load_dataset(rc.data, rc.seed);
    const FitResult r = fit(data, resolve_train_config(rc, data));
    std::ostringstream csv, jsonl;
    write_assignments_csv(csv, r.model.heads[0].state.labels());
    write_epoch_logs(jsonl, r.logs);
    return std::make_pair(csv.str(), jsonl.str());
  };
  const auto first = outputs();
  const auto second = outputs();
  o.check(first.first == second.first, "assignments CSV identical (" + std::to_string(first.first.size()) + " bytes)");
  o.check(first.second == second.second, "metrics JSONL identical (" + std::to_string(first.second.size()) + " bytes)");
  return o;
}

Outcome a10() {
  Outcome o;
  const auto found = find_toy_seed(0, 1000);
  o.check(found.has_value(), "seed search over [0, 1000) finds a configuration");
  if (!found) return o;
  o.check(found->seed == kToySeed, "found seed " + std::to_string(found->seed) + " (fixture " +
                                       std::to_string(kToySeed) + ")");
  o.check(found->uniform_acc < 1.0 && found->weighted_acc == 1.0,
          "uniform ACC " + num(found->uniform_acc) + ", hardness-weighted ACC " + num(found->weighted_acc));
  std::ostringstream csv;
  write_toy_csv(csv, *found);
  std::ifstream f(SECU_FIXTURE_DIR "/toy_seed49.csv", std::ios::binary);
  std::stringstream fixture;
  fixture << f.rdbuf();
  o.check(f.good() && csv.str() == fixture.str(), "output matches the stored fixture byte for byte");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10},
  };
  CLI::App app{"acceptance checks"};
  std::string only;
  app.add_option("--only", only, "run a single criterion, e.g. A3");
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  bool ran = false;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && only != name) continue;
    ran = true;
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = fn();
    for (const auto& note : o.notes) std::cout << "  " << note << '\n';
    std::cout << name << (o.pass ? " PASS" : " FAIL") << " (" << num(seconds_since(t0)) << " s)" << std::endl;
    all_pass = all_pass && o.pass;
  }
  if (!ran) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
