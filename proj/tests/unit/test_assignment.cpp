#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "secu/assignment.hpp"
#include "secu/metrics.hpp"

using namespace secu;

namespace {

ConstraintConfig mode(ConstraintMode m, double alpha = 0.0) {
  ConstraintConfig c;
  c.mode = m;
  c.alpha = alpha;
  return c;
}

// Full recomputation of H after moving i to j.
double entropy_after_move(const AssignmentState& s, std::size_t i, std::size_t j) {
  std::vector<std::size_t> counts = s.counts();
  if (s.label(i) != kUnassigned) --counts[s.label(i)];
  ++counts[j];
  return entropy_of_counts(counts);
}

}  // namespace

TEST_SUITE("assignment") {

TEST_CASE("config validation and names") {
  for (auto m : {ConstraintMode::kGreedy, ConstraintMode::kSizeLowerBound, ConstraintMode::kSizeBounds,
                 ConstraintMode::kEntropy}) {
    CHECK(parse_constraint_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_constraint_mode("balanced"), std::invalid_argument);
  ConstraintConfig c;
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = mode(ConstraintMode::kSizeBounds);
  c.gamma_upper = 0.9;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = mode(ConstraintMode::kEntropy, -1.0);
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(default_alpha(50000) == doctest::Approx(6000.0));
}

TEST_CASE("state keeps counts in sync") {
  AssignmentState s(5, 3);
  CHECK(s.num_assigned() == 0);
  s.set_label(0, 2);
  s.set_label(1, 2);
  s.set_label(1, 0);
  s.set_label(4, 1);
  CHECK(s.counts() == std::vector<std::size_t>{1, 1, 1});
  CHECK(s.num_assigned() == 3);
  s.set_label(0, kUnassigned);
  CHECK(s.counts() == std::vector<std::size_t>{1, 1, 0});
  CHECK(s.consistent());
  CHECK_THROWS_AS(s.set_label(5, 0), std::out_of_range);
  CHECK_THROWS_AS(s.set_label(0, 3), std::out_of_range);
}

TEST_CASE("scores and costs") {
  const Mat w(2, 2, {1, 0, 0, 1});
  ConstraintConfig logits;
  const Vec s = cluster_scores(Vec{0.6, 0.8}, w, logits, Temperature(0.05));
  CHECK(s == Vec{0.6, 0.8});
  ConstraintConfig logp;
  logp.logit_scores = false;
  const Vec lp = cluster_scores(Vec{0.6, 0.8}, w, logp, Temperature(0.5));
  CHECK(lp[1] - lp[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(std::exp(lp[0]) + std::exp(lp[1]) == doctest::Approx(1.0).epsilon(1e-14));

  const Vec one = assignment_costs(std::vector<Vec>{Vec{1, 2, 3}});
  CHECK(one == Vec{-1, -2, -3});
  CHECK(assignment_costs(std::vector<Vec>{Vec{1, 2, 3}, Vec{1, 2, 3}}) == one);
  const Vec tie = assignment_costs(std::vector<Vec>{Vec{1, -1}, Vec{-1, 1}});
  CHECK(tie[0] == tie[1]);
  SeededRng rng(1);
  const Vec a = testing::random_vec(4, rng), b = testing::random_vec(4, rng);
  const Vec two = assignment_costs(std::vector<Vec>{a, b});
  for (std::size_t j = 0; j < 4; ++j) CHECK(two[j] == -(a[j] + b[j]) / 2.0);
  CHECK_THROWS_AS(assignment_costs(std::vector<Vec>{}), std::invalid_argument);
}

TEST_CASE("greedy and size assignment") {
  CHECK(assign_greedy(Vec{0.5, -1, -1, 2}) == 1);
  AssignmentState s(1, 3);
  const ConstraintConfig lb = mode(ConstraintMode::kSizeLowerBound);
  const Vec costs{0.1, -0.3, 0.2};
  CHECK(assign_size(costs, s, lb) == assign_greedy(costs));
  s.duals_lower()[2] = 1e6;
  CHECK(assign_size(costs, s, lb) == 2);

  // Exhaustive argmin over mixed duals.
  SeededRng rng(2);
  const ConstraintConfig ub = mode(ConstraintMode::kSizeBounds);
  for (int t = 0; t < 200; ++t) {
    AssignmentState st(1, 3);
    for (std::size_t j = 0; j < 3; ++j) {
      st.duals_lower()[j] = rng.uniform();
      st.duals_upper()[j] = rng.uniform();
    }
    const Vec c = testing::random_vec(3, rng);
    std::size_t best_lb = 0, best_ub = 0;
    for (std::size_t j = 1; j < 3; ++j) {
      if (c[j] - st.duals_lower()[j] < c[best_lb] - st.duals_lower()[best_lb]) best_lb = j;
      if (c[j] - st.duals_lower()[j] + st.duals_upper()[j] <
          c[best_ub] - st.duals_lower()[best_ub] + st.duals_upper()[best_ub]) best_ub = j;
    }
    CHECK(assign_size(c, st, lb) == best_lb);
    CHECK(assign_size(c, st, ub) == best_ub);
  }
}

TEST_CASE("dual updates") {
  ConstraintConfig cfg = mode(ConstraintMode::kSizeLowerBound);
  cfg.gamma = 1.0;
  AssignmentState s(4, 4);
  for (auto& d : s.duals_lower()) d = 0.5;
  dual_update(std::vector<std::size_t>{0, 1, 2, 3}, cfg, s);
  for (double d : s.duals_lower()) CHECK(d == doctest::Approx(0.5).epsilon(1e-15));

  cfg.gamma = 0.9;
  AssignmentState z(4, 4);
  dual_update(std::vector<std::size_t>{0, 0, 1, 1}, cfg, z);
  CHECK(z.duals_lower()[2] == doctest::Approx(0.1 * 0.9 / 4).epsilon(1e-15));
  CHECK(z.duals_lower()[0] == 0.0);

  ConstraintConfig both = mode(ConstraintMode::kSizeBounds);
  both.dual_lr = 0.3;
  AssignmentState h(6, 3);
  h.duals_lower() = Vec{0.2, 0.0, 0.05};
  h.duals_upper() = Vec{0.0, 0.1, 0.4};
  const std::vector<std::size_t> batch{0, 0, 0, 1, 0, 1};
  dual_update(batch, both, h);
  const double f0 = 4.0 / 6, f1 = 2.0 / 6, f2 = 0.0;
  CHECK(h.duals_lower()[0] == doctest::Approx(std::max(0.0, 0.2 - 0.3 * (f0 - 0.3))));
  CHECK(h.duals_lower()[2] == doctest::Approx(0.05 + 0.3 * 0.3));
  CHECK(h.duals_upper()[0] == doctest::Approx(0.3 * (f0 - 1.1 / 3)));
  CHECK(h.duals_upper()[1] == doctest::Approx(std::max(0.0, 0.1 + 0.3 * (f1 - 1.1 / 3))));
  CHECK(h.duals_upper()[2] == doctest::Approx(std::max(0.0, 0.4 + 0.3 * (f2 - 1.1 / 3))));
  for (double d : h.duals_lower()) CHECK(d >= 0.0);
  for (double d : h.duals_upper()) CHECK(d >= 0.0);
  CHECK_THROWS_AS(dual_update(std::vector<std::size_t>{}, both, h), std::invalid_argument);
}

TEST_CASE("entropy of counts") {
  CHECK(entropy_of_counts(std::vector<std::size_t>{5, 5, 5, 5}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(entropy_of_counts(std::vector<std::size_t>{0, 9, 0}) == 0.0);
  CHECK(entropy_of_counts(std::vector<std::size_t>{3, 1}) == doctest::Approx(0.5623351446188083).epsilon(1e-14));
  CHECK(entropy_of_counts(std::vector<std::size_t>{0, 0}) == 0.0);
}

TEST_CASE("entropy assignment with alpha 0 is greedy") {
  SeededRng rng(3);
  AssignmentState s(50, 6);
  for (std::size_t i = 0; i < 50; ++i) {
    const Vec c = testing::random_vec(6, rng);
    CHECK(assign_entropy(c, i, s, 0.0) == assign_greedy(c));
  }
}

TEST_CASE("incremental entropy matches full recomputation") {
  SeededRng rng(4);
  const std::size_t n = 60, k = 7;
  AssignmentState s(n, k);
  for (std::size_t i = 0; i < n; ++i) s.set_label(i, rng.below(k));
  const double alpha = 3.0;
  for (int move = 0; move < 1000; ++move) {
    const std::size_t i = rng.below(n);
    const Vec c = testing::random_vec(k, rng, 0.1);
    // Enumeration oracle with full entropy recomputation.
    std::size_t best = 0;
    double best_v = 0.0;
    Vec values(k);
    for (std::size_t j = 0; j < k; ++j) {
      values[j] = c[j] - alpha * entropy_after_move(s, i, j);
      if (j == 0 || values[j] < best_v) {
        best = j;
        best_v = values[j];
      }
    }
    const std::size_t got = assign_entropy(c, i, s, alpha);
    CHECK(std::abs(values[got] - best_v) <= 1e-12);
    if (got != best) CHECK(std::abs(values[got] - values[best]) <= 1e-12);
  }
  CHECK(s.consistent());
}

TEST_CASE("huge alpha with equal costs maximizes entropy") {
  AssignmentState s(10, 4);
  for (std::size_t i = 0; i < 9; ++i) s.set_label(i, i < 4 ? 0 : (i < 7 ? 1 : 2));
  const Vec equal(4, 0.0);
  double best_h = -1.0;
  for (std::size_t j = 0; j < 4; ++j) best_h = std::max(best_h, entropy_after_move(s, 9, j));
  const std::size_t got = assign_entropy(equal, 9, s, 1e6);
  CHECK(got == 3);
  CHECK(entropy_of_counts(s.counts()) == doctest::Approx(best_h).epsilon(1e-15));
}

TEST_CASE("entropy assignment checks the cost length") {
  AssignmentState s(3, 2);
  s.set_label(0, 1);
  s.set_label(1, 1);
  s.set_label(2, 0);
  CHECK_THROWS_AS(assign_entropy(Vec{0, 0, 0}, 0, s, 1.0), ShapeError);
  CHECK(s.consistent());
}

TEST_CASE("objective_entropy") {
  AssignmentState s(3, 2);
  s.set_label(0, 0);
  s.set_label(1, 1);
  s.set_label(2, 1);
  const Mat costs(3, 2, {0.5, 1.0, 2.0, -1.0, 0.25, 0.75});
  CHECK(objective_entropy(costs, s, 0.0) == doctest::Approx(0.5 - 1.0 + 0.75));
  const double h = entropy_of_counts(std::vector<std::size_t>{1, 2});
  CHECK(objective_entropy(costs, s, 2.0) == doctest::Approx(0.25 - 2.0 * h).epsilon(1e-14));
  CHECK(objective_entropy(Mat(3, 2, 1.0), s, 3.0) == doctest::Approx(3.0 - 3.0 * h).epsilon(1e-14));
  AssignmentState partial(3, 2);
  partial.set_label(0, 0);
  CHECK_THROWS_AS(objective_entropy(costs, partial, 1.0), std::logic_error);
}

TEST_CASE("sequential entropy assignment never increases the objective") {
  SeededRng rng(5);
  const std::size_t n = 200, k = 8;
  Mat costs(n, k);
  for (double& v : costs.values()) v = rng.uniform(-1.0, 1.0);
  for (double alpha : {0.0, 1.0, 10.0}) {
    AssignmentState s(n, k);
    for (std::size_t i = 0; i < n; ++i) s.set_label(i, rng.below(k));
    for (int pass = 0; pass < 3; ++pass) {
      for (std::size_t i = 0; i < n; ++i) {
        const double before = objective_entropy(costs, s, alpha);
        assign_entropy(costs.row(i), i, s, alpha);
        CHECK(objective_entropy(costs, s, alpha) <= before + 1e-12);
      }
    }
  }
}

TEST_CASE("init pass") {
  SeededRng rng(6);
  const Mat x = testing::random_unit_rows(30, 3, rng);
  std::vector<std::size_t> order(30);
  for (std::size_t i = 0; i < 30; ++i) order[i] = i;

  ClusterCenters one(Mat(1, 3, {1, 0, 0}));
  AssignmentState s1(30, 1);
  init_pass(x, order, one, mode(ConstraintMode::kEntropy, 5.0), s1, 8, Temperature(0.05));
  for (std::size_t y : s1.labels()) CHECK(y == 0);

  // Separable clusters: tight bundles around three orthogonal directions. A
  // large alpha would push the first few points into empty clusters.
  Mat sep(60, 3);
  std::vector<std::size_t> truth(60);
  for (std::size_t i = 0; i < 60; ++i) {
    truth[i] = i % 3;
    Vec v{0.05 * rng.normal(), 0.05 * rng.normal(), 0.05 * rng.normal()};
    v[truth[i]] += 1.0;
    const Vec u = normalize(v);
    std::copy(u.begin(), u.end(), sep.row(i).begin());
  }
  std::vector<std::size_t> ord = rng.permutation(60);
  ClusterCenters c(Mat(3, 3, {0.9, 0.3, 0.1, 0.2, 0.9, 0.1, 0.1, 0.3, 0.9}));
  AssignmentState s(60, 3);
  init_pass(sep, ord, c, mode(ConstraintMode::kEntropy, 0.5), s, 16, Temperature(0.05));
  CHECK(accuracy(s.labels(), truth) == 1.0);
  CHECK(s.consistent());

  ClusterCenters c2(Mat(3, 3, {0.9, 0.3, 0.1, 0.2, 0.9, 0.1, 0.1, 0.3, 0.9}));
  AssignmentState again(60, 3);
  init_pass(sep, ord, c2, mode(ConstraintMode::kEntropy, 0.5), again, 16, Temperature(0.05));
  CHECK(again.labels() == s.labels());
  CHECK(c2.weights == c.weights);

  CHECK_THROWS_AS(init_pass(sep, ord, c2, mode(ConstraintMode::kEntropy), again, 16, Temperature(0.05)),
                  std::logic_error);
}

TEST_CASE("size-mode init pass starts from zero duals") {
  SeededRng rng(7);
  const Mat x = testing::random_unit_rows(40, 4, rng);
  const auto order = rng.permutation(40);
  ClusterCenters c(testing::random_unit_rows(4, 4, rng));
  AssignmentState s(40, 4);
  s.duals_lower() = Vec(4, 5.0);
  init_pass(x, order, c, mode(ConstraintMode::kSizeLowerBound), s, 10, Temperature(0.05));
  CHECK(s.num_assigned() == 40);
  // Four batches from zero can raise a dual by at most 4 * lr * gamma / K.
  for (double d : s.duals_lower()) {
    CHECK(d >= 0.0);
    CHECK(d <= 4 * 0.1 * 0.9 / 4 + 1e-15);
  }
}

TEST_CASE("assignments csv") {
  std::ostringstream out;
  write_assignments_csv(out, std::vector<std::size_t>{2, 0, 1});
  CHECK(out.str() == "index,cluster\n0,2\n1,0\n2,1\n");
}

}
