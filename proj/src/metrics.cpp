#include "secu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace secu {

namespace {

void check_inputs(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  if (pred.empty()) throw std::invalid_argument("metrics: empty input");
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("metrics: prediction and truth lengths differ (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
}

double choose2(std::size_t n) {
  const double x = static_cast<double>(n);
  return x * (x - 1.0) / 2.0;
}

double entropy(const std::vector<std::size_t>& sums, double n) {
  double h = 0.0;
  for (std::size_t s : sums) {
    if (s == 0) continue;
    const double q = static_cast<double>(s) / n;
    h -= q * std::log(q);
  }
  return h;
}

}  // namespace

ContingencyTable contingency(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  check_inputs(pred, truth);
  constexpr std::size_t kMaxLabels = 10000;
  ContingencyTable t;
  t.rows = *std::max_element(pred.begin(), pred.end()) + 1;
  t.cols = *std::max_element(truth.begin(), truth.end()) + 1;
  if (t.rows > kMaxLabels || t.cols > kMaxLabels) {
    throw std::invalid_argument("metrics: label values above 10^4 are not supported");
  }
  t.table.assign(t.rows * t.cols, 0);
  t.row_sums.assign(t.rows, 0);
  t.col_sums.assign(t.cols, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++t.table[pred[i] * t.cols + truth[i]];
    ++t.row_sums[pred[i]];
    ++t.col_sums[truth[i]];
  }
  t.total = pred.size();
  return t;
}

std::vector<std::size_t> hungarian_min_cost(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("hungarian: cost matrix is not n x n");
  // Shortest augmenting path with row/column potentials; 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  const ContingencyTable t = contingency(pred, truth);
  const std::size_t n = std::max(t.rows, t.cols);
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) cost[r * n + c] = -static_cast<double>(t.at(r, c));
  }
  const auto match = hungarian_min_cost(cost, n);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    if (match[r] < t.cols) hits += t.at(r, match[r]);
  }
  return static_cast<double>(hits) / static_cast<double>(t.total);
}

double nmi(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  const ContingencyTable t = contingency(pred, truth);
  const double n = static_cast<double>(t.total);
  const double hp = entropy(t.row_sums, n);
  const double ht = entropy(t.col_sums, n);
  if (hp <= 0.0 || ht <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      const std::size_t nij = t.at(r, c);
      if (nij == 0) continue;
      const double x = static_cast<double>(nij);
      mi += (x / n) * std::log(x * n / (static_cast<double>(t.row_sums[r]) *
                                        static_cast<double>(t.col_sums[c])));
    }
  }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

double ari(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  const ContingencyTable t = contingency(pred, truth);
  double index = 0.0;
  for (std::size_t v : t.table) index += choose2(v);
  double sum_a = 0.0;
  for (std::size_t a : t.row_sums) sum_a += choose2(a);
  double sum_b = 0.0;
  for (std::size_t b : t.col_sums) sum_b += choose2(b);
  const double pairs = choose2(t.total);
  const double expected = pairs > 0.0 ? sum_a * sum_b / pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) {
    // Both partitions trivial: identical up to relabeling or not at all.
    return index == max_index ? 1.0 : 0.0;
  }
  return (index - expected) / denom;
}

SizeStats size_stats(std::span<const std::size_t> pred, std::size_t num_clusters) {
  if (num_clusters == 0) throw std::invalid_argument("size_stats: K must be positive");
  std::vector<std::size_t> counts(num_clusters, 0);
  for (std::size_t y : pred) {
    if (y >= num_clusters) throw std::out_of_range("size_stats: label out of range");
    ++counts[y];
  }
  return {*std::max_element(counts.begin(), counts.end()),
          *std::min_element(counts.begin(), counts.end())};
}

MetricsReport evaluate_partition(std::span<const std::size_t> pred, std::span<const std::size_t> truth,
                                 std::size_t num_clusters) {
  MetricsReport r;
  r.acc = accuracy(pred, truth);
  r.nmi = nmi(pred, truth);
  r.ari = ari(pred, truth);
  const SizeStats s = size_stats(pred, num_clusters);
  r.max_count = s.max_count;
  r.min_count = s.min_count;
  return r;
}

}  // namespace secu
