#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace secu {

struct ContingencyTable {
  std::size_t rows = 0;  // predicted clusters
  std::size_t cols = 0;  // true classes
  std::vector<std::size_t> table;  // rows x cols, row-major
  std::vector<std::size_t> row_sums;
  std::vector<std::size_t> col_sums;
  std::size_t total = 0;

  std::size_t at(std::size_t r, std::size_t c) const { return table[r * cols + c]; }
};

// Label values index the table directly, so rows = max(pred)+1, cols = max(truth)+1.
ContingencyTable contingency(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

// Minimum-cost perfect matching on a square cost matrix (row-major, n x n).
// Returns the column assigned to each row.
std::vector<std::size_t> hungarian_min_cost(std::span<const double> cost, std::size_t n);

// Fraction of instances matched under the best one-to-one cluster/class mapping.
double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

// I(pred; truth) / sqrt(H(pred) H(truth)), natural log, 0/0 := 0.
double nmi(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

// Adjusted Rand index. Degenerate denominator: 1 if the partitions coincide, else 0.
double ari(std::span<const std::size_t> pred, std::span<const std::size_t> truth);

struct SizeStats {
  std::size_t max_count = 0;
  std::size_t min_count = 0;
};

// Extremes over clusters 0..num_clusters-1, empty clusters included.
SizeStats size_stats(std::span<const std::size_t> pred, std::size_t num_clusters);

struct MetricsReport {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  std::size_t max_count = 0;
  std::size_t min_count = 0;
};

MetricsReport evaluate_partition(std::span<const std::size_t> pred, std::span<const std::size_t> truth,
                                 std::size_t num_clusters);

}  // namespace secu
