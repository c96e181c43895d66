#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "secu/numerics.hpp"

namespace secu {

// ---------------------------------------------------------------------------
// Positive coverage of a mini-batch.

struct CoverageResult {
  std::size_t num_clusters = 0;
  std::size_t batch_size = 0;
  std::size_t trials = 0;
  // histogram[c] = number of batches in which exactly c clusters had a positive.
  std::vector<std::size_t> histogram;
  std::size_t max_covered = 0;
  double mean_covered = 0.0;

  double mean_uncovered_fraction() const;
};

// Draws `trials` batches of b instances whose cluster labels are uniform over K
// and counts the clusters with at least one positive. Trial t uses
// rng.split(t). Throws std::logic_error if a batch ever covers more than b
// clusters.
CoverageResult coverage_probe(std::size_t num_clusters, std::size_t batch_size, std::size_t trials,
                              const SeededRng& rng);

// K (1 - (1 - 1/K)^b): expected number of covered clusters.
double expected_coverage(std::size_t num_clusters, std::size_t batch_size);

// ---------------------------------------------------------------------------
// Variance of positives vs. negatives on the unit sphere.

// K clusters on S^{d-1}; cluster j draws x = a mu_j + sqrt(1 - a^2) u with u a
// uniform unit vector orthogonal to mu_j, so every x is unit-norm and E[x] = a mu_j.
struct SphereClusterModel {
  std::size_t num_clusters = 0;
  std::size_t dim = 0;
  double mean_norm = 0.0;
  Mat directions;  // K x d, unit rows drawn uniformly on the sphere

  static SphereClusterModel random(std::size_t num_clusters, std::size_t dim, double mean_norm,
                                   SeededRng& rng);
  Vec sample(std::size_t cluster, SeededRng& rng) const;
  Vec mean(std::size_t cluster) const;
};

struct VarianceProbeResult {
  double var_pos = 0.0;
  double var_neg = 0.0;
  double predicted_ratio = 0.0;
  double empirical_ratio = 0.0;
  // Average norm of the per-cluster sample means.
  double achieved_mean_norm = 0.0;
};

// Var_neg / Var_pos = (K - 2) / ((K - 1)(1 - a^2)) + 1 / (K - 1).
double predicted_variance_ratio(std::size_t num_clusters, double mean_norm);

// For each sample: an anchor cluster i is drawn; a positive from i is measured
// against mean_i, a negative from a uniformly drawn other cluster against the
// average of the other clusters' means.
VarianceProbeResult variance_ratio_probe(const SphereClusterModel& model, std::size_t samples,
                                         SeededRng& rng);

// ---------------------------------------------------------------------------
// Center drift under plain cross-entropy vs. stop-gradient center updates.

struct DriftConfig {
  std::size_t num_clusters = 10;
  std::size_t dim = 32;
  double mean_norm = 0.9;
  std::size_t per_cluster = 100;
  std::size_t batch_size = 32;
  std::size_t steps = 200;
  double lr = 0.5;
  double lambda = 0.05;
  double init_noise = 0.3;  // perturbation of the initial centers around the true means
};

struct DriftRow {
  std::size_t step = 0;
  std::string method;  // "ce" or "secu"
  double mean_displacement = 0.0;
};

struct DriftResult {
  std::vector<DriftRow> rows;
  std::size_t ce_max = 0, ce_min = 0;
  std::size_t secu_max = 0, secu_min = 0;
  Mat ce_centers;
  Mat secu_centers;
};

// Fixed embeddings and labels from a sphere model; both methods start from the
// same centers and see the same batches. mean_displacement is the average over
// centers of ||w_j(t) - w_j(t-1)||.
DriftResult drift_probe(const DriftConfig& cfg, const SeededRng& rng);
// Same, on caller-supplied embeddings, labels and initial centers.
DriftResult drift_probe(const Mat& embeddings, const std::vector<std::size_t>& labels,
                        const Mat& initial_centers, const DriftConfig& cfg, const SeededRng& rng);

void write_coverage_csv(std::ostream& out, const CoverageResult& r);
void write_variance_csv(std::ostream& out, const VarianceProbeResult& r);
void write_drift_csv(std::ostream& out, const DriftResult& r);

}  // namespace secu
