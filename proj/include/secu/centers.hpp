#pragma once

#include <cstddef>
#include <span>

#include "secu/numerics.hpp"

namespace secu {

// Running sums for the hardness-weighted closed-form center update.
struct CenterAccumulator {
  Mat weighted_sum;  // K x d, sum_{i: y_i = j} (1 - p_iy) x_i
  Vec weight;        // K,     sum_{i: y_i = j} (1 - p_iy)

  CenterAccumulator() = default;
  CenterAccumulator(std::size_t k, std::size_t d) : weighted_sum(k, d), weight(k, 0.0) {}
  void reset();
};

// K unit-norm centers of one clustering head, plus optimizer state.
struct ClusterCenters {
  Mat weights;   // K x d, unit-norm rows
  Mat momentum;  // K x d, SGD momentum buffer
  CenterAccumulator accumulator;

  ClusterCenters() = default;
  // Rows of initial are normalized.
  explicit ClusterCenters(Mat initial);

  std::size_t num_clusters() const { return weights.rows(); }
  std::size_t dim() const { return weights.cols(); }
};

// Momentum SGD on every row followed by row renormalization. Throws NumericError
// when a row collapses below kNormEpsilon.
void sgd_update(ClusterCenters& centers, const Mat& grad, double lr, double momentum);

// weighted_sum_j += sum (1 - p_i) x_i and weight_j += sum (1 - p_i) over
// instances labeled j. assigned_probs[i] is p_{i, y_i}.
void accumulate(CenterAccumulator& acc, const Mat& embeddings, std::span<const std::size_t> labels,
                std::span<const double> assigned_probs);

// w_j <- normalize(weighted_sum_j / weight_j) for clusters with weight_j >
// kNormEpsilon; other clusters (and clusters whose weighted mean vanishes) keep
// their previous center. Clears the accumulator unless told otherwise.
void closed_form_update(CenterAccumulator& acc, Mat& centers, bool clear_accumulator = true);

// One projected gradient step of size lr on the objective whose gradient is
// w_j - weighted_sum_j / weight_j. With lr = 1 this is the closed-form update.
void projected_gd_step(const CenterAccumulator& acc, Mat& centers, double lr);

// Uniform-weight mean of the assigned instances. Empty clusters carry over;
// a degenerate (near-zero) mean throws NumericError.
void coke_update(const Mat& embeddings, std::span<const std::size_t> labels, Mat& centers);

// Deep copy of the current centers, used as the previous-epoch centers.
Mat snapshot(const Mat& centers);

enum class CenterSeeding { kUniform, kKMeansPlusPlus };
std::string to_string(CenterSeeding seeding);
CenterSeeding parse_center_seeding(const std::string& name);  // "uniform" | "kmeans++"

// Picks K distinct rows of embeddings, uniformly or by D^2 (k-means++) sampling.
Mat seed_centers(const Mat& embeddings, std::size_t k, SeededRng& rng,
                 CenterSeeding seeding = CenterSeeding::kKMeansPlusPlus);

}  // namespace secu
