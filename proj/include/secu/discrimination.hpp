#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "secu/numerics.hpp"

namespace secu {

// Softmax temperature. Always strictly positive.
class Temperature {
 public:
  explicit Temperature(double value);
  double value() const { return value_; }

 private:
  double value_;
};

struct Prediction {
  Vec logits;  // x^T w_j / lambda
  Vec probs;   // softmax(logits)
};

struct SoftLabel {
  Vec weights;
};

// Cluster-discrimination prediction of a unit-norm embedding against K unit-norm
// centers (rows of centers).
Prediction predict(std::span<const double> x, const Mat& centers, Temperature lambda);

// -log p_y. The stop-gradient on the negative centers only changes gradients,
// so the value equals the plain cross entropy.
double secu_loss(std::span<const double> x, std::size_t label, const Mat& centers,
                 Temperature lambda);

// -sum_j y_j log p_j.
double soft_ce_loss(std::span<const double> x, const SoftLabel& target, const Mat& centers,
                    Temperature lambda);

// d soft_ce_loss / d x = (1/lambda) sum_j (p_j - y_j) w_j. The caller's encoder
// backward applies the unit-norm projection.
Vec grad_x(std::span<const double> x, const SoftLabel& target, const Mat& centers,
           Temperature lambda);

struct LossAndGrad {
  double loss = 0.0;
  Vec grad_x;
  Prediction prediction;
};

// soft_ce_loss and grad_x from one prediction.
LossAndGrad soft_ce_with_grad(std::span<const double> x, const SoftLabel& target,
                              const Mat& centers, Temperature lambda);

// Center gradient of the summed batch loss with stop-gradient on negatives:
// row j = (1/lambda) sum_{i: y_i = j} (p_ij - 1) x_i. Rows of clusters without a
// positive in the batch are exactly zero.
Mat grad_w_secu(const Mat& embeddings, std::span<const std::size_t> labels, const Mat& centers,
                Temperature lambda);

// Center gradient of the summed plain cross-entropy batch loss:
// row j = (1/lambda) (sum_{i: y_i = j} (p_ij - 1) x_i + sum_{k: y_k != j} p_kj x_k).
Mat grad_w_ce(const Mat& embeddings, std::span<const std::size_t> labels, const Mat& centers,
              Temperature lambda);

// Summed plain cross entropy over a batch.
double ce_batch_loss(const Mat& embeddings, std::span<const std::size_t> labels,
                     const Mat& centers, Temperature lambda);

// tau * onehot(previous_label) + (1 - tau) * other_view.probs
SoftLabel soft_labels(std::size_t previous_label, const Prediction& other_view, double tau);
SoftLabel one_hot(std::size_t label, std::size_t num_clusters);

}  // namespace secu
