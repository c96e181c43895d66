#include "secu/discrimination.hpp"

#include <cmath>
#include <string>

namespace secu {

namespace {

void check_label(std::size_t label, std::size_t k) {
  if (label >= k) {
    throw std::out_of_range("cluster label " + std::to_string(label) + " out of range for K=" +
                            std::to_string(k));
  }
}

void check_batch(const Mat& embeddings, std::span<const std::size_t> labels, const Mat& centers) {
  if (embeddings.rows() != labels.size()) {
    throw ShapeError("batch has " + std::to_string(embeddings.rows()) + " embeddings but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (embeddings.cols() != centers.cols()) {
    throw ShapeError("embedding dim " + std::to_string(embeddings.cols()) +
                     " differs from center dim " + std::to_string(centers.cols()));
  }
  for (std::size_t y : labels) check_label(y, centers.rows());
}

Vec scaled_logits(std::span<const double> x, const Mat& centers, Temperature lambda) {
  Vec logits = matvec(centers, x);
  for (double& v : logits) v /= lambda.value();
  return logits;
}

}  // namespace

Temperature::Temperature(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("temperature must be positive and finite, got " +
                                std::to_string(value));
  }
}

Prediction predict(std::span<const double> x, const Mat& centers, Temperature lambda) {
  Prediction p;
  p.logits = scaled_logits(x, centers, lambda);
  p.probs = stable_softmax(p.logits);
  return p;
}

double secu_loss(std::span<const double> x, std::size_t label, const Mat& centers,
                 Temperature lambda) {
  check_label(label, centers.rows());
  return -log_softmax(scaled_logits(x, centers, lambda))[label];
}

double soft_ce_loss(std::span<const double> x, const SoftLabel& target, const Mat& centers,
                    Temperature lambda) {
  if (target.weights.size() != centers.rows()) throw ShapeError("soft label length differs from K");
  const Vec logp = log_softmax(scaled_logits(x, centers, lambda));
  double loss = 0.0;
  for (std::size_t j = 0; j < logp.size(); ++j) {
    if (target.weights[j] != 0.0) loss -= target.weights[j] * logp[j];
  }
  return loss;
}

Vec grad_x(std::span<const double> x, const SoftLabel& target, const Mat& centers,
           Temperature lambda) {
  if (target.weights.size() != centers.rows()) throw ShapeError("soft label length differs from K");
  const Prediction p = predict(x, centers, lambda);
  Vec coeff(centers.rows());
  for (std::size_t j = 0; j < coeff.size(); ++j) {
    coeff[j] = (p.probs[j] - target.weights[j]) / lambda.value();
  }
  return matvec_transposed(centers, coeff);
}

LossAndGrad soft_ce_with_grad(std::span<const double> x, const SoftLabel& target,
                              const Mat& centers, Temperature lambda) {
  if (target.weights.size() != centers.rows()) throw ShapeError("soft label length differs from K");
  LossAndGrad out;
  out.prediction = predict(x, centers, lambda);
  const Vec logp = log_softmax(out.prediction.logits);
  Vec coeff(centers.rows());
  for (std::size_t j = 0; j < coeff.size(); ++j) {
    if (target.weights[j] != 0.0) out.loss -= target.weights[j] * logp[j];
    coeff[j] = (out.prediction.probs[j] - target.weights[j]) / lambda.value();
  }
  out.grad_x = matvec_transposed(centers, coeff);
  return out;
}

Mat grad_w_secu(const Mat& embeddings, std::span<const std::size_t> labels, const Mat& centers,
                Temperature lambda) {
  check_batch(embeddings, labels, centers);
  Mat g(centers.rows(), centers.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto x = embeddings.row(i);
    const std::size_t j = labels[i];
    const Prediction p = predict(x, centers, lambda);
    axpy((p.probs[j] - 1.0) / lambda.value(), x, g.row(j));
  }
  return g;
}

Mat grad_w_ce(const Mat& embeddings, std::span<const std::size_t> labels, const Mat& centers,
              Temperature lambda) {
  check_batch(embeddings, labels, centers);
  Mat g(centers.rows(), centers.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto x = embeddings.row(i);
    const Prediction p = predict(x, centers, lambda);
    for (std::size_t j = 0; j < centers.rows(); ++j) {
      const double target = j == labels[i] ? 1.0 : 0.0;
      axpy((p.probs[j] - target) / lambda.value(), x, g.row(j));
    }
  }
  return g;
}

double ce_batch_loss(const Mat& embeddings, std::span<const std::size_t> labels,
                     const Mat& centers, Temperature lambda) {
  check_batch(embeddings, labels, centers);
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    loss += secu_loss(embeddings.row(i), labels[i], centers, lambda);
  }
  return loss;
}

SoftLabel one_hot(std::size_t label, std::size_t num_clusters) {
  check_label(label, num_clusters);
  SoftLabel s{Vec(num_clusters, 0.0)};
  s.weights[label] = 1.0;
  return s;
}

SoftLabel soft_labels(std::size_t previous_label, const Prediction& other_view, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("soft_labels: tau must lie in [0, 1]");
  }
  const std::size_t k = other_view.probs.size();
  check_label(previous_label, k);
  SoftLabel s{Vec(k)};
  for (std::size_t j = 0; j < k; ++j) {
    s.weights[j] = (1.0 - tau) * other_view.probs[j] + (j == previous_label ? tau : 0.0);
  }
  return s;
}

}  // namespace secu
