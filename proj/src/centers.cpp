#include "secu/centers.hpp"

#include <algorithm>
#include <string>

namespace secu {

namespace {

void check_labels(const Mat& embeddings, std::span<const std::size_t> labels, const Mat& centers) {
  if (embeddings.rows() != labels.size()) throw ShapeError("embeddings and labels differ in count");
  if (embeddings.cols() != centers.cols()) throw ShapeError("embedding and center dims differ");
  for (std::size_t y : labels) {
    if (y >= centers.rows()) throw std::out_of_range("label " + std::to_string(y) + " out of range");
  }
}

}  // namespace

void CenterAccumulator::reset() {
  weighted_sum.fill(0.0);
  std::fill(weight.begin(), weight.end(), 0.0);
}

ClusterCenters::ClusterCenters(Mat initial)
    : weights(std::move(initial)),
      momentum(weights.rows(), weights.cols()),
      accumulator(weights.rows(), weights.cols()) {
  normalize_rows(weights);
}

void sgd_update(ClusterCenters& centers, const Mat& grad, double lr, double momentum) {
  Mat& w = centers.weights;
  if (grad.rows() != w.rows() || grad.cols() != w.cols()) {
    throw ShapeError("sgd_update: gradient is " + std::to_string(grad.rows()) + "x" +
                     std::to_string(grad.cols()) + ", centers are " + std::to_string(w.rows()) +
                     "x" + std::to_string(w.cols()));
  }
  auto& buf = centers.momentum.values();
  auto& vals = w.values();
  const auto& g = grad.values();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    buf[k] = momentum * buf[k] + g[k];
    vals[k] -= lr * buf[k];
  }
  for (std::size_t j = 0; j < w.rows(); ++j) {
    if (!(norm2(w.row(j)) > kNormEpsilon)) {
      throw NumericError("sgd_update: center " + std::to_string(j) +
                         " collapsed; learning rate too large?");
    }
  }
  normalize_rows(w);
}

void accumulate(CenterAccumulator& acc, const Mat& embeddings, std::span<const std::size_t> labels,
                std::span<const double> assigned_probs) {
  check_labels(embeddings, labels, acc.weighted_sum);
  if (assigned_probs.size() != labels.size()) throw ShapeError("accumulate: probability count mismatch");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = assigned_probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("accumulate: probability outside [0, 1]");
    const double h = 1.0 - p;
    const std::size_t j = labels[i];
    axpy(h, embeddings.row(i), acc.weighted_sum.row(j));
    acc.weight[j] += h;
  }
}

void closed_form_update(CenterAccumulator& acc, Mat& centers, bool clear_accumulator) {
  if (acc.weighted_sum.rows() != centers.rows() || acc.weighted_sum.cols() != centers.cols()) {
    throw ShapeError("closed_form_update: accumulator shape differs from centers");
  }
  Vec mean(centers.cols());
  for (std::size_t j = 0; j < centers.rows(); ++j) {
    if (!(acc.weight[j] > kNormEpsilon)) continue;
    const auto s = acc.weighted_sum.row(j);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] = s[c] / acc.weight[j];
    if (!(norm2(mean) > kNormEpsilon)) continue;
    const Vec w = normalize(mean);
    std::copy(w.begin(), w.end(), centers.row(j).begin());
  }
  if (clear_accumulator) acc.reset();
}

void projected_gd_step(const CenterAccumulator& acc, Mat& centers, double lr) {
  if (acc.weighted_sum.rows() != centers.rows() || acc.weighted_sum.cols() != centers.cols()) {
    throw ShapeError("projected_gd_step: accumulator shape differs from centers");
  }
  Vec step(centers.cols());
  for (std::size_t j = 0; j < centers.rows(); ++j) {
    if (!(acc.weight[j] > kNormEpsilon)) continue;
    auto w = centers.row(j);
    const auto s = acc.weighted_sum.row(j);
    for (std::size_t c = 0; c < step.size(); ++c) {
      const double grad = w[c] - s[c] / acc.weight[j];
      step[c] = w[c] - lr * grad;
    }
    const Vec u = normalize(step);
    std::copy(u.begin(), u.end(), w.begin());
  }
}

void coke_update(const Mat& embeddings, std::span<const std::size_t> labels, Mat& centers) {
  check_labels(embeddings, labels, centers);
  Mat sums(centers.rows(), centers.cols());
  std::vector<std::size_t> counts(centers.rows(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    axpy(1.0, embeddings.row(i), sums.row(labels[i]));
    ++counts[labels[i]];
  }
  for (std::size_t j = 0; j < centers.rows(); ++j) {
    if (counts[j] == 0) continue;
    auto s = sums.row(j);
    for (double& v : s) v /= static_cast<double>(counts[j]);
    const Vec w = normalize(s);  // throws on a degenerate mean
    std::copy(w.begin(), w.end(), centers.row(j).begin());
  }
}

Mat snapshot(const Mat& centers) { return centers; }

std::string to_string(CenterSeeding seeding) {
  return seeding == CenterSeeding::kUniform ? "uniform" : "kmeans++";
}

CenterSeeding parse_center_seeding(const std::string& name) {
  if (name == "uniform") return CenterSeeding::kUniform;
  if (name == "kmeans++") return CenterSeeding::kKMeansPlusPlus;
  throw std::invalid_argument("unknown center seeding '" + name + "' (expected uniform or kmeans++)");
}

Mat seed_centers(const Mat& embeddings, std::size_t k, SeededRng& rng, CenterSeeding seeding) {
  const std::size_t n = embeddings.rows();
  if (k == 0 || k > n) {
    throw std::invalid_argument("seed_centers: need 1 <= K <= N (K=" + std::to_string(k) +
                                ", N=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> chosen;
  if (seeding == CenterSeeding::kUniform) {
    const auto perm = rng.permutation(n);
    chosen.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
  }
  if (chosen.empty()) chosen.push_back(rng.below(n));
  // Squared distance to the nearest chosen center.
  Vec dist(n);
  auto sqdist = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    const auto x = embeddings.row(a);
    const auto y = embeddings.row(b);
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return s;
  };
  for (std::size_t i = 0; i < n; ++i) dist[i] = sqdist(i, chosen[0]);
  while (chosen.size() < k) {
    double total = 0.0;
    for (double d : dist) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] <= 0.0) continue;
        pick = i;
        r -= dist[i];
        if (r < 0.0) break;
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a chosen one; take any unchosen index.
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
      }
    }
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], sqdist(i, pick));
    dist[pick] = 0.0;
  }
  Mat out(k, embeddings.cols());
  for (std::size_t j = 0; j < k; ++j) {
    const auto src = embeddings.row(chosen[j]);
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  normalize_rows(out);
  return out;
}

}  // namespace secu
