#include "secu/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "secu/centers.hpp"
#include "secu/discrimination.hpp"
#include "secu/metrics.hpp"

namespace secu {

double CoverageResult::mean_uncovered_fraction() const {
  return 1.0 - mean_covered / static_cast<double>(num_clusters);
}

CoverageResult coverage_probe(std::size_t num_clusters, std::size_t batch_size, std::size_t trials,
                              const SeededRng& rng) {
  if (num_clusters == 0 || batch_size == 0) {
    throw std::invalid_argument("coverage_probe: K and b must be positive");
  }
  CoverageResult r;
  r.num_clusters = num_clusters;
  r.batch_size = batch_size;
  r.trials = trials;
  r.histogram.assign(std::min(num_clusters, batch_size) + 1, 0);
  std::vector<char> hit(num_clusters, 0);
  std::vector<std::size_t> touched;
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng trial_rng = rng.split(t);
    touched.clear();
    for (std::size_t s = 0; s < batch_size; ++s) {
      const std::size_t c = trial_rng.below(num_clusters);
      if (!hit[c]) {
        hit[c] = 1;
        touched.push_back(c);
      }
    }
    const std::size_t covered = touched.size();
    // A positive belongs to exactly one cluster.
    if (covered > batch_size) throw std::logic_error("coverage_probe: more clusters covered than instances");
    ++r.histogram[covered];
    r.max_covered = std::max(r.max_covered, covered);
    total += static_cast<double>(covered);
    for (std::size_t c : touched) hit[c] = 0;
  }
  r.mean_covered = trials ? total / static_cast<double>(trials) : 0.0;
  return r;
}

double expected_coverage(std::size_t num_clusters, std::size_t batch_size) {
  const double k = static_cast<double>(num_clusters);
  return k * (1.0 - std::pow(1.0 - 1.0 / k, static_cast<double>(batch_size)));
}

SphereClusterModel SphereClusterModel::random(std::size_t num_clusters, std::size_t dim, double mean_norm,
                                              SeededRng& rng) {
  if (num_clusters == 0 || dim < 2) throw std::invalid_argument("SphereClusterModel: need K >= 1, d >= 2");
  if (!(mean_norm >= 0.0 && mean_norm < 1.0)) {
    throw std::invalid_argument("SphereClusterModel: mean norm must lie in [0, 1)");
  }
  SphereClusterModel m;
  m.num_clusters = num_clusters;
  m.dim = dim;
  m.mean_norm = mean_norm;
  m.directions = Mat(num_clusters, dim);
  for (std::size_t j = 0; j < num_clusters; ++j) {
    const Vec u = rng.unit_vector(dim);
    std::copy(u.begin(), u.end(), m.directions.row(j).begin());
  }
  return m;
}

Vec SphereClusterModel::sample(std::size_t cluster, SeededRng& rng) const {
  const auto mu = directions.row(cluster);
  Vec u;
  for (;;) {
    Vec g(dim);
    for (double& v : g) v = rng.normal();
    axpy(-dot(g, mu), mu, g);
    if (norm2(g) > 1e-8) {
      u = normalize(g);
      break;
    }
  }
  const double a = mean_norm;
  const double t = std::sqrt(1.0 - a * a);
  Vec x(dim);
  for (std::size_t c = 0; c < dim; ++c) x[c] = a * mu[c] + t * u[c];
  return x;
}

Vec SphereClusterModel::mean(std::size_t cluster) const {
  Vec m(directions.row(cluster).begin(), directions.row(cluster).end());
  for (double& v : m) v *= mean_norm;
  return m;
}

double predicted_variance_ratio(std::size_t num_clusters, double mean_norm) {
  if (num_clusters < 2) throw std::invalid_argument("predicted_variance_ratio: need K >= 2");
  const double k = static_cast<double>(num_clusters);
  const double a2 = mean_norm * mean_norm;
  return (k - 2.0) / ((k - 1.0) * (1.0 - a2)) + 1.0 / (k - 1.0);
}

VarianceProbeResult variance_ratio_probe(const SphereClusterModel& model, std::size_t samples,
                                         SeededRng& rng) {
  const std::size_t k = model.num_clusters;
  const std::size_t d = model.dim;
  if (k < 2) throw std::invalid_argument("variance_ratio_probe: need K >= 2");
  if (samples == 0) throw std::invalid_argument("variance_ratio_probe: need samples > 0");

  Mat means(k, d);
  Vec total(d, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const Vec m = model.mean(j);
    std::copy(m.begin(), m.end(), means.row(j).begin());
    axpy(1.0, m, total);
  }
  // Mean of the other clusters' means, per anchor.
  Mat others(k, d);
  for (std::size_t i = 0; i < k; ++i) {
    auto row = others.row(i);
    for (std::size_t c = 0; c < d; ++c) row[c] = (total[c] - means(i, c)) / static_cast<double>(k - 1);
  }

  Mat sample_sums(k, d);
  std::vector<std::size_t> sample_counts(k, 0);
  double pos = 0.0;
  double neg = 0.0;
  auto sqdist = [](std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return s;
  };
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t i = rng.below(k);
    const Vec xp = model.sample(i, rng);
    pos += sqdist(xp, means.row(i));
    axpy(1.0, xp, sample_sums.row(i));
    ++sample_counts[i];
    std::size_t j = rng.below(k - 1);
    if (j >= i) ++j;
    const Vec xn = model.sample(j, rng);
    neg += sqdist(xn, others.row(i));
  }
  VarianceProbeResult r;
  r.var_pos = pos / static_cast<double>(samples);
  r.var_neg = neg / static_cast<double>(samples);
  r.predicted_ratio = predicted_variance_ratio(k, model.mean_norm);
  r.empirical_ratio = r.var_neg / r.var_pos;
  double norm_sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (sample_counts[j] == 0) continue;
    norm_sum += norm2(sample_sums.row(j)) / static_cast<double>(sample_counts[j]);
    ++seen;
  }
  r.achieved_mean_norm = seen ? norm_sum / static_cast<double>(seen) : 0.0;
  return r;
}

DriftResult drift_probe(const Mat& embeddings, const std::vector<std::size_t>& labels,
                        const Mat& initial_centers, const DriftConfig& cfg, const SeededRng& rng) {
  if (cfg.batch_size == 0) throw std::invalid_argument("drift_probe: batch size must be positive");
  const Temperature lambda(cfg.lambda);
  const std::size_t n = embeddings.rows();
  const std::size_t k = initial_centers.rows();
  DriftResult result;
  ClusterCenters ce(initial_centers);
  ClusterCenters sc(initial_centers);
  SeededRng batch_rng = rng.split(1);
  Mat batch(cfg.batch_size, embeddings.cols());
  std::vector<std::size_t> batch_labels(cfg.batch_size);
  auto mean_shift = [k](const Mat& before, const Mat& after) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < before.cols(); ++c) {
        d2 += (after(j, c) - before(j, c)) * (after(j, c) - before(j, c));
      }
      s += std::sqrt(d2);
    }
    return s / static_cast<double>(k);
  };
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (std::size_t t = 0; t < cfg.batch_size; ++t) {
      const std::size_t i = batch_rng.below(n);
      std::copy(embeddings.row(i).begin(), embeddings.row(i).end(), batch.row(t).begin());
      batch_labels[t] = labels[i];
    }
    const double scale = 1.0 / static_cast<double>(cfg.batch_size);
    Mat g_ce = grad_w_ce(batch, batch_labels, ce.weights, lambda);
    Mat g_sc = grad_w_secu(batch, batch_labels, sc.weights, lambda);
    for (double& v : g_ce.values()) v *= scale;
    for (double& v : g_sc.values()) v *= scale;
    const Mat ce_before = ce.weights;
    const Mat sc_before = sc.weights;
    sgd_update(ce, g_ce, cfg.lr, 0.0);
    sgd_update(sc, g_sc, cfg.lr, 0.0);
    result.rows.push_back({step, "ce", mean_shift(ce_before, ce.weights)});
    result.rows.push_back({step, "secu", mean_shift(sc_before, sc.weights)});
  }
  auto greedy_sizes = [&](const Mat& w) {
    std::vector<std::size_t> pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vec costs = matvec(w, embeddings.row(i));
      for (double& c : costs) c = -c;
      pred[i] = std::min_element(costs.begin(), costs.end()) - costs.begin();
    }
    return size_stats(pred, k);
  };
  const SizeStats ce_sizes = greedy_sizes(ce.weights);
  const SizeStats sc_sizes = greedy_sizes(sc.weights);
  result.ce_max = ce_sizes.max_count;
  result.ce_min = ce_sizes.min_count;
  result.secu_max = sc_sizes.max_count;
  result.secu_min = sc_sizes.min_count;
  result.ce_centers = ce.weights;
  result.secu_centers = sc.weights;
  return result;
}

DriftResult drift_probe(const DriftConfig& cfg, const SeededRng& rng) {
  SeededRng model_rng = rng.split(0);
  const auto model = SphereClusterModel::random(cfg.num_clusters, cfg.dim, cfg.mean_norm, model_rng);
  const std::size_t n = cfg.num_clusters * cfg.per_cluster;
  Mat embeddings(n, cfg.dim);
  std::vector<std::size_t> labels(n);
  SeededRng sample_rng = rng.split(2);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i / cfg.per_cluster;
    const Vec x = model.sample(labels[i], sample_rng);
    std::copy(x.begin(), x.end(), embeddings.row(i).begin());
  }
  Mat init(cfg.num_clusters, cfg.dim);
  SeededRng init_rng = rng.split(3);
  for (std::size_t j = 0; j < cfg.num_clusters; ++j) {
    auto row = init.row(j);
    const auto mu = model.directions.row(j);
    for (std::size_t c = 0; c < cfg.dim; ++c) row[c] = mu[c] + cfg.init_noise * init_rng.normal() / std::sqrt(static_cast<double>(cfg.dim));
  }
  normalize_rows(init);
  return drift_probe(embeddings, labels, init, cfg, rng);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_coverage_csv(std::ostream& out, const CoverageResult& r) {
  out << "covered,count\n";
  for (std::size_t c = 0; c < r.histogram.size(); ++c) {
    if (r.histogram[c]) out << c << ',' << r.histogram[c] << '\n';
  }
}

void write_variance_csv(std::ostream& out, const VarianceProbeResult& r) {
  out << "var_pos,var_neg,predicted_ratio,empirical_ratio\n";
  out << fmt(r.var_pos) << ',' << fmt(r.var_neg) << ',' << fmt(r.predicted_ratio) << ','
      << fmt(r.empirical_ratio) << '\n';
}

void write_drift_csv(std::ostream& out, const DriftResult& r) {
  out << "step,method,mean_displacement\n";
  for (const auto& row : r.rows) out << row.step << ',' << row.method << ',' << fmt(row.mean_displacement) << '\n';
}

}  // namespace secu
