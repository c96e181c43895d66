#include "secu/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace secu {

namespace {

double xlogx(double n) { return n > 0.0 ? n * std::log(n) : 0.0; }

std::size_t argmin_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] < v[best]) best = j;
  }
  return best;
}

void check_costs(std::span<const double> costs, std::size_t k) {
  if (costs.size() != k) {
    throw ShapeError("assignment: " + std::to_string(costs.size()) + " costs for K=" +
                     std::to_string(k));
  }
}

}  // namespace

std::string to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::kGreedy: return "greedy";
    case ConstraintMode::kSizeLowerBound: return "size_lb";
    case ConstraintMode::kSizeBounds: return "size_lb_ub";
    case ConstraintMode::kEntropy: return "entropy";
  }
  return "?";
}

ConstraintMode parse_constraint_mode(const std::string& name) {
  if (name == "greedy") return ConstraintMode::kGreedy;
  if (name == "size_lb") return ConstraintMode::kSizeLowerBound;
  if (name == "size_lb_ub") return ConstraintMode::kSizeBounds;
  if (name == "entropy") return ConstraintMode::kEntropy;
  throw std::invalid_argument("unknown constraint mode '" + name +
                              "' (expected greedy, size_lb, size_lb_ub or entropy)");
}

void ConstraintConfig::validate() const {
  if (mode == ConstraintMode::kSizeLowerBound || mode == ConstraintMode::kSizeBounds) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(dual_lr > 0.0)) throw std::invalid_argument("dual learning rate must be positive");
  }
  if (mode == ConstraintMode::kSizeBounds && !(gamma_upper >= 1.0)) {
    throw std::invalid_argument("gamma_upper must be >= 1");
  }
  if (mode == ConstraintMode::kEntropy && !(alpha >= 0.0)) {
    throw std::invalid_argument("alpha must be non-negative");
  }
}

double default_alpha(std::size_t num_instances) {
  return 6.0 * static_cast<double>(num_instances) / 50.0;
}

AssignmentState::AssignmentState(std::size_t num_instances, std::size_t num_clusters)
    : labels_(num_instances, kUnassigned),
      counts_(num_clusters, 0),
      duals_lb_(num_clusters, 0.0),
      duals_ub_(num_clusters, 0.0) {
  if (num_clusters == 0) throw std::invalid_argument("AssignmentState: K must be positive");
}

void AssignmentState::set_label(std::size_t i, std::size_t j) {
  if (i >= labels_.size()) throw std::out_of_range("instance index out of range");
  if (j != kUnassigned && j >= counts_.size()) throw std::out_of_range("cluster index out of range");
  const std::size_t prev = labels_[i];
  if (prev == j) return;
  if (prev != kUnassigned) {
    --counts_[prev];
    --assigned_;
  }
  if (j != kUnassigned) {
    ++counts_[j];
    ++assigned_;
  }
  labels_[i] = j;
}

void AssignmentState::reset_duals() {
  std::fill(duals_lb_.begin(), duals_lb_.end(), 0.0);
  std::fill(duals_ub_.begin(), duals_ub_.end(), 0.0);
}

bool AssignmentState::consistent() const {
  std::vector<std::size_t> recount(counts_.size(), 0);
  std::size_t assigned = 0;
  for (std::size_t y : labels_) {
    if (y == kUnassigned) continue;
    if (y >= counts_.size()) return false;
    ++recount[y];
    ++assigned;
  }
  return recount == counts_ && assigned == assigned_;
}

Vec cluster_scores(std::span<const double> x, const Mat& centers, const ConstraintConfig& cfg,
                   Temperature lambda) {
  if (cfg.logit_scores) return matvec(centers, x);
  return log_softmax(predict(x, centers, lambda).logits);
}

Vec assignment_costs(std::span<const Vec> view_scores) {
  if (view_scores.empty() || view_scores.size() > 2) {
    throw std::invalid_argument("assignment_costs: need one or two views");
  }
  const std::size_t k = view_scores[0].size();
  Vec costs(k);
  if (view_scores.size() == 1) {
    for (std::size_t j = 0; j < k; ++j) costs[j] = -view_scores[0][j];
    return costs;
  }
  if (view_scores[1].size() != k) throw ShapeError("assignment_costs: views differ in K");
  for (std::size_t j = 0; j < k; ++j) costs[j] = -(view_scores[0][j] + view_scores[1][j]) / 2.0;
  return costs;
}

std::size_t assign_greedy(std::span<const double> costs) {
  if (costs.empty()) throw ShapeError("assign_greedy: empty costs");
  return argmin_lowest(costs);
}

std::size_t assign_size(std::span<const double> costs, const AssignmentState& state,
                        const ConstraintConfig& cfg) {
  check_costs(costs, state.num_clusters());
  const bool upper = cfg.mode == ConstraintMode::kSizeBounds;
  Vec adjusted(costs.begin(), costs.end());
  for (std::size_t j = 0; j < adjusted.size(); ++j) {
    adjusted[j] -= state.duals_lower()[j];
    if (upper) adjusted[j] += state.duals_upper()[j];
  }
  return argmin_lowest(adjusted);
}

void dual_update(std::span<const std::size_t> batch_labels, const ConstraintConfig& cfg,
                 AssignmentState& state) {
  if (batch_labels.empty()) throw std::invalid_argument("dual_update: empty batch");
  const std::size_t k = state.num_clusters();
  std::vector<std::size_t> hits(k, 0);
  for (std::size_t y : batch_labels) {
    if (y >= k) throw std::out_of_range("dual_update: label out of range");
    ++hits[y];
  }
  const double b = static_cast<double>(batch_labels.size());
  const double kk = static_cast<double>(k);
  Vec& lb = state.duals_lower();
  Vec& ub = state.duals_upper();
  for (std::size_t j = 0; j < k; ++j) {
    const double frac = static_cast<double>(hits[j]) / b;
    lb[j] = std::max(0.0, lb[j] - cfg.dual_lr * (frac - cfg.gamma / kk));
    if (cfg.mode == ConstraintMode::kSizeBounds) {
      ub[j] = std::max(0.0, ub[j] + cfg.dual_lr * (frac - cfg.gamma_upper / kk));
    }
  }
}

double entropy_of_counts(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (std::size_t n : counts) total += n;
  if (total == 0) return 0.0;
  const double m = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t n : counts) {
    if (n == 0) continue;
    const double q = static_cast<double>(n) / m;
    h -= q * std::log(q);
  }
  return h;
}

std::size_t assign_entropy(std::span<const double> costs, std::size_t i, AssignmentState& state,
                           double alpha) {
  const std::size_t k = state.num_clusters();
  check_costs(costs, k);
  const std::size_t prev = state.label(i);
  const auto& counts = state.counts();
  if (prev != kUnassigned && counts[prev] == 0) {
    throw std::logic_error("assign_entropy: counts inconsistent with labels (instance " +
                           std::to_string(i) + " in empty cluster " + std::to_string(prev) + ")");
  }
  // H = log M - S / M with S = sum_j n_j log n_j; moving one instance touches
  // only the source and destination terms of S.
  double s = 0.0;
  std::size_t total = 0;
  for (std::size_t n : counts) {
    s += xlogx(static_cast<double>(n));
    total += n;
  }
  if (total != state.num_assigned()) {
    throw std::logic_error("assign_entropy: counts do not sum to the assigned total");
  }
  const double m_after = static_cast<double>(prev == kUnassigned ? total + 1 : total);
  const double log_m = std::log(m_after);
  double s_removed = s;
  if (prev != kUnassigned) {
    const double np = static_cast<double>(counts[prev]);
    s_removed += xlogx(np - 1.0) - xlogx(np);
  }

  std::size_t best = 0;
  double best_value = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double s_j;
    if (j == prev) {
      s_j = s;
    } else {
      double nj = static_cast<double>(counts[j]);
      s_j = s_removed + xlogx(nj + 1.0) - xlogx(nj);
    }
    const double h_j = log_m - s_j / m_after;
    const double value = costs[j] - alpha * h_j;
    if (j == 0 || value < best_value) {
      best = j;
      best_value = value;
    }
  }
  state.set_label(i, best);
  return best;
}

double objective_entropy(const Mat& costs, const AssignmentState& state, double alpha) {
  if (costs.rows() != state.num_instances() || costs.cols() != state.num_clusters()) {
    throw ShapeError("objective_entropy: cost matrix shape differs from state");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < costs.rows(); ++i) {
    const std::size_t y = state.label(i);
    if (y == kUnassigned) throw std::logic_error("objective_entropy: unassigned instance");
    total += costs(i, y);
  }
  return total - alpha * entropy_of_counts(state.counts());
}

std::size_t assign_one(std::span<const double> costs, std::size_t i, AssignmentState& state,
                       const ConstraintConfig& cfg) {
  switch (cfg.mode) {
    case ConstraintMode::kEntropy:
      return assign_entropy(costs, i, state, cfg.alpha);
    case ConstraintMode::kSizeLowerBound:
    case ConstraintMode::kSizeBounds: {
      const std::size_t j = assign_size(costs, state, cfg);
      state.set_label(i, j);
      return j;
    }
    case ConstraintMode::kGreedy:
      break;
  }
  check_costs(costs, state.num_clusters());
  const std::size_t j = assign_greedy(costs);
  state.set_label(i, j);
  return j;
}

void init_pass(const Mat& embeddings, std::span<const std::size_t> order, ClusterCenters& centers,
               const ConstraintConfig& cfg, AssignmentState& state, std::size_t batch_size,
               Temperature lambda) {
  cfg.validate();
  if (batch_size == 0) throw std::invalid_argument("init_pass: batch size must be positive");
  if (embeddings.rows() != state.num_instances() || order.size() != embeddings.rows()) {
    throw ShapeError("init_pass: embeddings, order and state disagree on N");
  }
  if (state.num_assigned() != 0) throw std::logic_error("init_pass: state is not fresh");
  state.reset_duals();
  const bool size_mode =
      cfg.mode == ConstraintMode::kSizeLowerBound || cfg.mode == ConstraintMode::kSizeBounds;
  std::vector<std::size_t> batch_labels;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batch_labels.clear();
    for (std::size_t t = start; t < end; ++t) {
      const std::size_t i = order[t];
      const Vec scores = cluster_scores(embeddings.row(i), centers.weights, cfg, lambda);
      const Vec costs = assignment_costs(std::span<const Vec>(&scores, 1));
      batch_labels.push_back(assign_one(costs, i, state, cfg));
    }
    if (size_mode) dual_update(batch_labels, cfg, state);
  }
  // Uniform-weight means with carry-over for empty clusters.
  CenterAccumulator acc(centers.num_clusters(), centers.dim());
  const Vec zeros(embeddings.rows(), 0.0);
  accumulate(acc, embeddings, state.labels(), zeros);
  closed_form_update(acc, centers.weights);
}

void write_assignments_csv(std::ostream& out, std::span<const std::size_t> labels) {
  out << "index,cluster\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',';
    if (labels[i] == kUnassigned) {
      out << -1;
    } else {
      out << labels[i];
    }
    out << '\n';
  }
}

void write_assignments_csv(const std::string& path, std::span<const std::size_t> labels) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_assignments_csv(f, labels);
  if (!f) throw std::runtime_error("failed writing " + path);
}

}  // namespace secu
