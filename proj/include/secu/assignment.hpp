#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "secu/centers.hpp"
#include "secu/discrimination.hpp"
#include "secu/numerics.hpp"

namespace secu {

inline constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

enum class ConstraintMode { kGreedy, kSizeLowerBound, kSizeBounds, kEntropy };

std::string to_string(ConstraintMode mode);
ConstraintMode parse_constraint_mode(const std::string& name);

struct ConstraintConfig {
  ConstraintMode mode = ConstraintMode::kSizeLowerBound;
  double gamma = 0.9;        // lower bound, fraction of N/K
  double gamma_upper = 1.1;  // upper bound, fraction of N/K (kSizeBounds only)
  double alpha = 0.0;        // entropy weight (kEntropy only)
  double dual_lr = 0.1;
  // Score clusters by x^T w instead of log p.
  bool logit_scores = true;
  // Zero the dual variables at every epoch boundary.
  bool reset_duals = false;

  void validate() const;
};

// alpha = 6 N / 50.
double default_alpha(std::size_t num_instances);

// Hard labels of all instances plus the running cluster sizes and duals.
class AssignmentState {
 public:
  AssignmentState() = default;
  AssignmentState(std::size_t num_instances, std::size_t num_clusters);

  std::size_t num_instances() const { return labels_.size(); }
  std::size_t num_clusters() const { return counts_.size(); }
  std::size_t num_assigned() const { return assigned_; }

  const std::vector<std::size_t>& labels() const { return labels_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::size_t label(std::size_t i) const { return labels_.at(i); }

  Vec& duals_lower() { return duals_lb_; }
  const Vec& duals_lower() const { return duals_lb_; }
  Vec& duals_upper() { return duals_ub_; }
  const Vec& duals_upper() const { return duals_ub_; }

  // Moves instance i to cluster j (or kUnassigned), keeping counts in sync.
  void set_label(std::size_t i, std::size_t j);
  void reset_duals();

  // Full recount; true when counts agree with labels.
  bool consistent() const;

 private:
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> counts_;
  Vec duals_lb_;
  Vec duals_ub_;
  std::size_t assigned_ = 0;
};

// Per-cluster assignment score of one view: x^T w_j when cfg.logit_scores,
// otherwise log p_j at temperature lambda.
Vec cluster_scores(std::span<const double> x, const Mat& centers, const ConstraintConfig& cfg,
                   Temperature lambda);

// Per-cluster cost from one or two views of scores (log p or x^T w):
// cost_j = -(s1_j + s2_j) / 2, or -s_j for a single view.
Vec assignment_costs(std::span<const Vec> view_scores);

// argmin_j cost_j.
std::size_t assign_greedy(std::span<const double> costs);

// argmin_j cost_j - rho_j (+ rho'_j when upper bounds are active). Lowest index wins ties.
std::size_t assign_size(std::span<const double> costs, const AssignmentState& state,
                        const ConstraintConfig& cfg);

// Projected dual ascent after a batch:
// rho_j  <- max(0, rho_j  - lr (frac_j - gamma/K))
// rho'_j <- max(0, rho'_j + lr (frac_j - gamma'/K))
void dual_update(std::span<const std::size_t> batch_labels, const ConstraintConfig& cfg,
                 AssignmentState& state);

// -sum_j (n_j/N) log(n_j/N) over N = sum counts; 0 log 0 := 0. Returns 0 for N = 0.
double entropy_of_counts(std::span<const std::size_t> counts);

// Sequential entropy-regularized assignment of instance i: picks
// argmin_j cost_j - alpha H(counts with i moved to j) in O(K), then applies the
// move. Lowest index wins ties.
std::size_t assign_entropy(std::span<const double> costs, std::size_t i, AssignmentState& state,
                           double alpha);

// sum_i cost(i, y_i) - alpha H(counts). Every instance must be assigned.
double objective_entropy(const Mat& costs, const AssignmentState& state, double alpha);

// Assigns one instance under cfg (greedy, size or entropy). Dual updates are
// left to the caller's batch loop.
std::size_t assign_one(std::span<const double> costs, std::size_t i, AssignmentState& state,
                       const ConstraintConfig& cfg);

// Initialization pass over frozen embeddings: every instance is assigned once
// in the given order with batches of batch_size (duals updated per batch in size
// modes, counts growing from empty in entropy mode); centers are then reset to
// the uniform mean of their assigned embeddings.
void init_pass(const Mat& embeddings, std::span<const std::size_t> order, ClusterCenters& centers,
               const ConstraintConfig& cfg, AssignmentState& state, std::size_t batch_size,
               Temperature lambda);

// CSV with header "index,cluster".
void write_assignments_csv(std::ostream& out, std::span<const std::size_t> labels);
void write_assignments_csv(const std::string& path, std::span<const std::size_t> labels);

}  // namespace secu
