#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "secu/data_io.hpp"
#include "secu/numerics.hpp"

namespace secu {

// Two 2-d Gaussians with ten points each. Points go through an identity
// encoder and unit normalization; both methods alternate greedy assignment
// with a center update from the same starting centers. The uniform-weight
// baseline averages assigned points; the hardness-weighted variant weights
// each point by 1 - p_{i,y} at temperature `lambda`.
struct ToyConfig {
  std::size_t per_component = 10;
  double separation = 2.0;
  double lambda = 0.1;
  std::size_t iterations = 50;
};

struct ToyOutcome {
  std::uint64_t seed = 0;
  Dataset data;
  Mat embeddings;        // unit-norm points
  Mat uniform_centers;   // 2 x 2
  Mat weighted_centers;  // 2 x 2
  std::vector<std::size_t> uniform_labels;
  std::vector<std::size_t> weighted_labels;
  double uniform_acc = 0.0;
  double weighted_acc = 0.0;

  // Baseline misclassifies at least one point; the weighted variant none.
  bool separates() const { return uniform_acc < 1.0 && weighted_acc == 1.0; }
};

ToyOutcome run_toy(std::uint64_t seed, const ToyConfig& cfg = {});

// First seed in [first_seed, first_seed + max_tries) whose outcome separates.
std::optional<ToyOutcome> find_toy_seed(std::uint64_t first_seed, std::uint64_t max_tries,
                                        const ToyConfig& cfg = {});

// Figure data: kind,index,x,y,label,method rows for points and both center sets,
// followed by one acc row per method.
void write_toy_csv(std::ostream& out, const ToyOutcome& outcome);

}  // namespace secu
