#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "secu/assignment.hpp"
#include "secu/centers.hpp"
#include "secu/data_io.hpp"
#include "secu/encoder.hpp"
#include "secu/metrics.hpp"

namespace secu {

enum class CenterMode { kSgd, kClosedForm, kCoke };

std::string to_string(CenterMode mode);
CenterMode parse_center_mode(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double tau = 0.2;
  double lambda = 0.05;
  // Temperature for center updates and log-probability scores; defaults to lambda.
  std::optional<double> lambda_centers;
  ConstraintConfig constraint;
  CenterMode center_mode = CenterMode::kSgd;
  CenterSeeding center_seeding = CenterSeeding::kUniform;
  LrSchedule lr_encoder{0.2, 5, 50};
  double encoder_momentum = 0.9;
  double lr_centers = 1.2;
  double center_momentum = 0.9;
  // Cluster count of each head; heads[0] is the evaluation head.
  std::vector<std::size_t> heads{10};
  // When false only heads[0] is built and trained.
  bool auxiliary_heads = true;
  std::vector<std::size_t> hidden_dims{64, 64};
  std::size_t embedding_dim = 128;
  AugmentConfig augment;

  void validate() const;
  double center_temperature() const { return lambda_centers.value_or(lambda); }
};

// Centers plus assignment state of one clustering task sharing the encoder.
struct ClusterHead {
  ClusterCenters centers;
  Mat previous;  // centers frozen at the start of the current epoch
  AssignmentState state;
};

struct Model {
  EncoderMLP encoder;
  std::vector<ClusterHead> heads;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_repr = 0.0;
  double loss_ctr = 0.0;
  std::optional<double> objective;  // entropy mode only, evaluation head
  std::size_t count_min = 0;
  std::size_t count_max = 0;
  std::optional<double> acc;
  std::optional<double> nmi;
  std::optional<double> ari;

  bool operator==(const EpochLog&) const = default;
};

struct FitResult {
  Model model;
  std::vector<EpochLog> logs;
};

// Builds the encoder and heads, then runs the initialization pass with the
// encoder frozen.
Model initialize(const Dataset& data, const TrainConfig& cfg);

// One epoch: snapshot centers, then per batch update the encoder from two-view
// soft-label losses against the snapshot, reassign labels under the constraint
// and update the centers from hard labels.
EpochLog train_epoch(Model& model, const Dataset& data, const TrainConfig& cfg, std::size_t epoch);

// initialize + cfg.epochs training epochs.
FitResult fit(const Dataset& data, const TrainConfig& cfg);

// Unconstrained argmax predictions of one head.
std::vector<std::size_t> predict_labels(const Model& model, std::size_t head, const Mat& features);

MetricsReport evaluate(const Model& model, std::size_t head, const Dataset& data);

// One JSON object per line: epoch, loss_repr, loss_ctr, objective, count_min,
// count_max, acc, nmi, ari (null when unavailable).
std::string epoch_log_json(const EpochLog& log);
void write_epoch_logs(std::ostream& out, const std::vector<EpochLog>& logs);

}  // namespace secu
