#include "secu/trainer.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "secu/discrimination.hpp"

namespace secu {

namespace {

// Stream indices for SeededRng::split.
constexpr std::uint64_t kEncoderStream = 1;
constexpr std::uint64_t kInitOrderStream = 2;
constexpr std::uint64_t kHeadSeedStream = 1000;
constexpr std::uint64_t kEpochStream = 100000;

bool size_mode(const ConstraintConfig& c) {
  return c.mode == ConstraintMode::kSizeLowerBound || c.mode == ConstraintMode::kSizeBounds;
}

std::size_t active_heads(const TrainConfig& cfg) { return cfg.auxiliary_heads ? cfg.heads.size() : 1; }

void copy_row(std::span<const double> src, std::span<double> dst) {
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

std::string to_string(CenterMode mode) {
  switch (mode) {
    case CenterMode::kSgd: return "sgd";
    case CenterMode::kClosedForm: return "closed_form";
    case CenterMode::kCoke: return "coke";
  }
  return "?";
}

CenterMode parse_center_mode(const std::string& name) {
  if (name == "sgd") return CenterMode::kSgd;
  if (name == "closed_form") return CenterMode::kClosedForm;
  if (name == "coke") return CenterMode::kCoke;
  throw std::invalid_argument("unknown center mode '" + name + "' (expected sgd, closed_form or coke)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1]");
  static_cast<void>(Temperature(lambda));
  static_cast<void>(Temperature(center_temperature()));
  if (heads.empty()) throw std::invalid_argument("at least one head is required");
  for (std::size_t k : heads) {
    if (k == 0) throw std::invalid_argument("every head needs K >= 1");
  }
  if (embedding_dim == 0) throw std::invalid_argument("embedding_dim must be positive");
  if (epochs > 0) {
    if (lr_encoder.total_epochs != epochs) {
      throw std::invalid_argument("encoder schedule must span exactly `epochs` epochs");
    }
    lr_encoder.validate();
  }
  if (!(encoder_momentum >= 0.0 && encoder_momentum < 1.0) ||
      !(center_momentum >= 0.0 && center_momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(lr_centers >= 0.0)) throw std::invalid_argument("lr_centers must be >= 0");
  constraint.validate();
  augment.validate();
}

Model initialize(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const SeededRng master(cfg.seed);
  std::vector<std::size_t> dims{data.dim()};
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.embedding_dim);
  SeededRng enc_rng = master.split(kEncoderStream);
  Model model{EncoderMLP(dims, enc_rng), {}};

  const Mat embeddings = model.encoder.embed_rows(data.features);
  SeededRng order_rng = master.split(kInitOrderStream);
  const auto order = order_rng.permutation(data.size());
  const Temperature score_lambda(cfg.center_temperature());
  for (std::size_t h = 0; h < active_heads(cfg); ++h) {
    SeededRng head_rng = master.split(kHeadSeedStream + h);
    ClusterHead head;
    head.centers = ClusterCenters(seed_centers(embeddings, cfg.heads[h], head_rng, cfg.center_seeding));
    head.state = AssignmentState(data.size(), cfg.heads[h]);
    init_pass(embeddings, order, head.centers, cfg.constraint, head.state, cfg.batch_size, score_lambda);
    head.previous = snapshot(head.centers.weights);
    model.heads.push_back(std::move(head));
  }
  return model;
}

EpochLog train_epoch(Model& model, const Dataset& data, const TrainConfig& cfg, std::size_t epoch) {
  const std::size_t n = data.size();
  const std::size_t d = model.encoder.output_dim();
  const Temperature lambda(cfg.lambda);
  const Temperature lambda_c(cfg.center_temperature());
  SeededRng rng = SeededRng(cfg.seed).split(kEpochStream + epoch);
  const double lr = lr_at(cfg.lr_encoder, epoch);

  for (auto& head : model.heads) {
    head.previous = snapshot(head.centers.weights);
    if (cfg.constraint.reset_duals) head.state.reset_duals();
    head.centers.accumulator.reset();
  }
  const bool entropy = cfg.constraint.mode == ConstraintMode::kEntropy;
  // Latest costs of every instance under the evaluation head.
  Mat epoch_costs;
  if (entropy) epoch_costs = Mat(n, model.heads[0].centers.num_clusters());

  const auto order = rng.permutation(n);
  double loss_repr_total = 0.0;
  double loss_ctr_total = 0.0;
  std::size_t batches = 0;

  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t end = std::min(n, start + cfg.batch_size);
    const std::size_t b = end - start;
    const std::span<const std::size_t> ids(order.data() + start, b);

    // Two augmented views through the current encoder.
    Mat x1(b, d), x2(b, d);
    std::vector<ActivationTape> tapes1, tapes2;
    tapes1.reserve(b);
    tapes2.reserve(b);
    for (std::size_t t = 0; t < b; ++t) {
      const auto raw = data.features.row(ids[t]);
      const Vec v1 = augment(raw, cfg.augment, rng);
      const Vec v2 = augment(raw, cfg.augment, rng);
      auto o1 = model.encoder.forward(v1);
      auto o2 = model.encoder.forward(v2);
      copy_row(o1.embedding, x1.row(t));
      copy_row(o2.embedding, x2.row(t));
      tapes1.push_back(std::move(o1.tape));
      tapes2.push_back(std::move(o2.tape));
    }

    // Representation loss against the previous-epoch centers with soft labels.
    Mat g1(b, d), g2(b, d);
    double loss_repr = 0.0;
    for (auto& head : model.heads) {
      for (std::size_t t = 0; t < b; ++t) {
        const std::size_t y = head.state.label(ids[t]);
        const Prediction p1 = predict(x1.row(t), head.previous, lambda);
        const Prediction p2 = predict(x2.row(t), head.previous, lambda);
        const auto r1 = soft_ce_with_grad(x1.row(t), soft_labels(y, p2, cfg.tau), head.previous, lambda);
        const auto r2 = soft_ce_with_grad(x2.row(t), soft_labels(y, p1, cfg.tau), head.previous, lambda);
        loss_repr += (r1.loss + r2.loss) / 2.0;
        axpy(0.5 / static_cast<double>(b), r1.grad_x, g1.row(t));
        axpy(0.5 / static_cast<double>(b), r2.grad_x, g2.row(t));
      }
    }
    ParamGrads grads = model.encoder.zero_grads();
    for (std::size_t t = 0; t < b; ++t) {
      grads += model.encoder.backward(tapes1[t], g1.row(t));
      grads += model.encoder.backward(tapes2[t], g2.row(t));
    }
    model.encoder.sgd_step(grads, lr, cfg.encoder_momentum);
    loss_repr_total += loss_repr / static_cast<double>(b);

    // Clustering path on the detached embeddings against the current centers.
    double loss_ctr = 0.0;
    for (std::size_t h = 0; h < model.heads.size(); ++h) {
      auto& head = model.heads[h];
      const Mat& w = head.centers.weights;
      std::vector<std::size_t> labels(b);
      for (std::size_t t = 0; t < b; ++t) {
        const Vec views[2] = {cluster_scores(x1.row(t), w, cfg.constraint, lambda_c),
                              cluster_scores(x2.row(t), w, cfg.constraint, lambda_c)};
        const Vec costs = assignment_costs(views);
        if (h == 0 && entropy) copy_row(costs, epoch_costs.row(ids[t]));
        labels[t] = assign_one(costs, ids[t], head.state, cfg.constraint);
      }
      if (size_mode(cfg.constraint)) dual_update(labels, cfg.constraint, head.state);

      Vec p1(b), p2(b);
      for (std::size_t t = 0; t < b; ++t) {
        const Prediction q1 = predict(x1.row(t), w, lambda_c);
        const Prediction q2 = predict(x2.row(t), w, lambda_c);
        p1[t] = q1.probs[labels[t]];
        p2[t] = q2.probs[labels[t]];
        loss_ctr += (secu_loss(x1.row(t), labels[t], w, lambda_c) +
                     secu_loss(x2.row(t), labels[t], w, lambda_c)) /
                    2.0;
      }
      switch (cfg.center_mode) {
        case CenterMode::kSgd: {
          Mat grad = grad_w_secu(x1, labels, w, lambda_c);
          axpy(1.0, grad_w_secu(x2, labels, w, lambda_c).values(), grad.values());
          for (double& v : grad.values()) v /= 2.0 * static_cast<double>(b);
          sgd_update(head.centers, grad, cfg.lr_centers, cfg.center_momentum);
          break;
        }
        case CenterMode::kClosedForm:
          accumulate(head.centers.accumulator, x1, labels, p1);
          accumulate(head.centers.accumulator, x2, labels, p2);
          closed_form_update(head.centers.accumulator, head.centers.weights, false);
          break;
        case CenterMode::kCoke: {
          const Vec zeros(b, 0.0);
          accumulate(head.centers.accumulator, x1, labels, zeros);
          accumulate(head.centers.accumulator, x2, labels, zeros);
          closed_form_update(head.centers.accumulator, head.centers.weights, false);
          break;
        }
      }
    }
    loss_ctr_total += loss_ctr / static_cast<double>(b);
    ++batches;
  }

  EpochLog log;
  log.epoch = epoch;
  log.loss_repr = loss_repr_total / static_cast<double>(batches);
  log.loss_ctr = loss_ctr_total / static_cast<double>(batches);
  const auto& state = model.heads[0].state;
  if (entropy) log.objective = objective_entropy(epoch_costs, state, cfg.constraint.alpha);
  const auto [mn, mx] = std::minmax_element(state.counts().begin(), state.counts().end());
  log.count_min = *mn;
  log.count_max = *mx;
  if (data.labels) {
    const MetricsReport r = evaluate(model, 0, data);
    log.acc = r.acc;
    log.nmi = r.nmi;
    log.ari = r.ari;
  }
  return log;
}

FitResult fit(const Dataset& data, const TrainConfig& cfg) {
  FitResult result{initialize(data, cfg), {}};
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    result.logs.push_back(train_epoch(result.model, data, cfg, e));
  }
  return result;
}

std::vector<std::size_t> predict_labels(const Model& model, std::size_t head, const Mat& features) {
  if (head >= model.heads.size()) {
    throw std::out_of_range("head " + std::to_string(head) + " out of range (model has " +
                            std::to_string(model.heads.size()) + ")");
  }
  if (features.cols() != model.encoder.input_dim()) {
    throw ShapeError("features have dim " + std::to_string(features.cols()) + ", encoder expects " +
                     std::to_string(model.encoder.input_dim()));
  }
  const Mat& w = model.heads[head].centers.weights;
  std::vector<std::size_t> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    Vec costs = matvec(w, model.encoder.embed(features.row(i)));
    for (double& c : costs) c = -c;
    out[i] = assign_greedy(costs);
  }
  return out;
}

MetricsReport evaluate(const Model& model, std::size_t head, const Dataset& data) {
  if (!data.labels) throw std::invalid_argument("evaluate: dataset has no labels");
  const auto pred = predict_labels(model, head, data.features);
  return evaluate_partition(pred, *data.labels, model.heads[head].centers.num_clusters());
}

std::string epoch_log_json(const EpochLog& log) {
  using json = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = json::object();
  j["epoch"] = log.epoch;
  j["loss_repr"] = log.loss_repr;
  j["loss_ctr"] = log.loss_ctr;
  j["objective"] = opt(log.objective);
  j["count_min"] = log.count_min;
  j["count_max"] = log.count_max;
  j["acc"] = opt(log.acc);
  j["nmi"] = opt(log.nmi);
  j["ari"] = opt(log.ari);
  return j.dump();
}

void write_epoch_logs(std::ostream& out, const std::vector<EpochLog>& logs) {
  for (const auto& log : logs) out << epoch_log_json(log) << '\n';
}

}  // namespace secu
