#include <algorithm>
#include <numeric>

#include "dal/error.hpp"
#include "dal/matrix_ops.hpp"
#include "dal/mlp.hpp"

namespace dal {

void TrainConfig::validate() const {
  DAL_REQUIRE(batch_size >= 1, "TrainConfig: batch_size must be at least 1");
  DAL_REQUIRE(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
  if (const auto* rule = std::get_if<TrainAccuracyThreshold>(&stop_rule)) {
    DAL_REQUIRE(rule->tau > 0.0 && rule->tau <= 1.0, "TrainConfig: threshold must be in (0,1]");
  }
}

std::vector<ClassId> predict_labels(const MlpParams& params, const MlpSpec& spec,
                                    const Matrix& features) {
  const Matrix logits = mlp_forward(params, spec, features).logits;
  std::vector<ClassId> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    out[static_cast<std::size_t>(r)] = static_cast<ClassId>(argmax_row(logits, r));
  return out;
}

double evaluate_accuracy(const MlpParams& params, const MlpSpec& spec, const Matrix& features,
                         std::span<const ClassId> labels) {
  DAL_REQUIRE(!labels.empty(), "evaluate_accuracy: empty data");
  DAL_REQUIRE(static_cast<std::size_t>(features.rows()) == labels.size(),
              "evaluate_accuracy: label count does not match rows");
  const auto predicted = predict_labels(params, spec, features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

TrainingSet subset(const TrainingSet& data, std::span<const Index> rows) {
  TrainingSet out;
  out.features = gather_rows(data.features, rows);
  out.labels.reserve(rows.size());
  for (Index r : rows) out.labels.push_back(data.labels[r]);
  return out;
}

}  // namespace

TrainResult train(MlpParams params, const MlpSpec& spec, const TrainingSet& data,
                  const TrainConfig& config, const TrainingSet* validation) {
  config.validate();
  check_consistent(params, spec);
  DAL_REQUIRE(data.size() > 0, "train: empty data");
  DAL_REQUIRE(static_cast<std::size_t>(data.features.rows()) == data.size(),
              "train: label count does not match rows");

  const bool best_val_mode = std::holds_alternative<BestValidationSnapshot>(config.stop_rule);
  const auto* threshold = std::get_if<TrainAccuracyThreshold>(&config.stop_rule);

  Rng rng(config.seed);
  const TrainingSet* fit = &data;
  TrainingSet carved_train;
  TrainingSet carved_val;
  if (best_val_mode && validation == nullptr) {
    DAL_REQUIRE(data.size() >= 2, "train: need at least 2 examples to carve a validation split");
    std::vector<Index> order(data.size());
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(std::span<Index>(order));
    const std::size_t val_count = std::max<std::size_t>(1, data.size() / 5);
    carved_val = subset(data, std::span<const Index>(order).first(val_count));
    carved_train = subset(data, std::span<const Index>(order).subspan(val_count));
    fit = &carved_train;
    validation = &carved_val;
  }

  TrainResult result;
  if (best_val_mode) {
    result.best_snapshot = params;
    result.best_epoch = 0;
  }
  double best_val = -1.0;

  AdamState adam(params, config.learning_rate);
  const std::size_t n = fit->size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  const bool use_dropout = spec.dropout_rate > 0.0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<Index>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const auto rows = std::span<const Index>(order).subspan(start, stop - start);
      const Matrix batch = gather_rows(fit->features, rows);
      std::vector<ClassId> labels(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = fit->labels[rows[i]];

      const DropoutMasks masks =
          use_dropout ? sample_dropout_masks(spec, rows.size(), rng) : DropoutMasks{};
      const Activations fwd = mlp_forward_masked(params, spec, batch, masks);
      const Matrix probs = softmax_rows(fwd.logits);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        loss_sum += cross_entropy(std::span<const double>(probs.row(r).data(), probs.cols()),
                                  labels[i]);
      }
      const MlpGradients grads = backward_from(params, spec, batch, labels, fwd, masks);
      adam_step(params, grads, adam);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(n);
    record.train_accuracy = evaluate_accuracy(params, spec, fit->features, fit->labels);
    if (validation != nullptr && validation->size() > 0) {
      record.validation_accuracy =
          evaluate_accuracy(params, spec, validation->features, validation->labels);
    }
    result.history.push_back(record);

    if (best_val_mode && record.validation_accuracy && *record.validation_accuracy > best_val) {
      best_val = *record.validation_accuracy;
      result.best_snapshot = params;
      result.best_epoch = epoch;
    }
    if (threshold != nullptr && record.train_accuracy >= threshold->tau) {
      result.stopped_by_rule = true;
      break;
    }
  }
  result.params = std::move(params);
  return result;
}

}  // namespace dal
