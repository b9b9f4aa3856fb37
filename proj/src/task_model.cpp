#include "dal/task_model.hpp"

#include <numeric>
#include <string>

#include "dal/error.hpp"
#include "dal/matrix_ops.hpp"

namespace dal {

MlpSpec default_task_spec(std::size_t input_dim, std::size_t class_count) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_widths = {128, 64};
  spec.output_dim = class_count;
  spec.dropout_rate = 0.25;
  return spec;
}

TaskModel train_task_model(const Dataset& dataset, std::span<const Index> labeled,
                           const MlpSpec& spec, const TrainConfig& config, std::uint64_t seed) {
  DAL_REQUIRE(labeled.size() >= 5, "train_task_model: need at least 5 labeled examples, got " +
                                       std::to_string(labeled.size()));
  DAL_REQUIRE(!spec.hidden_widths.empty(), "train_task_model: need at least one hidden layer");
  DAL_REQUIRE(spec.input_dim == dataset.dim(), "train_task_model: input_dim does not match data");

  // Validation carve depends only on the seed and the labeled set.
  std::vector<Index> order(labeled.begin(), labeled.end());
  Rng carve_rng(derive_seed(seed, "validation-split"));
  carve_rng.shuffle(std::span<Index>(order));
  const std::size_t val_count = std::max<std::size_t>(1, order.size() / 5);

  TrainingSet validation;
  TrainingSet fit;
  const auto val_rows = std::span<const Index>(order).first(val_count);
  const auto fit_rows = std::span<const Index>(order).subspan(val_count);
  validation.features = gather_rows(dataset.features, val_rows);
  for (Index r : val_rows) validation.labels.push_back(dataset.labels[r]);
  fit.features = gather_rows(dataset.features, fit_rows);
  for (Index r : fit_rows) fit.labels.push_back(dataset.labels[r]);

  Rng init_rng(derive_seed(seed, "task-init"));
  MlpParams init = init_params(spec, init_rng);

  TrainConfig cfg = config;
  cfg.stop_rule = BestValidationSnapshot{};
  cfg.seed = derive_seed(seed, "task-shuffle");
  TrainResult result = train(std::move(init), spec, fit, cfg, &validation);

  TaskModel model;
  model.spec = spec;
  model.params = std::move(*result.best_snapshot);
  model.train_history = std::move(result.history);
  model.best_epoch = result.best_epoch;
  return model;
}

Matrix embed(const TaskModel& model, const Matrix& x) {
  DAL_REQUIRE(!model.spec.hidden_widths.empty(), "embed: model has no hidden layer");
  Activations act = mlp_forward(model.params, model.spec, x);
  return std::move(act.hidden.back());
}

Posterior predict_posterior(const TaskModel& model, const Matrix& x) {
  return softmax_rows(mlp_forward(model.params, model.spec, x).logits);
}

Posterior mc_dropout_posterior(const TaskModel& model, const Matrix& x, std::size_t passes,
                               std::uint64_t seed) {
  DAL_REQUIRE(passes >= 1, "mc_dropout_posterior: need at least one pass");
  if (model.spec.dropout_rate <= 0.0) return predict_posterior(model, x);
  Rng rng(seed);
  Posterior total = Posterior::Zero(x.rows(), static_cast<Eigen::Index>(model.spec.output_dim));
  for (std::size_t t = 0; t < passes; ++t)
    total += softmax_rows(dropout_forward(model.params, model.spec, x, rng).logits);
  total /= static_cast<double>(passes);
  return total;
}

}  // namespace dal
