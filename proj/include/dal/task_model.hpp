#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dal/dataset.hpp"
#include "dal/mlp.hpp"

namespace dal {

/// Classifier trained on the current labeled set. Its last hidden layer is
/// the representation used by the discriminator and by core-set selection.
struct TaskModel {
  MlpSpec spec;
  MlpParams params;  // best-validation snapshot
  std::vector<EpochRecord> train_history;
  std::size_t best_epoch = 0;
};

/// Per-example class probabilities, one row per example.
using Posterior = Matrix;

/// Default desk-scale architecture: input -> 128 -> 64 -> classes, dropout 0.25.
MlpSpec default_task_spec(std::size_t input_dim, std::size_t class_count);

/// Carves a seeded 20% of `labeled` as validation, trains with Adam and
/// returns the epoch snapshot with the best validation accuracy (earliest on
/// ties). `config.stop_rule` is ignored; `seed` drives initialization,
/// the validation carve and shuffling.
TaskModel train_task_model(const Dataset& dataset, std::span<const Index> labeled,
                           const MlpSpec& spec, const TrainConfig& config, std::uint64_t seed);

/// Last hidden layer activations, dropout disabled.
Matrix embed(const TaskModel& model, const Matrix& x);

Posterior predict_posterior(const TaskModel& model, const Matrix& x);

/// Mean softmax output over `passes` dropout-masked forwards.
Posterior mc_dropout_posterior(const TaskModel& model, const Matrix& x, std::size_t passes,
                               std::uint64_t seed);

}  // namespace dal
