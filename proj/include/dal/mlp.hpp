#pragma once

// Dense feed-forward networks with rectifier hidden layers and a softmax
// cross-entropy head. The same machinery backs the task model, the
// labeled-vs-unlabeled discriminator, and the MC-dropout model.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dal/random.hpp"

namespace dal {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using ClassId = std::uint32_t;
using Index = std::size_t;

/// Floor applied to probabilities inside the log loss.
inline constexpr double kProbabilityFloor = 1e-12;

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_dim = 0;
  double dropout_rate = 0.0;  // applied to hidden layers only

  void validate() const;
  std::size_t layer_count() const { return hidden_widths.size() + 1; }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;
};

/// Weights are stored fan_in x fan_out so a batch propagates as X * W + b.
struct DenseLayer {
  Matrix weights;
  RowVector bias;

  bool operator==(const DenseLayer& other) const {
    return weights == other.weights && bias == other.bias;
  }
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  static MlpParams zeros(const MlpSpec& spec);
  std::size_t parameter_count() const;
  double squared_norm() const;
  bool all_finite() const;
  bool operator==(const MlpParams& other) const { return layers == other.layers; }
};

/// Gradients share the parameter layout.
using MlpGradients = MlpParams;

/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
MlpParams init_params(const MlpSpec& spec, Rng& rng);

/// Throws ContractViolation if shapes disagree with the spec.
void check_consistent(const MlpParams& params, const MlpSpec& spec);

struct Activations {
  std::vector<Matrix> hidden;  // post-rectifier (and post-mask, if dropout ran)
  Matrix logits;
};

/// Per-hidden-layer inverted-dropout multipliers: 0 for dropped units and
/// 1/(1-rate) for survivors. Empty means no dropout.
using DropoutMasks = std::vector<Matrix>;

Activations mlp_forward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch);

/// Forward pass with explicit masks; masks.size() must equal the hidden count.
Activations mlp_forward_masked(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                               const DropoutMasks& masks);

DropoutMasks sample_dropout_masks(const MlpSpec& spec, std::size_t rows, Rng& rng);

/// Forward pass with freshly sampled inverted-dropout masks on hidden layers.
Activations dropout_forward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                            Rng& rng);

std::vector<double> softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);

/// -ln(max(probs[label], kProbabilityFloor)).
double cross_entropy(std::span<const double> probs, ClassId label);

/// Mean-over-batch gradient of softmax cross-entropy, dropout disabled.
MlpGradients backward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                      std::span<const ClassId> labels);

/// Same, reusing a forward pass (and the masks that produced it).
MlpGradients backward_from(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                           std::span<const ClassId> labels, const Activations& forward,
                           const DropoutMasks& masks);

/// Mean cross-entropy of a batch, dropout disabled.
double mean_loss(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                 std::span<const ClassId> labels);

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::uint64_t timestep = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const MlpParams& like, double learning_rate = 1e-3);
};

/// One bias-corrected Adam update.
void adam_step(MlpParams& params, const MlpGradients& grads, AdamState& state);

// ---------------------------------------------------------------------------
// Training

struct FixedEpochs {};
struct TrainAccuracyThreshold {
  double tau = 0.98;
};
struct BestValidationSnapshot {};
using StopRule = std::variant<FixedEpochs, TrainAccuracyThreshold, BestValidationSnapshot>;

struct TrainConfig {
  std::size_t max_epochs = 50;
  std::size_t batch_size = 32;
  StopRule stop_rule = FixedEpochs{};
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;

  void validate() const;
};

struct TrainingSet {
  Matrix features;
  std::vector<ClassId> labels;

  std::size_t size() const { return labels.size(); }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_accuracy;
};

struct TrainResult {
  MlpParams params;  // parameters after the last epoch run
  std::vector<EpochRecord> history;
  std::optional<MlpParams> best_snapshot;  // best-validation mode only
  std::size_t best_epoch = 0;              // 0 = initialization
  bool stopped_by_rule = false;
};

/// Shuffled mini-batch Adam. In best-validation mode the validation split is
/// `validation` if given, otherwise a seeded 20% carve of `data`.
TrainResult train(MlpParams params, const MlpSpec& spec, const TrainingSet& data,
                  const TrainConfig& config, const TrainingSet* validation = nullptr);

/// Argmax prediction per row; ties go to the lowest class id.
std::vector<ClassId> predict_labels(const MlpParams& params, const MlpSpec& spec,
                                    const Matrix& features);

double evaluate_accuracy(const MlpParams& params, const MlpSpec& spec, const Matrix& features,
                         std::span<const ClassId> labels);

/// Argmax of a row with lowest-index tie-breaking.
std::size_t argmax_row(const Matrix& m, Eigen::Index row);

}  // namespace dal
