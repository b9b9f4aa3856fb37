#pragma once

// Query strategies for pool-based batch active learning. Every strategy maps
// (dataset, pool, task model, plan) to K distinct indices drawn from U.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dal/dataset.hpp"
#include "dal/mlp.hpp"
#include "dal/task_model.hpp"

namespace dal {

enum class Strategy {
  kRandom,
  kUncertaintyEntropy,
  kUncertaintyVarRatio,
  kDbalEntropy,
  kDbalVarRatio,
  kDfal,
  kEgl,
  kCoreset,
  kDal,
};

std::string_view to_string(Strategy s);

/// Accepts the names used in config files ("random", "uncertainty-entropy",
/// "dbal-varratio", "dal", ...). Throws ConfigError on anything else.
Strategy parse_strategy(std::string_view name);

/// True for strategies that rank the whole unlabeled set.
bool produces_ranking(Strategy s);

const std::vector<Strategy>& all_strategies();

struct QueryPlan {
  std::size_t budget = 1;        // K
  std::size_t mini_queries = 10;  // n, DAL only
  Strategy strategy = Strategy::kRandom;
  std::uint64_t seed = 0;

  /// Throws ContractViolation unless 1 <= K <= unlabeled_count and 1 <= n.
  void validate(std::size_t unlabeled_count) const;
};

/// One score per unlabeled example, aligned with Pool::unlabeled().
using ScoreVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Score-based selection

/// The K indices with the largest scores, ties to the lower dataset index,
/// ordered by descending score.
std::vector<Index> select_top_k(std::span<const double> scores, std::span<const Index> unlabeled,
                                std::size_t k);

std::vector<Index> select_random(const Pool& pool, std::size_t k, std::uint64_t seed);

ScoreVector score_max_entropy(const Posterior& posterior);
ScoreVector score_variation_ratio(const Posterior& posterior);

/// Posterior-weighted L2 norm of the per-label loss gradient over all
/// trainable parameters.
ScoreVector score_egl(const TaskModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// DeepFool

struct DeepFoolResult {
  double norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct DeepFoolSettings {
  std::size_t max_iter = 50;
  double overshoot = 0.02;
};

/// d(logits)/d(input) at x: output_dim x input_dim.
Matrix logit_input_jacobian(const MlpParams& params, const MlpSpec& spec,
                            std::span<const double> x);

DeepFoolResult deepfool_min_perturbation(const MlpParams& params, const MlpSpec& spec,
                                         std::span<const double> x,
                                         const DeepFoolSettings& settings = {});

DeepFoolResult deepfool_min_perturbation(const TaskModel& model, std::span<const double> x,
                                         const DeepFoolSettings& settings = {});

/// Score is minus the DeepFool perturbation norm, so closer examples rank first.
ScoreVector score_dfal(const TaskModel& model, const Matrix& x, const DeepFoolSettings& settings);

std::vector<Index> select_dfal(const TaskModel& model, const Pool& pool, const Dataset& dataset,
                               std::size_t k, const DeepFoolSettings& settings = {});

// ---------------------------------------------------------------------------
// Core-set

/// Greedy farthest-first traversal: k times, adds the non-center row with
/// the largest Euclidean distance to its nearest center (ties to the lower
/// row). Returns the added rows in selection order.
std::vector<Index> greedy_k_center(const Matrix& embeddings, std::span<const Index> centers,
                                   std::size_t k);

/// max over rows of the distance to the nearest center.
double covering_radius(const Matrix& embeddings, std::span<const Index> centers);

// ---------------------------------------------------------------------------
// Discriminative active learning

struct DiscriminatorConfig {
  std::vector<std::size_t> hidden_widths{256, 256, 256};
  double stop_threshold = 0.98;
  std::size_t max_epochs = 300;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

inline constexpr ClassId kLabeledClass = 0;
inline constexpr ClassId kUnlabeledClass = 1;

/// Binary labeled-vs-unlabeled classifier over representation space.
struct Discriminator {
  MlpSpec spec;
  MlpParams params;
  std::size_t epochs_run = 0;
  double train_accuracy = 0.0;
};

/// Fits a fresh discriminator on rows L (class l) and U (class u) of
/// `embeddings`, stopping at the first epoch whose full-train accuracy
/// reaches the threshold or at the epoch cap.
Discriminator train_discriminator(const Matrix& embeddings, const Pool& pool,
                                  const DiscriminatorConfig& config);

/// P(y = u | row) for each listed row.
ScoreVector probability_unlabeled(const Discriminator& disc, const Matrix& embeddings,
                                  std::span<const Index> rows);

/// Sizes of the successive mini-queries: ceil(K/n) each, the last one
/// taking whatever remains.
std::vector<std::size_t> mini_query_sizes(std::size_t budget, std::size_t mini_queries);

std::vector<Index> select_dal(const TaskModel& model, const Pool& pool, const Dataset& dataset,
                              const QueryPlan& plan, const DiscriminatorConfig& config);

/// Same, given precomputed representations of every pool row.
std::vector<Index> select_dal_embedded(const Matrix& embeddings, const Pool& pool,
                                       const QueryPlan& plan, const DiscriminatorConfig& config);

// ---------------------------------------------------------------------------
// Dispatch

struct AcquisitionSettings {
  std::size_t mc_passes = 20;
  DeepFoolSettings deepfool;
  DiscriminatorConfig discriminator;
};

struct QueryResult {
  std::vector<Index> indices;
  std::optional<ScoreVector> scores;  // aligned with pool.unlabeled(), when the strategy ranks
};

/// Ranking scores of a score-based strategy over pool.unlabeled(). For DAL
/// this is P(u) from one discriminator on the current pool.
ScoreVector compute_scores(Strategy strategy, const TaskModel& model, const Pool& pool,
                           const Dataset& dataset, const AcquisitionSettings& settings,
                           std::uint64_t seed);

QueryResult select(const TaskModel& model, const Pool& pool, const Dataset& dataset,
                   const QueryPlan& plan, const AcquisitionSettings& settings);

}  // namespace dal
