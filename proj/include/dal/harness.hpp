#pragma once

// Simulated pool-based active learning: per trial, train the task model on L,
// record test accuracy, query K examples with a strategy, reveal their labels
// and repeat.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dal/acquisition.hpp"
#include "dal/analysis.hpp"
#include "dal/dataset.hpp"
#include "dal/mlp.hpp"

namespace dal {

enum class DatasetSource { kMixture, kIdx };

struct ExperimentConfig {
  DatasetSource source = DatasetSource::kMixture;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
  MixtureSpec mixture;  // mixture.seed is derived from `seed`
  double test_fraction = 0.2;

  std::vector<Strategy> strategies;
  std::size_t initial_size = 0;
  std::size_t budget = 0;  // K per iteration
  std::size_t iterations = 0;
  std::size_t mini_queries = 10;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;

  std::vector<std::size_t> task_hidden{128, 64};
  double task_dropout = 0.25;
  TrainConfig task_train{.max_epochs = 50, .batch_size = 32};

  AcquisitionSettings acquisition;
  bool keep_scores = false;  // retain per-iteration score vectors in TrialRecord

  std::filesystem::path output_dir;
  std::size_t parallel_trials = 1;

  /// Checks the invariants that do not depend on the loaded data.
  void validate() const;
};

/// Source dataset split into the active-learning pool and a held-out test set.
struct PreparedData {
  Dataset pool;
  Dataset test;
  std::vector<Index> pool_source_rows;  // pool row -> source dataset row
  std::vector<Index> test_source_rows;
};

/// Loads or generates the source data and carves the seeded test split.
/// Throws ConfigError if the pool is too small for the protocol.
PreparedData prepare_data(const ExperimentConfig& config);

/// Ground-truth label source. Counts calls and refuses to label an index twice.
class Oracle {
 public:
  explicit Oracle(const Dataset& dataset);

  ClassId label(Index i);
  std::size_t calls() const { return calls_; }

 private:
  const Dataset* dataset_;
  std::vector<char> revealed_;
  std::size_t calls_ = 0;
};

inline ClassId oracle_label(Oracle& oracle, Index i) { return oracle.label(i); }

struct TrialRecord {
  Strategy strategy = Strategy::kRandom;
  std::size_t trial = 0;  // 1-based
  std::uint64_t trial_seed = 0;
  std::vector<Index> initial_batch;           // pool rows, ascending
  std::vector<std::vector<Index>> batches;    // pool rows, per iteration, in query order
  std::vector<LearningCurvePoint> curve;
  std::vector<ScoreVector> scores;            // per iteration, only with keep_scores
  std::vector<std::vector<Index>> score_rows; // unlabeled rows the scores refer to
  std::size_t oracle_calls = 0;

  /// Every labeled pool row at the end of the trial.
  std::vector<Index> final_labeled() const;
};

/// Seed of trial t (1-based) is seed + t.
std::uint64_t trial_seed(const ExperimentConfig& config, std::size_t trial);

TrialRecord run_trial(const ExperimentConfig& config, const PreparedData& data, Strategy strategy,
                      std::size_t trial);

struct ExperimentResult {
  std::vector<TrialRecord> trials;  // grouped by strategy (config order), then trial
  std::vector<CurveAggregate> aggregates;
};

/// R trials per strategy; writes CSVs when config.output_dir is set.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data);

void write_experiment_outputs(const ExperimentConfig& config, const PreparedData& data,
                              const ExperimentResult& result);

// ---------------------------------------------------------------------------
// Ranking comparison on the first-iteration snapshot

struct RankComparison {
  std::size_t trial = 0;
  std::vector<RankingSnapshot> snapshots;  // one per ranking strategy, config order
  std::vector<std::vector<double>> spearman_matrix;
  std::optional<DivergenceEstimate> divergence;  // from the DAL discriminator, if present
};

/// For each trial: draw the initial batch, train the task model, and rank U
/// with every score-based strategy in the config.
std::vector<RankComparison> run_rank_comparison(const ExperimentConfig& config,
                                                const PreparedData& data);

void write_rank_outputs(const ExperimentConfig& config, const std::vector<RankComparison>& result);

// ---------------------------------------------------------------------------
// Density experiment: labeled-set cluster proportions after the full budget

struct ClusterProportionRow {
  std::string strategy;
  std::size_t trial = 0;
  std::size_t cluster = 0;
  double proportion = 0.0;
};

std::vector<ClusterProportionRow> run_density_experiment(const ExperimentConfig& config,
                                                         const PreparedData& data);

void write_density_outputs(const ExperimentConfig& config,
                           const std::vector<ClusterProportionRow>& rows);

/// Runs `jobs` callables on up to `workers` threads.
void run_parallel(std::size_t job_count, std::size_t workers,
                  const std::function<void(std::size_t)>& job);

}  // namespace dal
