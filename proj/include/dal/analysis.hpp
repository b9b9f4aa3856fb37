#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dal/acquisition.hpp"
#include "dal/dataset.hpp"

namespace dal {

/// Ranks of one strategy over a fixed pool snapshot. ranks[i] is the rank of
/// example_ids[i]; 1 is the most preferred.
struct RankingSnapshot {
  std::string strategy;
  std::vector<Index> example_ids;
  std::vector<std::size_t> ranks;
};

/// Ranks scores in descending order, ties to the lower example id, so rank
/// order agrees with select_top_k.
RankingSnapshot rank_scores(std::string strategy, std::span<const double> scores,
                            std::span<const Index> example_ids);

/// 1 - 6 sum(d^2) / (m (m^2 - 1)) for two permutations of 1..m.
double spearman(std::span<const std::size_t> rank_a, std::span<const std::size_t> rank_b);

struct RankingPair {
  Index example_id;
  std::size_t rank_a;
  std::size_t rank_b;
};

std::vector<RankingPair> export_ranking_pairs(const RankingSnapshot& a, const RankingSnapshot& b);

struct DivergenceEstimate {
  double value = 0.0;  // in [0, 2]
  double threshold = 0.5;
  std::size_t labeled_count = 0;
  std::size_t unlabeled_count = 0;
};

/// 2 |mean_L h - mean_U h| for h(x) = [P(u | x) > 0.5]. One fixed
/// hypothesis stands in for the supremum, so this bounds the divergence
/// from below.
DivergenceEstimate estimate_h_divergence(const Discriminator& disc, const Matrix& embeddings,
                                         const Pool& pool);

/// Same formula given how many members of L and of U the hypothesis fires on.
double h_divergence_from_counts(std::size_t fired_labeled, std::size_t labeled_count,
                                std::size_t fired_unlabeled, std::size_t unlabeled_count);

/// Fraction of the query falling in each class.
std::vector<double> query_class_histogram(std::span<const Index> query, const Dataset& dataset);

/// Fraction of `indices` in each synthetic cluster.
std::vector<double> cluster_proportions(std::span<const Index> indices, const Dataset& dataset);

struct LearningCurvePoint {
  std::string strategy;
  std::size_t trial = 0;
  std::size_t labeled_size = 0;
  double test_accuracy = 0.0;
};

struct CurveAggregate {
  std::string strategy;
  std::size_t labeled_size = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single trial
  std::size_t count = 0;
};

/// Groups by (strategy, labeled_size), sorted by strategy name then size.
std::vector<CurveAggregate> aggregate_curves(std::span<const LearningCurvePoint> points);

}  // namespace dal
