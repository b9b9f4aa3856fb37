#include "dal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dal/error.hpp"

namespace dal {

RankingSnapshot rank_scores(std::string strategy, std::span<const double> scores,
                            std::span<const Index> example_ids) {
  DAL_REQUIRE(scores.size() == example_ids.size(), "rank_scores: length mismatch");
  const std::vector<Index> ordered = select_top_k(scores, example_ids, scores.size());
  std::map<Index, std::size_t> position;
  for (std::size_t i = 0; i < ordered.size(); ++i) position[ordered[i]] = i + 1;
  RankingSnapshot snap;
  snap.strategy = std::move(strategy);
  snap.example_ids.assign(example_ids.begin(), example_ids.end());
  snap.ranks.reserve(example_ids.size());
  for (Index id : example_ids) snap.ranks.push_back(position.at(id));
  return snap;
}

namespace {

void require_permutation(std::span<const std::size_t> ranks) {
  std::vector<char> seen(ranks.size() + 1, 0);
  for (std::size_t r : ranks) {
    DAL_REQUIRE(r >= 1 && r <= ranks.size() && !seen[r], "spearman: ranks must be a permutation of 1..m");
    seen[r] = 1;
  }
}

}  // namespace

double spearman(std::span<const std::size_t> rank_a, std::span<const std::size_t> rank_b) {
  DAL_REQUIRE(rank_a.size() == rank_b.size(), "spearman: length mismatch");
  DAL_REQUIRE(rank_a.size() >= 2, "spearman: need at least two ranks");
  require_permutation(rank_a);
  require_permutation(rank_b);
  const double m = static_cast<double>(rank_a.size());
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < rank_a.size(); ++i) {
    const double d = static_cast<double>(rank_a[i]) - static_cast<double>(rank_b[i]);
    sum_sq += d * d;
  }
  return 1.0 - 6.0 * sum_sq / (m * (m * m - 1.0));
}

std::vector<RankingPair> export_ranking_pairs(const RankingSnapshot& a, const RankingSnapshot& b) {
  DAL_REQUIRE(a.example_ids == b.example_ids,
              "export_ranking_pairs: snapshots cover different example sets");
  DAL_REQUIRE(a.ranks.size() == a.example_ids.size() && b.ranks.size() == b.example_ids.size(),
              "export_ranking_pairs: malformed snapshot");
  std::vector<RankingPair> rows;
  rows.reserve(a.example_ids.size());
  for (std::size_t i = 0; i < a.example_ids.size(); ++i)
    rows.push_back({a.example_ids[i], a.ranks[i], b.ranks[i]});
  return rows;
}

double h_divergence_from_counts(std::size_t fired_labeled, std::size_t labeled_count,
                                std::size_t fired_unlabeled, std::size_t unlabeled_count) {
  DAL_REQUIRE(labeled_count > 0 && unlabeled_count > 0,
              "estimate_h_divergence: labeled and unlabeled sets must be nonempty");
  DAL_REQUIRE(fired_labeled <= labeled_count && fired_unlabeled <= unlabeled_count,
              "estimate_h_divergence: more firings than examples");
  const double on_l = static_cast<double>(fired_labeled) / static_cast<double>(labeled_count);
  const double on_u = static_cast<double>(fired_unlabeled) / static_cast<double>(unlabeled_count);
  return 2.0 * std::abs(on_l - on_u);
}

DivergenceEstimate estimate_h_divergence(const Discriminator& disc, const Matrix& embeddings,
                                         const Pool& pool) {
  DAL_REQUIRE(!pool.labeled().empty() && !pool.unlabeled().empty(),
              "estimate_h_divergence: labeled and unlabeled sets must be nonempty");
  DivergenceEstimate est;
  est.labeled_count = pool.labeled().size();
  est.unlabeled_count = pool.unlabeled().size();
  const auto fired = [&](const std::vector<Index>& rows) {
    const ScoreVector p = probability_unlabeled(disc, embeddings, rows);
    return static_cast<std::size_t>(
        std::count_if(p.begin(), p.end(), [&](double v) { return v > est.threshold; }));
  };
  est.value = h_divergence_from_counts(fired(pool.labeled()), est.labeled_count,
                                       fired(pool.unlabeled()), est.unlabeled_count);
  return est;
}

std::vector<double> query_class_histogram(std::span<const Index> query, const Dataset& dataset) {
  DAL_REQUIRE(!query.empty(), "query_class_histogram: empty query");
  std::vector<double> hist(dataset.class_count, 0.0);
  for (Index i : query) {
    DAL_REQUIRE(i < dataset.size(), "query_class_histogram: index out of range");
    hist[dataset.labels[i]] += 1.0;
  }
  for (double& h : hist) h /= static_cast<double>(query.size());
  return hist;
}

std::vector<double> cluster_proportions(std::span<const Index> indices, const Dataset& dataset) {
  DAL_REQUIRE(dataset.cluster_ids.has_value(), "cluster_proportions: dataset has no cluster ids");
  DAL_REQUIRE(!indices.empty(), "cluster_proportions: empty index set");
  const auto& ids = *dataset.cluster_ids;
  const std::size_t clusters = *std::max_element(ids.begin(), ids.end()) + 1;
  std::vector<double> out(clusters, 0.0);
  for (Index i : indices) out[ids.at(i)] += 1.0;
  for (double& v : out) v /= static_cast<double>(indices.size());
  return out;
}

std::vector<CurveAggregate> aggregate_curves(std::span<const LearningCurvePoint> points) {
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> groups;
  for (const auto& p : points) groups[{p.strategy, p.labeled_size}].push_back(p.test_accuracy);
  std::vector<CurveAggregate> out;
  out.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    CurveAggregate agg;
    agg.strategy = key.first;
    agg.labeled_size = key.second;
    agg.count = values.size();
    agg.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const bool constant = std::all_of(values.begin(), values.end(),
                                      [&](double v) { return v == values.front(); });
    if (constant) {
      agg.mean = values.front();
    } else {
      double ss = 0.0;
      for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
      agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace dal
