#include <string>

#include "dal/acquisition.hpp"
#include "dal/error.hpp"
#include "dal/matrix_ops.hpp"

namespace dal {

std::vector<Index> select_dfal(const TaskModel& model, const Pool& pool, const Dataset& dataset,
                               std::size_t k, const DeepFoolSettings& settings) {
  const auto& u = pool.unlabeled();
  DAL_REQUIRE(k <= u.size(), "select_dfal: K exceeds unlabeled count");
  const ScoreVector scores = score_dfal(model, gather_rows(dataset.features, u), settings);
  return select_top_k(scores, u, k);
}

ScoreVector compute_scores(Strategy strategy, const TaskModel& model, const Pool& pool,
                           const Dataset& dataset, const AcquisitionSettings& settings,
                           std::uint64_t seed) {
  DAL_REQUIRE(dataset.size() == pool.size(), "compute_scores: pool does not match dataset");
  const auto& u = pool.unlabeled();
  switch (strategy) {
    case Strategy::kUncertaintyEntropy:
      return score_max_entropy(predict_posterior(model, gather_rows(dataset.features, u)));
    case Strategy::kUncertaintyVarRatio:
      return score_variation_ratio(predict_posterior(model, gather_rows(dataset.features, u)));
    case Strategy::kDbalEntropy:
      return score_max_entropy(mc_dropout_posterior(model, gather_rows(dataset.features, u),
                                                    settings.mc_passes, derive_seed(seed, "mc-dropout")));
    case Strategy::kDbalVarRatio:
      return score_variation_ratio(mc_dropout_posterior(
          model, gather_rows(dataset.features, u), settings.mc_passes, derive_seed(seed, "mc-dropout")));
    case Strategy::kDfal:
      return score_dfal(model, gather_rows(dataset.features, u), settings.deepfool);
    case Strategy::kEgl:
      return score_egl(model, gather_rows(dataset.features, u));
    case Strategy::kDal: {
      const Matrix embeddings = embed(model, dataset.features);
      DiscriminatorConfig cfg = settings.discriminator;
      cfg.seed = derive_seed(seed, "dal-mini-query", 0);
      const Discriminator disc = train_discriminator(embeddings, pool, cfg);
      return probability_unlabeled(disc, embeddings, u);
    }
    case Strategy::kRandom:
    case Strategy::kCoreset:
      break;
  }
  throw ContractViolation("compute_scores: strategy '" + std::string(to_string(strategy)) +
                          "' does not rank the unlabeled set");
}

QueryResult select(const TaskModel& model, const Pool& pool, const Dataset& dataset,
                   const QueryPlan& plan, const AcquisitionSettings& settings) {
  DAL_REQUIRE(dataset.size() == pool.size(), "select: pool does not match dataset");
  plan.validate(pool.unlabeled().size());
  QueryResult result;
  switch (plan.strategy) {
    case Strategy::kRandom:
      result.indices = select_random(pool, plan.budget, plan.seed);
      return result;
    case Strategy::kCoreset: {
      const Matrix embeddings = embed(model, dataset.features);
      result.indices = greedy_k_center(embeddings, pool.labeled(), plan.budget);
      return result;
    }
    case Strategy::kDal: {
      const Matrix embeddings = embed(model, dataset.features);
      result.indices = select_dal_embedded(embeddings, pool, plan, settings.discriminator);
      return result;
    }
    default:
      break;
  }
  ScoreVector scores = compute_scores(plan.strategy, model, pool, dataset, settings, plan.seed);
  result.indices = select_top_k(scores, pool.unlabeled(), plan.budget);
  result.scores = std::move(scores);
  return result;
}

}  // namespace dal
