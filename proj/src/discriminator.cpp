#include <algorithm>
#include <string>

#include "dal/acquisition.hpp"
#include "dal/error.hpp"
#include "dal/matrix_ops.hpp"

namespace dal {

Discriminator train_discriminator(const Matrix& embeddings, const Pool& pool,
                                  const DiscriminatorConfig& config) {
  const auto& labeled = pool.labeled();
  const auto& unlabeled = pool.unlabeled();
  DAL_REQUIRE(!labeled.empty(), "train_discriminator: labeled set is empty");
  DAL_REQUIRE(!unlabeled.empty(), "train_discriminator: unlabeled set is empty");
  DAL_REQUIRE(static_cast<std::size_t>(embeddings.rows()) == pool.size(),
              "train_discriminator: embeddings must have one row per pool index");

  Discriminator disc;
  disc.spec.input_dim = static_cast<std::size_t>(embeddings.cols());
  disc.spec.hidden_widths = config.hidden_widths;
  disc.spec.output_dim = 2;
  disc.spec.dropout_rate = 0.0;

  TrainingSet data;
  data.features.resize(static_cast<Eigen::Index>(pool.size()), embeddings.cols());
  data.labels.reserve(pool.size());
  Eigen::Index row = 0;
  for (Index i : labeled) {
    data.features.row(row++) = embeddings.row(static_cast<Eigen::Index>(i));
    data.labels.push_back(kLabeledClass);
  }
  for (Index i : unlabeled) {
    data.features.row(row++) = embeddings.row(static_cast<Eigen::Index>(i));
    data.labels.push_back(kUnlabeledClass);
  }

  Rng init_rng(derive_seed(config.seed, "disc-init"));
  MlpParams init = init_params(disc.spec, init_rng);

  TrainConfig train_cfg;
  train_cfg.max_epochs = config.max_epochs;
  train_cfg.batch_size = config.batch_size;
  train_cfg.learning_rate = config.learning_rate;
  train_cfg.stop_rule = TrainAccuracyThreshold{config.stop_threshold};
  train_cfg.seed = derive_seed(config.seed, "disc-shuffle");
  TrainResult result = train(std::move(init), disc.spec, data, train_cfg);

  disc.params = std::move(result.params);
  disc.epochs_run = result.history.size();
  disc.train_accuracy = result.history.empty()
                            ? evaluate_accuracy(disc.params, disc.spec, data.features, data.labels)
                            : result.history.back().train_accuracy;
  return disc;
}

ScoreVector probability_unlabeled(const Discriminator& disc, const Matrix& embeddings,
                                  std::span<const Index> rows) {
  const Matrix probs = softmax_rows(mlp_forward(disc.params, disc.spec, gather_rows(embeddings, rows)).logits);
  ScoreVector out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = probs(static_cast<Eigen::Index>(i), kUnlabeledClass);
  return out;
}

std::vector<std::size_t> mini_query_sizes(std::size_t budget, std::size_t mini_queries) {
  DAL_REQUIRE(mini_queries >= 1, "mini_query_sizes: need at least one mini-query");
  DAL_REQUIRE(mini_queries <= std::max<std::size_t>(budget, 1),
              "mini_query_sizes: more mini-queries than budget");
  const std::size_t step = (budget + mini_queries - 1) / mini_queries;
  std::vector<std::size_t> sizes;
  std::size_t remaining = budget;
  for (std::size_t i = 0; i < mini_queries && remaining > 0; ++i) {
    const std::size_t take = i + 1 == mini_queries ? remaining : std::min(step, remaining);
    sizes.push_back(take);
    remaining -= take;
  }
  return sizes;
}

std::vector<Index> select_dal_embedded(const Matrix& embeddings, const Pool& pool,
                                       const QueryPlan& plan, const DiscriminatorConfig& config) {
  plan.validate(pool.unlabeled().size());
  DAL_REQUIRE(plan.mini_queries <= plan.budget, "select_dal: mini_queries exceeds budget");

  // Pseudo-labeling: chosen points join L for the following mini-queries
  // without an oracle call.
  Pool working = pool;
  std::vector<Index> chosen;
  chosen.reserve(plan.budget);
  const auto sizes = mini_query_sizes(plan.budget, plan.mini_queries);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    DiscriminatorConfig cfg = config;
    cfg.seed = derive_seed(plan.seed, "dal-mini-query", i);
    const Discriminator disc = train_discriminator(embeddings, working, cfg);
    const auto& u = working.unlabeled();
    const ScoreVector p_unlabeled = probability_unlabeled(disc, embeddings, u);
    const auto picked = select_top_k(p_unlabeled, u, sizes[i]);
    working.label(picked);
    chosen.insert(chosen.end(), picked.begin(), picked.end());
  }
  return chosen;
}

std::vector<Index> select_dal(const TaskModel& model, const Pool& pool, const Dataset& dataset,
                              const QueryPlan& plan, const DiscriminatorConfig& config) {
  DAL_REQUIRE(dataset.size() == pool.size(), "select_dal: pool does not match dataset");
  // The representation stays fixed for the whole query.
  const Matrix embeddings = embed(model, dataset.features);
  return select_dal_embedded(embeddings, pool, plan, config);
}

}  // namespace dal
