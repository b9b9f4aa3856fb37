#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "dal/acquisition.hpp"
#include "dal/error.hpp"

namespace dal {

namespace {

struct StrategyName {
  Strategy strategy;
  std::string_view name;
};

constexpr std::array<StrategyName, 9> kStrategyNames{{
    {Strategy::kRandom, "random"},
    {Strategy::kUncertaintyEntropy, "uncertainty-entropy"},
    {Strategy::kUncertaintyVarRatio, "uncertainty-varratio"},
    {Strategy::kDbalEntropy, "dbal-entropy"},
    {Strategy::kDbalVarRatio, "dbal-varratio"},
    {Strategy::kDfal, "dfal"},
    {Strategy::kEgl, "egl"},
    {Strategy::kCoreset, "coreset"},
    {Strategy::kDal, "dal"},
}};

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& entry : kStrategyNames)
    if (entry.strategy == s) return entry.name;
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& entry : kStrategyNames)
    if (entry.name == name) return entry.strategy;
  throw ConfigError("strategy", 0, "unknown strategy '" + std::string(name) + "'");
}

bool produces_ranking(Strategy s) { return s != Strategy::kRandom && s != Strategy::kCoreset; }

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = [] {
    std::vector<Strategy> v;
    for (const auto& entry : kStrategyNames) v.push_back(entry.strategy);
    return v;
  }();
  return all;
}

void QueryPlan::validate(std::size_t unlabeled_count) const {
  DAL_REQUIRE(budget >= 1 && budget <= unlabeled_count,
              "QueryPlan: budget " + std::to_string(budget) + " outside [1, " +
                  std::to_string(unlabeled_count) + "]");
  DAL_REQUIRE(mini_queries >= 1, "QueryPlan: mini_queries must be at least 1");
}

std::vector<Index> select_top_k(std::span<const double> scores, std::span<const Index> unlabeled,
                                std::size_t k) {
  DAL_REQUIRE(scores.size() == unlabeled.size(), "select_top_k: score/index length mismatch");
  DAL_REQUIRE(k <= scores.size(), "select_top_k: K=" + std::to_string(k) + " exceeds " +
                                      std::to_string(scores.size()) + " candidates");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return unlabeled[a] < unlabeled[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  std::vector<Index> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(unlabeled[order[i]]);
  return out;
}

std::vector<Index> select_random(const Pool& pool, std::size_t k, std::uint64_t seed) {
  const auto& u = pool.unlabeled();
  DAL_REQUIRE(k <= u.size(), "select_random: K exceeds unlabeled count");
  Rng rng(seed);
  std::vector<Index> out;
  out.reserve(k);
  for (std::size_t pos : rng.sample_without_replacement(u.size(), k)) out.push_back(u[pos]);
  return out;
}

ScoreVector score_max_entropy(const Posterior& posterior) {
  ScoreVector out(static_cast<std::size_t>(posterior.rows()));
  for (Eigen::Index r = 0; r < posterior.rows(); ++r) {
    double h = 0.0;
    for (Eigen::Index c = 0; c < posterior.cols(); ++c) {
      const double p = posterior(r, c);
      if (p > 0.0) h -= p * std::log(p);
    }
    out[static_cast<std::size_t>(r)] = h;
  }
  return out;
}

ScoreVector score_variation_ratio(const Posterior& posterior) {
  ScoreVector out(static_cast<std::size_t>(posterior.rows()));
  for (Eigen::Index r = 0; r < posterior.rows(); ++r)
    out[static_cast<std::size_t>(r)] = 1.0 - posterior.row(r).maxCoeff();
  return out;
}

ScoreVector score_egl(const TaskModel& model, const Matrix& x) {
  const MlpSpec& spec = model.spec;
  const MlpParams& params = model.params;
  const Activations fwd = mlp_forward(params, spec, x);
  const Matrix probs = softmax_rows(fwd.logits);
  const Eigen::Index n = x.rows();
  const Eigen::Index classes = static_cast<Eigen::Index>(spec.output_dim);
  const std::size_t layers = spec.layer_count();

  // For one example the weight gradient of layer l is the outer product of
  // its input a and its output delta, so ||grad W||^2 + ||grad b||^2 equals
  // ||delta||^2 * (||a||^2 + 1).
  std::vector<Eigen::VectorXd> input_sq(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& input = l == 0 ? x : fwd.hidden[l - 1];
    input_sq[l] = input.rowwise().squaredNorm().array() + 1.0;
  }

  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < classes; ++c) {
    Matrix delta = probs;
    delta.col(c).array() -= 1.0;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
    for (std::size_t l = layers; l-- > 0;) {
      sq.array() += delta.rowwise().squaredNorm().array() * input_sq[l].array();
      if (l == 0) break;
      Matrix upstream = delta * params.layers[l].weights.transpose();
      upstream.array() *= (fwd.hidden[l - 1].array() > 0.0).cast<double>();
      delta = std::move(upstream);
    }
    score.array() += probs.col(c).array() * sq.array().sqrt();
  }
  return {score.data(), score.data() + score.size()};
}

}  // namespace dal
