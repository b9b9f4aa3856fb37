#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dal/acquisition.hpp"
#include "dal/error.hpp"

namespace dal {

namespace {

Eigen::VectorXd nearest_center_sq(const Matrix& embeddings, std::span<const Index> centers) {
  const Eigen::Index n = embeddings.rows();
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (Index c : centers) {
    DAL_REQUIRE(c < static_cast<Index>(n), "k-center: center index out of range");
    const RowVector center = embeddings.row(static_cast<Eigen::Index>(c));
    best = best.cwiseMin((embeddings.rowwise() - center).rowwise().squaredNorm());
  }
  return best;
}

}  // namespace

std::vector<Index> greedy_k_center(const Matrix& embeddings, std::span<const Index> centers,
                                   std::size_t k) {
  DAL_REQUIRE(!centers.empty(), "greedy_k_center: need at least one initial center");
  const auto n = static_cast<std::size_t>(embeddings.rows());
  std::vector<char> is_center(n, 0);
  std::size_t center_count = 0;
  for (Index c : centers) {
    DAL_REQUIRE(c < n, "greedy_k_center: center index out of range");
    if (!is_center[c]) ++center_count;
    is_center[c] = 1;
  }
  DAL_REQUIRE(k <= n - center_count, "greedy_k_center: k=" + std::to_string(k) + " exceeds " +
                                         std::to_string(n - center_count) + " non-centers");

  Eigen::VectorXd dist = nearest_center_sq(embeddings, centers);
  std::vector<Index> picked;
  picked.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    Index best = n;
    for (Index i = 0; i < n; ++i) {
      if (is_center[i]) continue;
      if (best == n || dist[static_cast<Eigen::Index>(i)] > dist[static_cast<Eigen::Index>(best)]) best = i;
    }
    picked.push_back(best);
    is_center[best] = 1;
    const RowVector center = embeddings.row(static_cast<Eigen::Index>(best));
    dist = dist.cwiseMin((embeddings.rowwise() - center).rowwise().squaredNorm());
  }
  return picked;
}

double covering_radius(const Matrix& embeddings, std::span<const Index> centers) {
  DAL_REQUIRE(!centers.empty(), "covering_radius: no centers");
  return std::sqrt(nearest_center_sq(embeddings, centers).maxCoeff());
}

}  // namespace dal
