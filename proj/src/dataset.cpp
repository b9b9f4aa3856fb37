#include "dal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dal/error.hpp"
#include "dal/matrix_ops.hpp"

namespace dal {

void Dataset::validate() const {
  DAL_REQUIRE(static_cast<std::size_t>(features.rows()) == labels.size(),
              "Dataset: label count does not match feature rows");
  DAL_REQUIRE(features.allFinite(), "Dataset: non-finite feature value");
  for (ClassId y : labels) DAL_REQUIRE(y < class_count, "Dataset: label out of range");
  if (cluster_ids) {
    DAL_REQUIRE(cluster_ids->size() == labels.size(), "Dataset: cluster id count mismatch");
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.features = gather_rows(features, rows);
  out.class_count = class_count;
  out.labels.reserve(rows.size());
  for (Index r : rows) out.labels.push_back(labels[r]);
  if (cluster_ids) {
    std::vector<std::size_t> ids;
    ids.reserve(rows.size());
    for (Index r : rows) ids.push_back((*cluster_ids)[r]);
    out.cluster_ids = std::move(ids);
  }
  return out;
}

// ---------------------------------------------------------------------------

Pool Pool::all_unlabeled(std::size_t n) {
  std::vector<Index> u(n);
  std::iota(u.begin(), u.end(), Index{0});
  return Pool({}, std::move(u));
}

Pool::Pool(std::vector<Index> labeled, std::vector<Index> unlabeled)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)) {
  check_invariants();
}

bool Pool::is_labeled(Index i) const {
  return std::binary_search(labeled_.begin(), labeled_.end(), i);
}

void Pool::check_invariants() const {
  DAL_REQUIRE(std::is_sorted(labeled_.begin(), labeled_.end()) &&
                  std::adjacent_find(labeled_.begin(), labeled_.end()) == labeled_.end(),
              "Pool: labeled set must be strictly ascending");
  DAL_REQUIRE(std::is_sorted(unlabeled_.begin(), unlabeled_.end()) &&
                  std::adjacent_find(unlabeled_.begin(), unlabeled_.end()) == unlabeled_.end(),
              "Pool: unlabeled set must be strictly ascending");
  // Disjoint sorted sets whose union is [0, n) must merge to 0, 1, ..., n-1.
  std::vector<Index> all;
  all.reserve(size());
  std::merge(labeled_.begin(), labeled_.end(), unlabeled_.begin(), unlabeled_.end(),
             std::back_inserter(all));
  for (std::size_t i = 0; i < all.size(); ++i)
    DAL_REQUIRE(all[i] == i, "Pool: labeled and unlabeled sets must partition [0, n)");
}

void Pool::label(std::span<const Index> indices) {
  std::vector<Index> moving(indices.begin(), indices.end());
  std::sort(moving.begin(), moving.end());
  DAL_REQUIRE(std::adjacent_find(moving.begin(), moving.end()) == moving.end(),
              "Pool::label: duplicate index");
  std::vector<Index> remaining;
  remaining.reserve(unlabeled_.size() - std::min(unlabeled_.size(), moving.size()));
  std::set_difference(unlabeled_.begin(), unlabeled_.end(), moving.begin(), moving.end(),
                      std::back_inserter(remaining));
  DAL_REQUIRE(remaining.size() + moving.size() == unlabeled_.size(),
              "Pool::label: index is not in the unlabeled set");
  std::vector<Index> merged;
  merged.reserve(labeled_.size() + moving.size());
  std::merge(labeled_.begin(), labeled_.end(), moving.begin(), moving.end(),
             std::back_inserter(merged));
  labeled_ = std::move(merged);
  unlabeled_ = std::move(remaining);
}

// ---------------------------------------------------------------------------

void MixtureSpec::validate() const {
  const std::size_t k = weights.size();
  DAL_REQUIRE(k >= 1, "MixtureSpec: need at least one component");
  DAL_REQUIRE(means.size() == k, "MixtureSpec: one mean per component required");
  DAL_REQUIRE(variances.empty() || variances.size() == k,
              "MixtureSpec: one variance vector per component required");
  DAL_REQUIRE(class_ids.empty() || class_ids.size() == k,
              "MixtureSpec: one class id per component required");
  double total = 0.0;
  for (double w : weights) {
    DAL_REQUIRE(w >= 0.0 && std::isfinite(w), "MixtureSpec: weights must be nonnegative");
    total += w;
  }
  DAL_REQUIRE(std::abs(total - 1.0) <= 1e-9, "MixtureSpec: weights must sum to 1");
  const std::size_t d = dim();
  DAL_REQUIRE(d >= 1, "MixtureSpec: zero-dimensional means");
  for (const auto& m : means) DAL_REQUIRE(m.size() == d, "MixtureSpec: inconsistent mean dimension");
  for (const auto& v : variances) {
    DAL_REQUIRE(v.size() == d, "MixtureSpec: inconsistent variance dimension");
    for (double x : v) DAL_REQUIRE(x >= 0.0 && std::isfinite(x), "MixtureSpec: negative variance");
  }
}

Dataset sample_gaussian_mixture(const MixtureSpec& spec) {
  spec.validate();
  const std::size_t k = spec.weights.size();
  const std::size_t d = spec.dim();
  std::vector<double> cumulative(k);
  std::partial_sum(spec.weights.begin(), spec.weights.end(), cumulative.begin());
  // Last component with positive weight absorbs rounding at the top end.
  std::size_t last_positive = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (spec.weights[c] > 0.0) last_positive = c;

  Rng rng(spec.seed);
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(spec.sample_count), static_cast<Eigen::Index>(d));
  out.labels.resize(spec.sample_count);
  std::vector<std::size_t> ids(spec.sample_count);
  ClassId max_class = 0;
  for (std::size_t i = 0; i < spec.sample_count; ++i) {
    const double u = rng.uniform();
    std::size_t c = last_positive;
    for (std::size_t j = 0; j < k; ++j) {
      if (u < cumulative[j] && spec.weights[j] > 0.0) {
        c = j;
        break;
      }
    }
    ids[i] = c;
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double var = spec.variances.empty() ? 1.0 : spec.variances[c][j];
      out.features(row, static_cast<Eigen::Index>(j)) = spec.means[c][j] + std::sqrt(var) * rng.normal();
    }
    out.labels[i] = spec.class_ids.empty() ? static_cast<ClassId>(c) : spec.class_ids[c];
  }
  for (std::size_t c = 0; c < k; ++c)
    max_class = std::max(max_class, spec.class_ids.empty() ? static_cast<ClassId>(c) : spec.class_ids[c]);
  out.class_count = std::max<std::size_t>(2, static_cast<std::size_t>(max_class) + 1);
  out.cluster_ids = std::move(ids);
  return out;
}

Dataset synth_gaussian_mixture(const MixtureSpec& spec) {
  Dataset out = sample_gaussian_mixture(spec);
  if (out.size() > 0) out.features = normalize_unit_interval(out.features);
  return out;
}

Matrix normalize_unit_interval(const Matrix& features) {
  DAL_REQUIRE(features.rows() >= 1, "normalize_unit_interval: need at least one row");
  Matrix out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double lo = features.col(c).minCoeff();
    const double hi = features.col(c).maxCoeff();
    if (hi > lo) {
      out.col(c) = (features.col(c).array() - lo) / (hi - lo);
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

Pool draw_initial_batch(const Pool& pool, std::size_t size, std::uint64_t seed) {
  const auto& u = pool.unlabeled();
  DAL_REQUIRE(size <= u.size(), "draw_initial_batch: size " + std::to_string(size) +
                                    " exceeds unlabeled count " + std::to_string(u.size()));
  Rng rng(seed);
  std::vector<Index> chosen;
  chosen.reserve(size);
  for (std::size_t pos : rng.sample_without_replacement(u.size(), size)) chosen.push_back(u[pos]);
  Pool out = pool;
  out.label(chosen);
  return out;
}

}  // namespace dal
