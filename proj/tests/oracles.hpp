#pragma once

// Reference computations used by the unit tests and the acceptance binary.
// They deliberately take the slow, direct route.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dal/acquisition.hpp"
#include "dal/mlp.hpp"
#include "dal/random.hpp"
#include "dal/task_model.hpp"

namespace oracle {

using dal::ClassId;
using dal::Index;
using dal::Matrix;

inline Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, dal::Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

/// Largest per-parameter relative error between the analytic gradient and a
/// central difference of the mean loss. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline double max_gradient_error(const dal::MlpParams& params, const dal::MlpSpec& spec,
                                 const Matrix& batch, const std::vector<ClassId>& labels,
                                 double step = 1e-5, double floor = 1e-7) {
  const dal::MlpGradients analytic = dal::backward(params, spec, batch, labels);
  dal::MlpParams probe = params;
  double worst = 0.0;
  const auto check = [&](double& slot, double a) {
    const double saved = slot;
    slot = saved + step;
    const double up = dal::mean_loss(probe, spec, batch, labels);
    slot = saved - step;
    const double down = dal::mean_loss(probe, spec, batch, labels);
    slot = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        check(layer.weights(r, c), analytic.layers[l].weights(r, c));
    for (Eigen::Index c = 0; c < layer.bias.size(); ++c) check(layer.bias(c), analytic.layers[l].bias(c));
  }
  return worst;
}

/// sum_c p(c | x) ||grad of loss(x, c)||, one backward pass per class.
inline double brute_force_egl(const dal::TaskModel& model, const Matrix& row) {
  const Matrix probs = dal::softmax_rows(dal::mlp_forward(model.params, model.spec, row).logits);
  double total = 0.0;
  for (std::size_t c = 0; c < model.spec.output_dim; ++c) {
    const std::vector<ClassId> label{static_cast<ClassId>(c)};
    const dal::MlpGradients g = dal::backward(model.params, model.spec, row, label);
    total += probs(0, static_cast<Eigen::Index>(c)) * std::sqrt(g.squared_norm());
  }
  return total;
}

/// max over points of the distance to the nearest chosen center.
inline double radius_of(const Matrix& points, const std::vector<Index>& centers) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Index c : centers) nearest = std::min(nearest, (points.row(i) - points.row(static_cast<Eigen::Index>(c))).norm());
    worst = std::max(worst, nearest);
  }
  return worst;
}

/// Optimal k-center radius by enumerating every k-subset.
inline double optimal_k_center_radius(const Matrix& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<char> pick(n, 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(k), pick.end(), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<Index> centers;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) centers.push_back(i);
    best = std::min(best, radius_of(points, centers));
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

/// Two-class linear network whose decision function is w.x + b.
inline std::pair<dal::MlpSpec, dal::MlpParams> linear_binary_model(const Eigen::VectorXd& w, double b) {
  dal::MlpSpec spec;
  spec.input_dim = static_cast<std::size_t>(w.size());
  spec.output_dim = 2;
  dal::MlpParams params = dal::MlpParams::zeros(spec);
  params.layers[0].weights.col(1) = w;
  params.layers[0].bias(1) = b;
  return {spec, params};
}

inline double linear_margin(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& x) {
  return std::abs(w.dot(x) + b) / w.norm();
}

}  // namespace oracle
