#include <cmath>
#include <limits>

#include "dal/acquisition.hpp"
#include "dal/error.hpp"

namespace dal {

namespace {

// Each linearized step is stretched slightly so the iterate lands strictly
// past the boundary instead of on it.
constexpr double kRelativeNudge = 1e-6;
constexpr double kAbsoluteNudge = 1e-9;

Matrix as_row(std::span<const double> x) {
  Matrix row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
  return row;
}

Matrix jacobian_at(const MlpParams& params, const MlpSpec& spec, const Activations& fwd) {
  const auto classes = static_cast<Eigen::Index>(spec.output_dim);
  Matrix grad = Matrix::Identity(classes, classes);
  for (std::size_t l = spec.layer_count(); l-- > 0;) {
    Matrix next = grad * params.layers[l].weights.transpose();
    if (l > 0) {
      const auto active = (fwd.hidden[l - 1].row(0).array() > 0.0).cast<double>();
      next.array().rowwise() *= active;
    }
    grad = std::move(next);
  }
  return grad;
}

}  // namespace

Matrix logit_input_jacobian(const MlpParams& params, const MlpSpec& spec,
                            std::span<const double> x) {
  const Matrix row = as_row(x);
  const Activations fwd = mlp_forward(params, spec, row);
  return jacobian_at(params, spec, fwd);
}

DeepFoolResult deepfool_min_perturbation(const MlpParams& params, const MlpSpec& spec,
                                         std::span<const double> x,
                                         const DeepFoolSettings& settings) {
  DAL_REQUIRE(x.size() == spec.input_dim, "deepfool: input has wrong dimension");
  DAL_REQUIRE(settings.overshoot >= 0.0, "deepfool: overshoot must be nonnegative");
  const Matrix origin = as_row(x);
  const auto classes = static_cast<Eigen::Index>(spec.output_dim);
  const double scale = 1.0 + settings.overshoot;

  const std::size_t original = argmax_row(mlp_forward(params, spec, origin).logits, 0);
  const auto k0 = static_cast<Eigen::Index>(original);
  RowVector total = RowVector::Zero(origin.cols());

  DeepFoolResult result;
  for (;;) {
    const Matrix current = origin + scale * total;
    const Activations fwd = mlp_forward(params, spec, current);
    if (argmax_row(fwd.logits, 0) != original) {
      result.converged = true;
      break;
    }
    if (result.iterations == settings.max_iter) break;

    const Matrix jac = jacobian_at(params, spec, fwd);
    double best_distance = std::numeric_limits<double>::infinity();
    RowVector best_direction;
    double best_gap = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) {
      if (k == k0) continue;
      RowVector w = jac.row(k) - jac.row(k0);
      const double w_norm = w.norm();
      if (w_norm == 0.0) continue;
      const double gap = std::abs(fwd.logits(0, k) - fwd.logits(0, k0));
      const double distance = gap / w_norm;
      if (distance < best_distance) {
        best_distance = distance;
        best_direction = std::move(w);
        best_gap = gap;
      }
    }
    if (!std::isfinite(best_distance)) break;  // flat in every direction
    total += ((best_gap * (1.0 + kRelativeNudge) + kAbsoluteNudge) / best_direction.squaredNorm()) *
             best_direction;
    ++result.iterations;
  }
  result.norm = scale * total.norm();
  return result;
}

DeepFoolResult deepfool_min_perturbation(const TaskModel& model, std::span<const double> x,
                                         const DeepFoolSettings& settings) {
  return deepfool_min_perturbation(model.params, model.spec, x, settings);
}

ScoreVector score_dfal(const TaskModel& model, const Matrix& x, const DeepFoolSettings& settings) {
  ScoreVector out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const RowVector row = x.row(r);
    const auto res = deepfool_min_perturbation(
        model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), settings);
    out[static_cast<std::size_t>(r)] = -res.norm;
  }
  return out;
}

}  // namespace dal
