#include "dal/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dal/error.hpp"

namespace dal {

void MlpSpec::validate() const {
  DAL_REQUIRE(input_dim >= 1, "MlpSpec: input_dim must be at least 1");
  DAL_REQUIRE(output_dim >= 2, "MlpSpec: output_dim must be at least 2");
  for (std::size_t w : hidden_widths) DAL_REQUIRE(w >= 1, "MlpSpec: hidden width must be at least 1");
  DAL_REQUIRE(dropout_rate >= 0.0 && dropout_rate < 1.0, "MlpSpec: dropout_rate must be in [0,1)");
}

std::size_t MlpSpec::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden_widths[layer - 1];
}

std::size_t MlpSpec::fan_out(std::size_t layer) const {
  return layer < hidden_widths.size() ? hidden_widths[layer] : output_dim;
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  p.layers.reserve(spec.layer_count());
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.fan_in(l));
    const auto out = static_cast<Eigen::Index>(spec.fan_out(l));
    p.layers.push_back({Matrix::Zero(in, out), RowVector::Zero(out)});
  }
  return p;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (const auto& layer : layers) s += layer.weights.squaredNorm() + layer.bias.squaredNorm();
  return s;
}

bool MlpParams::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

MlpParams init_params(const MlpSpec& spec, Rng& rng) {
  MlpParams p = MlpParams::zeros(spec);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(spec.fan_in(l) + spec.fan_out(l)));
    Matrix& w = p.layers[l].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return p;
}

void check_consistent(const MlpParams& params, const MlpSpec& spec) {
  spec.validate();
  DAL_REQUIRE(params.layers.size() == spec.layer_count(),
              "MlpParams: layer count does not match spec");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    DAL_REQUIRE(static_cast<std::size_t>(layer.weights.rows()) == spec.fan_in(l) &&
                    static_cast<std::size_t>(layer.weights.cols()) == spec.fan_out(l) &&
                    static_cast<std::size_t>(layer.bias.size()) == spec.fan_out(l),
                "MlpParams: layer " + std::to_string(l) + " shape does not match spec");
  }
}

namespace {

void check_batch(const MlpSpec& spec, const Matrix& batch) {
  DAL_REQUIRE(static_cast<std::size_t>(batch.cols()) == spec.input_dim,
              "batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                  std::to_string(spec.input_dim));
}

}  // namespace

Activations mlp_forward_masked(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                               const DropoutMasks& masks) {
  check_consistent(params, spec);
  check_batch(spec, batch);
  const std::size_t hidden_count = spec.hidden_widths.size();
  DAL_REQUIRE(masks.empty() || masks.size() == hidden_count, "dropout mask count mismatch");

  Activations out;
  out.hidden.reserve(hidden_count);
  const Matrix* input = &batch;
  for (std::size_t l = 0; l < hidden_count; ++l) {
    const auto& layer = params.layers[l];
    Matrix z = (*input) * layer.weights;
    z.rowwise() += layer.bias;
    z = z.cwiseMax(0.0);
    if (!masks.empty()) {
      DAL_REQUIRE(masks[l].rows() == z.rows() && masks[l].cols() == z.cols(),
                  "dropout mask shape mismatch");
      z.array() *= masks[l].array();
    }
    out.hidden.push_back(std::move(z));
    input = &out.hidden.back();
  }
  const auto& head = params.layers.back();
  out.logits = (*input) * head.weights;
  out.logits.rowwise() += head.bias;
  return out;
}

Activations mlp_forward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch) {
  return mlp_forward_masked(params, spec, batch, {});
}

DropoutMasks sample_dropout_masks(const MlpSpec& spec, std::size_t rows, Rng& rng) {
  DropoutMasks masks;
  if (spec.dropout_rate <= 0.0) return masks;
  const double keep_scale = 1.0 / (1.0 - spec.dropout_rate);
  masks.reserve(spec.hidden_widths.size());
  for (std::size_t width : spec.hidden_widths) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = rng.bernoulli(spec.dropout_rate) ? 0.0 : keep_scale;
    masks.push_back(std::move(m));
  }
  return masks;
}

Activations dropout_forward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                            Rng& rng) {
  spec.validate();
  return mlp_forward_masked(params, spec, batch,
                            sample_dropout_masks(spec, static_cast<std::size_t>(batch.rows()), rng));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - peak).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

double cross_entropy(std::span<const double> probs, ClassId label) {
  DAL_REQUIRE(label < probs.size(), "cross_entropy: label " + std::to_string(label) +
                                        " out of range for " + std::to_string(probs.size()) +
                                        " classes");
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

MlpGradients backward_from(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                           std::span<const ClassId> labels, const Activations& forward,
                           const DropoutMasks& masks) {
  DAL_REQUIRE(static_cast<std::size_t>(batch.rows()) == labels.size(),
              "backward: label count does not match batch rows");
  DAL_REQUIRE(batch.rows() > 0, "backward: empty batch");
  for (ClassId y : labels) DAL_REQUIRE(y < spec.output_dim, "backward: label out of range");

  const double inv_batch = 1.0 / static_cast<double>(batch.rows());

  // d(mean loss)/d(logits) = (softmax - onehot) / batch
  Matrix delta = softmax_rows(forward.logits);
  for (std::size_t r = 0; r < labels.size(); ++r) delta(static_cast<Eigen::Index>(r), labels[r]) -= 1.0;
  delta *= inv_batch;

  MlpGradients grads;
  grads.layers.resize(spec.layer_count());
  for (std::size_t l = spec.layer_count(); l-- > 0;) {
    const Matrix& input = l == 0 ? batch : forward.hidden[l - 1];
    grads.layers[l].weights.noalias() = input.transpose() * delta;
    grads.layers[l].bias = delta.colwise().sum();
    if (l == 0) break;
    Matrix upstream = delta * params.layers[l].weights.transpose();
    // The stored activation is zero wherever the rectifier or a mask zeroed
    // the unit, so its support gives the local derivative; surviving units
    // also carry the inverted-dropout scale.
    const Matrix& act = forward.hidden[l - 1];
    if (masks.empty()) {
      upstream.array() *= (act.array() > 0.0).cast<double>();
    } else {
      upstream.array() *= (act.array() > 0.0).cast<double>() * masks[l - 1].array();
    }
    delta = std::move(upstream);
  }
  return grads;
}

MlpGradients backward(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                      std::span<const ClassId> labels) {
  Activations fwd = mlp_forward(params, spec, batch);
  return backward_from(params, spec, batch, labels, fwd, {});
}

double mean_loss(const MlpParams& params, const MlpSpec& spec, const Matrix& batch,
                 std::span<const ClassId> labels) {
  DAL_REQUIRE(static_cast<std::size_t>(batch.rows()) == labels.size() && !labels.empty(),
              "mean_loss: label count does not match batch rows");
  const Matrix probs = softmax_rows(mlp_forward(params, spec, batch).logits);
  double total = 0.0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    total += cross_entropy(std::span<const double>(probs.row(row).data(), probs.cols()), labels[r]);
  }
  return total / static_cast<double>(labels.size());
}

AdamState::AdamState(const MlpParams& like, double learning_rate)
    : first_moment(like), second_moment(like), lr(learning_rate) {
  for (auto* moments : {&first_moment, &second_moment}) {
    for (auto& layer : moments->layers) {
      layer.weights.setZero();
      layer.bias.setZero();
    }
  }
}

namespace {

template <class Block>
void adam_update(Block& param, const Block& grad, Block& m, Block& v, double step_scale,
                 double second_correction, const AdamState& s) {
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseAbs2();
  param.array() -= step_scale * m.array() / ((v.array() / second_correction).sqrt() + s.epsilon);
}

}  // namespace

void adam_step(MlpParams& params, const MlpGradients& grads, AdamState& state) {
  DAL_REQUIRE(params.layers.size() == grads.layers.size() &&
                  params.layers.size() == state.first_moment.layers.size(),
              "adam_step: layer count mismatch");
  state.timestep += 1;
  const double t = static_cast<double>(state.timestep);
  const double first_correction = 1.0 - std::pow(state.beta1, t);
  const double second_correction = 1.0 - std::pow(state.beta2, t);
  const double step_scale = state.lr / first_correction;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    auto& m = state.first_moment.layers[l];
    auto& v = state.second_moment.layers[l];
    DAL_REQUIRE(p.weights.rows() == g.weights.rows() && p.weights.cols() == g.weights.cols() &&
                    p.bias.size() == g.bias.size(),
                "adam_step: gradient shape mismatch");
    adam_update(p.weights, g.weights, m.weights, v.weights, step_scale, second_correction, state);
    adam_update(p.bias, g.bias, m.bias, v.bias, step_scale, second_correction, state);
  }
}

std::size_t argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return static_cast<std::size_t>(best);
}

}  // namespace dal
