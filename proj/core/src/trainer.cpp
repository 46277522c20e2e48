#include "costot/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "costot/error.hpp"
#include "costot/metrics.hpp"

namespace costot {

void AlignmentModel::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::invalid_argument, "temperature tau must be positive");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::invalid_argument, "guidance weight beta must be >= 0");
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::invalid_argument, "learning rate must be positive");
  }
  if (outer_steps < 1) throw Error(ErrorCode::invalid_argument, "outer_steps must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::invalid_argument, "guidance weight beta must be >= 0");
  }
  if (refresh_every < 1) throw Error(ErrorCode::invalid_argument, "refresh_every must be >= 1");
  sinkhorn.validate();
}

AlignmentModel make_initial_model(const SyntheticScene& scene, double init_noise,
                                  std::uint64_t seed, double tau, double beta) {
  if (!(init_noise >= 0.0)) throw Error(ErrorCode::invalid_argument, "init noise must be >= 0");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix text = scene.prototypes.matrix();
  for (double& x : text.values()) x += init_noise * normal(rng);
  AlignmentModel model{normalize(FeatureSet(std::move(text), FeatureRole::textual)), tau, beta};
  model.validate();
  return model;
}

namespace {

void check_dims(const SyntheticScene& scene, const AlignmentModel& model) {
  if (model.text_embeddings.size() != scene.class_count()) {
    throw Error(ErrorCode::shape_mismatch,
                "model has " + std::to_string(model.text_embeddings.size()) +
                    " text embeddings for " + std::to_string(scene.class_count()) + " classes");
  }
  if (model.text_embeddings.dim() != scene.pixel_features.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "text and pixel feature dimensions differ");
  }
}

}  // namespace

TransportPlan inner_loop(const SyntheticScene& scene, const AlignmentModel& model,
                         const SinkhornConfig& config) {
  check_dims(scene, model);
  const auto volume = build_cost_volume(scene.pixel_features, model.text_embeddings);
  const auto cost = cost_matrix_from_volume(volume);
  auto result = sinkhorn_solve(cost, ProbabilityVector::uniform(cost.rows()),
                               ProbabilityVector::uniform(cost.cols()), config);
  if (!result.converged) {
    throw Error(ErrorCode::not_converged,
                "inner Sinkhorn solve stopped at " + std::to_string(result.iterations) +
                    " iterations with delta-v " + std::to_string(result.final_delta_v));
  }
  return std::move(result.plan);
}

Matrix forward_logits(const SyntheticScene& scene, const AlignmentModel& model) {
  check_dims(scene, model);
  model.validate();
  Matrix logits = build_cost_volume(scene.pixel_features, model.text_embeddings).similarity();
  for (double& x : logits.values()) x /= model.tau;
  return logits;
}

std::vector<int> predict(const SyntheticScene& scene, const AlignmentModel& model) {
  const Matrix logits = forward_logits(scene, model);
  std::vector<int> preds(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    preds[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return preds;
}

double toy_miou(const SyntheticScene& scene, const AlignmentModel& model) {
  const auto preds = predict(scene, model);
  return miou(confusion(scene.labels, preds, scene.class_count())).miou;
}

LossResult loss(const SyntheticScene& scene, const AlignmentModel& model,
                const TransportPlan& frozen_plan) {
  check_dims(scene, model);
  model.validate();
  const std::size_t pixels = scene.pixel_count();
  const std::size_t classes = scene.class_count();
  const std::size_t dim = model.text_embeddings.dim();
  if (frozen_plan.rows() != pixels || frozen_plan.cols() != classes) {
    throw Error(ErrorCode::shape_mismatch, "transport plan shape does not match (pixels, classes)");
  }

  const Matrix sim = build_cost_volume(scene.pixel_features, model.text_embeddings).similarity();
  const Matrix& plan = frozen_plan.plan();

  // dL/dsim accumulated per (pixel, class).
  Matrix dsim(pixels, classes);
  LossResult out;
  std::vector<double> probs(classes);
  const double inv_count = 1.0 / static_cast<double>(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < classes; ++n) peak = std::max(peak, sim(i, n) / model.tau);
    double z = 0.0;
    for (std::size_t n = 0; n < classes; ++n) {
      probs[n] = std::exp(sim(i, n) / model.tau - peak);
      z += probs[n];
    }
    const auto label = static_cast<std::size_t>(scene.labels[i]);
    out.cross_entropy += (peak + std::log(z) - sim(i, label) / model.tau) * inv_count;
    for (std::size_t n = 0; n < classes; ++n) {
      const double p = probs[n] / z;
      const double target = n == label ? 1.0 : 0.0;
      dsim(i, n) = (p - target) * inv_count / model.tau - model.beta * plan(i, n);
      out.guidance += plan(i, n) * (1.0 - sim(i, n));
    }
  }
  out.value = out.cross_entropy + model.beta * out.guidance;

  // d sim(x, w) / d w = (x_hat - sim * w_hat) / |w|.
  out.gradient = Matrix(classes, dim);
  for (std::size_t n = 0; n < classes; ++n) {
    const auto w = model.text_embeddings.vector(n);
    const double wnorm = norm2(w);
    auto g = out.gradient.row(n);
    for (std::size_t i = 0; i < pixels; ++i) {
      const auto x = scene.pixel_features.vector(i);
      const double xnorm = norm2(x);
      const double coeff = dsim(i, n) / wnorm;
      for (std::size_t k = 0; k < dim; ++k) {
        g[k] += coeff * (x[k] / xnorm - sim(i, n) * w[k] / wnorm);
      }
    }
  }
  return out;
}

namespace {

AlignmentModel apply_gradient(const AlignmentModel& model, const Matrix& gradient,
                              double learning_rate) {
  if (learning_rate == 0.0) return model;
  Matrix updated = model.text_embeddings.matrix();
  const auto g = gradient.values();
  auto w = updated.values();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] -= learning_rate * g[k];
  return AlignmentModel{normalize(FeatureSet(std::move(updated), FeatureRole::textual)), model.tau,
                        model.beta};
}

}  // namespace

AlignmentModel outer_step(const SyntheticScene& scene, const AlignmentModel& model,
                          const TransportPlan& frozen_plan, double learning_rate) {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::invalid_argument, "learning rate must be >= 0");
  }
  if (learning_rate == 0.0) return model;
  return apply_gradient(model, loss(scene, model, frozen_plan).gradient, learning_rate);
}

TrainResult train(const SyntheticScene& scene, const AlignmentModel& initial,
                  const TrainConfig& config, const StageObserver& observer) {
  config.validate();
  check_dims(scene, initial);
  AlignmentModel model = initial;
  model.beta = config.beta;
  model.validate();

  auto notify = [&](std::size_t step, TrainStage stage, const std::optional<TransportPlan>& plan) {
    if (observer) observer(step, stage, model, plan ? &*plan : nullptr);
  };

  TrainResult result{model, {}, 0.0};
  result.history.reserve(config.outer_steps + 1);
  std::optional<TransportPlan> plan;
  for (std::size_t step = 0; step < config.outer_steps; ++step) {
    if (!plan || step % config.refresh_every == 0) {
      notify(step, TrainStage::inner_begin, plan);
      plan = inner_loop(scene, model, config.sinkhorn);
      notify(step, TrainStage::inner_end, plan);
    }

    notify(step, TrainStage::outer_begin, plan);
    const LossResult l = loss(scene, model, *plan);
    if (!std::isfinite(l.value)) {
      throw Error(ErrorCode::non_finite_loss,
                  "loss became non-finite at outer step " + std::to_string(step));
    }
    result.history.push_back({step, l.cross_entropy, l.guidance, toy_miou(scene, model)});
    model = apply_gradient(model, l.gradient, config.learning_rate);
    notify(step, TrainStage::outer_end, plan);
  }

  const TransportPlan final_plan = inner_loop(scene, model, config.sinkhorn);
  const LossResult final_loss = loss(scene, model, final_plan);
  if (!std::isfinite(final_loss.value)) {
    throw Error(ErrorCode::non_finite_loss, "loss of the trained model is non-finite");
  }
  result.final_miou = toy_miou(scene, model);
  result.history.push_back(
      {config.outer_steps, final_loss.cross_entropy, final_loss.guidance, result.final_miou});
  result.model = std::move(model);
  return result;
}

}  // namespace costot
