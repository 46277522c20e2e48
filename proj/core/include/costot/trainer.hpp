#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "costot/features.hpp"
#include "costot/matrix.hpp"
#include "costot/scene.hpp"
#include "costot/sinkhorn.hpp"

namespace costot {

/// Learnable text-side parameters. Visual features are never trained.
struct AlignmentModel {
  FeatureSet text_embeddings;  // N x d, unit rows after every step
  double tau = 0.07;           // logit temperature
  double beta = 0.5;           // weight of the transport guidance term

  void validate() const;
};

/// Text embeddings = normalize(prototype + init_noise * gaussian), seeded.
AlignmentModel make_initial_model(const SyntheticScene& scene, double init_noise,
                                  std::uint64_t seed, double tau = 0.07, double beta = 0.5);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t outer_steps = 200;
  SinkhornConfig sinkhorn{};
  double beta = 0.5;
  /// The transport plan is re-solved every `refresh_every` outer steps.
  std::size_t refresh_every = 1;

  void validate() const;
};

/// Stage one: cost volume between pixels and text embeddings, C = 1 - sim,
/// Sinkhorn with uniform marginals. The model is read only. Throws
/// NotConverged if the solver stops at max_iters.
TransportPlan inner_loop(const SyntheticScene& scene, const AlignmentModel& model,
                         const SinkhornConfig& config);

/// logits[i][n] = sim(pixel i, class n) / tau.
Matrix forward_logits(const SyntheticScene& scene, const AlignmentModel& model);

/// Row-wise argmax of the logits, lowest index on ties.
std::vector<int> predict(const SyntheticScene& scene, const AlignmentModel& model);

/// mIoU of predict() against the scene labels.
double toy_miou(const SyntheticScene& scene, const AlignmentModel& model);

struct LossResult {
  double value = 0.0;          // cross_entropy + beta * guidance
  double cross_entropy = 0.0;  // mean per-pixel softmax cross-entropy
  double guidance = 0.0;       // <T*, C(D^V, D^L)>
  Matrix gradient;             // dL / d text_embeddings, N x d
};

/// L = CE + beta * <T*, C> with T* held constant. The gradient is taken with
/// respect to the raw text embeddings, through the cosine normalization.
LossResult loss(const SyntheticScene& scene, const AlignmentModel& model,
                const TransportPlan& frozen_plan);

/// text_embeddings <- normalize(text_embeddings - lr * grad). lr == 0 returns
/// the model unchanged.
AlignmentModel outer_step(const SyntheticScene& scene, const AlignmentModel& model,
                          const TransportPlan& frozen_plan, double learning_rate);

struct HistoryRow {
  std::size_t step = 0;
  double cross_entropy = 0.0;
  double ot_distance = 0.0;
  double miou = 0.0;
};

struct TrainResult {
  AlignmentModel model;
  /// One row per outer step (metrics before that step's update) followed by
  /// a row for the final model.
  std::vector<HistoryRow> history;
  double final_miou = 0.0;
};

enum class TrainStage { inner_begin, inner_end, outer_begin, outer_end };

/// Called around both stages of every outer step. `plan` is the current T*,
/// or null before the first inner solve.
using StageObserver = std::function<void(std::size_t step, TrainStage stage,
                                         const AlignmentModel& model, const TransportPlan* plan)>;

/// Two-stage alternation: solve T* with features frozen, then one gradient
/// step with T* frozen. Throws NonFiniteLoss if the loss stops being finite.
TrainResult train(const SyntheticScene& scene, const AlignmentModel& initial,
                  const TrainConfig& config, const StageObserver& observer = {});

}  // namespace costot
