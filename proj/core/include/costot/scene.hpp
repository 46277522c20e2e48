#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "costot/features.hpp"

namespace costot {

struct SceneParams {
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t class_count = 4;
  double noise_sigma = 0.3;
  std::size_t dim = 16;
  std::uint64_t seed = 7;

  /// Throws InvalidArgument unless H*W >= N >= 2, sigma >= 0 and d >= 2.
  void validate() const;
};

/// A labeled pixel grid standing in for an image plus its ground truth.
/// Pixels are indexed row-major; labels[i] is the class of pixel i.
struct SyntheticScene {
  SceneParams params;
  std::vector<int> labels;
  FeatureSet pixel_features;  // H*W unit vectors
  FeatureSet prototypes;      // N unit class prototypes

  std::size_t height() const noexcept { return params.height; }
  std::size_t width() const noexcept { return params.width; }
  std::size_t class_count() const noexcept { return params.class_count; }
  std::size_t pixel_count() const noexcept { return labels.size(); }
};

/// Draws N unit prototypes with pairwise cosine <= 0.5 (rejection sampling,
/// SeparationFailure after 10,000 draws), labels the grid with N contiguous
/// row-major blocks and sets each pixel to normalize(prototype + sigma * noise).
/// Deterministic per seed.
SyntheticScene generate_scene(const SceneParams& params);

inline constexpr double kMaxPrototypeCosine = 0.5;
inline constexpr std::size_t kMaxPrototypeDraws = 10000;

}  // namespace costot
