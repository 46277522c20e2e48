#include "costot/scene.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "costot/error.hpp"

namespace costot {

void SceneParams::validate() const {
  if (class_count < 2) throw Error(ErrorCode::invalid_argument, "scene needs at least 2 classes");
  if (height == 0 || width == 0 || height * width < class_count) {
    throw Error(ErrorCode::invalid_argument,
                "scene grid " + std::to_string(height) + "x" + std::to_string(width) +
                    " cannot hold " + std::to_string(class_count) + " classes");
  }
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise sigma must be >= 0");
  if (dim < 2) throw Error(ErrorCode::invalid_argument, "feature dimension must be >= 2");
}

namespace {

std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(dim);
  for (double& x : out) x = normal(rng);
  return out;
}

void scale_to_unit(std::span<double> v) {
  const double n = norm2(v);
  if (!(n > kZeroNormThreshold)) {
    throw Error(ErrorCode::zero_vector, "sampled a zero feature vector");
  }
  for (double& x : v) x /= n;
}

Matrix draw_prototypes(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
  Matrix protos(count, dim);
  std::size_t accepted = 0;
  for (std::size_t draw = 0; draw < kMaxPrototypeDraws && accepted < count; ++draw) {
    auto candidate = gaussian_vector(rng, dim);
    if (!(norm2(candidate) > kZeroNormThreshold)) continue;
    scale_to_unit(candidate);
    bool separated = true;
    for (std::size_t k = 0; k < accepted && separated; ++k) {
      separated = dot(protos.row(k), candidate) <= kMaxPrototypeCosine;
    }
    if (!separated) continue;
    std::copy(candidate.begin(), candidate.end(), protos.row(accepted).begin());
    ++accepted;
  }
  if (accepted < count) {
    throw Error(ErrorCode::separation_failure,
                "could not draw " + std::to_string(count) + " prototypes with pairwise cosine <= " +
                    std::to_string(kMaxPrototypeCosine) + " in dimension " + std::to_string(dim));
  }
  return protos;
}

}  // namespace

SyntheticScene generate_scene(const SceneParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  Matrix protos = draw_prototypes(rng, params.class_count, params.dim);

  const std::size_t pixels = params.height * params.width;
  std::vector<int> labels(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    labels[p] = static_cast<int>(p * params.class_count / pixels);
  }

  Matrix features(pixels, params.dim);
  for (std::size_t p = 0; p < pixels; ++p) {
    const auto noise = gaussian_vector(rng, params.dim);
    auto row = features.row(p);
    const auto proto = protos.row(static_cast<std::size_t>(labels[p]));
    if (params.noise_sigma == 0.0) {
      std::copy(proto.begin(), proto.end(), row.begin());
      continue;
    }
    for (std::size_t k = 0; k < params.dim; ++k) row[k] = proto[k] + params.noise_sigma * noise[k];
    scale_to_unit(row);
  }

  return SyntheticScene{params, std::move(labels), FeatureSet(std::move(features), FeatureRole::visual),
                        FeatureSet(std::move(protos), FeatureRole::textual)};
}

}  // namespace costot
