#include "costot/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "costot/error.hpp"

namespace costot {

namespace {

void require_finite(const Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw Error(ErrorCode::invalid_argument, std::string(what) + " entry (" +
                                                     std::to_string(r) + ", " +
                                                     std::to_string(c) + ") is not finite");
      }
    }
  }
}

std::vector<double> checked_norms(const FeatureSet& fs) {
  std::vector<double> norms(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    norms[i] = norm2(fs.vector(i));
    if (!(norms[i] > kZeroNormThreshold)) {
      throw Error(ErrorCode::zero_vector,
                  "feature vector " + std::to_string(i) + " has zero norm");
    }
  }
  return norms;
}

}  // namespace

FeatureSet::FeatureSet(Matrix vectors, FeatureRole role) : vectors_(std::move(vectors)), role_(role) {
  if (vectors_.rows() == 0 || vectors_.cols() == 0) {
    throw Error(ErrorCode::invalid_argument, "feature set needs at least one vector of dimension >= 1");
  }
  require_finite(vectors_, "feature");
}

FeatureSet FeatureSet::from_rows(const std::vector<std::vector<double>>& rows, FeatureRole role) {
  return FeatureSet(Matrix::from_rows(rows), role);
}

ProbabilityVector::ProbabilityVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) {
    throw Error(ErrorCode::invalid_argument, "probability vector must be nonempty");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::invalid_argument, "probability weights must be finite and >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument,
                "probability weights sum to " + std::to_string(total) + ", expected 1");
  }
}

ProbabilityVector ProbabilityVector::uniform(std::size_t size) {
  if (size == 0) throw Error(ErrorCode::invalid_argument, "probability vector must be nonempty");
  return ProbabilityVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

CostVolume::CostVolume(Matrix similarity) : sim_(std::move(similarity)) {
  if (sim_.empty()) throw Error(ErrorCode::invalid_argument, "cost volume must be nonempty");
  for (double s : sim_.values()) {
    if (!(s >= -1.0 - 1e-9 && s <= 1.0 + 1e-9)) {
      throw Error(ErrorCode::invalid_argument, "cosine similarity outside [-1, 1]");
    }
  }
}

CostMatrix::CostMatrix(Matrix cost) : cost_(std::move(cost)) {
  if (cost_.empty()) throw Error(ErrorCode::invalid_argument, "cost matrix must be nonempty");
  require_finite(cost_, "cost");
  for (double c : cost_.values()) {
    if (c < 0.0) throw Error(ErrorCode::invalid_argument, "cost entries must be >= 0");
  }
}

FeatureSet normalize(const FeatureSet& features) {
  const auto norms = checked_norms(features);
  Matrix out = features.matrix();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (double& x : out.row(i)) x /= norms[i];
  }
  return FeatureSet(std::move(out), features.role());
}

CostVolume build_cost_volume(const FeatureSet& visual, const FeatureSet& textual) {
  if (visual.dim() != textual.dim()) {
    throw Error(ErrorCode::dimension_mismatch,
                "visual dimension " + std::to_string(visual.dim()) + " != textual dimension " +
                    std::to_string(textual.dim()));
  }
  checked_norms(visual);
  checked_norms(textual);
  std::vector<double> vsq(visual.size());
  std::vector<double> tsq(textual.size());
  for (std::size_t i = 0; i < visual.size(); ++i) vsq[i] = dot(visual.vector(i), visual.vector(i));
  for (std::size_t n = 0; n < textual.size(); ++n) tsq[n] = dot(textual.vector(n), textual.vector(n));
  Matrix sim(visual.size(), textual.size());
  for (std::size_t i = 0; i < visual.size(); ++i) {
    for (std::size_t n = 0; n < textual.size(); ++n) {
      // One square root of the product: identical vectors give exactly 1.
      const double s = dot(visual.vector(i), textual.vector(n)) / std::sqrt(vsq[i] * tsq[n]);
      sim(i, n) = std::clamp(s, -1.0, 1.0);
    }
  }
  return CostVolume(std::move(sim));
}

CostMatrix cost_matrix_from_volume(const CostVolume& volume) {
  Matrix cost(volume.rows(), volume.cols());
  const Matrix& sim = volume.similarity();
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) cost(r, c) = 1.0 - sim(r, c);
  }
  return CostMatrix(std::move(cost));
}

}  // namespace costot
