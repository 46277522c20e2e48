#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "costot/matrix.hpp"

namespace costot {

enum class FeatureRole { visual, textual };

/// Ordered set of M feature vectors of a shared dimension d, stored as rows.
/// Invariants: M >= 1, d >= 1, every entry finite.
class FeatureSet {
 public:
  FeatureSet(Matrix vectors, FeatureRole role);
  static FeatureSet from_rows(const std::vector<std::vector<double>>& rows, FeatureRole role);

  std::size_t size() const noexcept { return vectors_.rows(); }
  std::size_t dim() const noexcept { return vectors_.cols(); }
  FeatureRole role() const noexcept { return role_; }

  std::span<const double> vector(std::size_t i) const noexcept { return vectors_.row(i); }
  const Matrix& matrix() const noexcept { return vectors_; }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  Matrix vectors_;
  FeatureRole role_;
};

/// Vectors with Euclidean norm at or below this are treated as zero.
inline constexpr double kZeroNormThreshold = 1e-12;

/// Nonnegative weights summing to 1 (within 1e-9).
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> weights);
  static ProbabilityVector uniform(std::size_t size);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;

 private:
  std::vector<double> weights_;
};

/// M x N cosine similarities between visual rows and textual columns.
class CostVolume {
 public:
  explicit CostVolume(Matrix similarity);
  const Matrix& similarity() const noexcept { return sim_; }
  std::size_t rows() const noexcept { return sim_.rows(); }
  std::size_t cols() const noexcept { return sim_.cols(); }

 private:
  Matrix sim_;
};

/// Nonnegative, finite transport costs.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix cost);
  const Matrix& cost() const noexcept { return cost_; }
  std::size_t rows() const noexcept { return cost_.rows(); }
  std::size_t cols() const noexcept { return cost_.cols(); }
  double operator()(std::size_t r, std::size_t c) const noexcept { return cost_(r, c); }

 private:
  Matrix cost_;
};

/// Scales every vector to unit length. Throws ZeroVector if any norm <= 1e-12.
FeatureSet normalize(const FeatureSet& features);

/// sim[i][n] = <visual_i, textual_n> / (|visual_i| |textual_n|), clamped to [-1, 1]
/// to absorb rounding.
CostVolume build_cost_volume(const FeatureSet& visual, const FeatureSet& textual);

/// cost = 1 - sim.
CostMatrix cost_matrix_from_volume(const CostVolume& volume);

}  // namespace costot
