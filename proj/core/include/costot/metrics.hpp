#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace costot {

/// counts[g][p] = number of pixels with ground truth g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t class_count);

  std::size_t class_count() const noexcept { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const noexcept {
    return counts_[truth * classes_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  std::uint64_t total() const noexcept;

  /// Entrywise merge of a matrix accumulated over a disjoint pixel set.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// Throws OutOfRange for labels outside [0, class_count), ShapeMismatch for
/// length differences.
ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions,
                          std::size_t class_count);

enum class ZeroUnionPolicy { exclude, count_as_zero };

struct MiouResult {
  double miou = 0.0;
  /// Empty for classes with zero union, or 0 under count_as_zero.
  std::vector<std::optional<double>> per_class_iou;
};

/// IoU_n = tp / (row_n + col_n - tp); classes with an empty union are
/// excluded from the mean (or scored 0 under count_as_zero). Throws AllEmpty
/// when no class has a nonzero union.
MiouResult miou(const ConfusionMatrix& cm, ZeroUnionPolicy policy = ZeroUnionPolicy::exclude);

}  // namespace costot
