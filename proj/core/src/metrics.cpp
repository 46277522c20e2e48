#include "costot/metrics.hpp"

#include <string>

#include "costot/error.hpp"

namespace costot {

ConfusionMatrix::ConfusionMatrix(std::size_t class_count)
    : classes_(class_count), counts_(class_count * class_count, 0) {
  if (class_count == 0) throw Error(ErrorCode::invalid_argument, "class count must be >= 1");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= classes_ || predicted >= classes_) {
    throw Error(ErrorCode::out_of_range, "class index outside the confusion matrix");
  }
  counts_[truth * classes_ + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) {
    throw Error(ErrorCode::shape_mismatch, "cannot merge confusion matrices of different sizes");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions,
                          std::size_t class_count) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorCode::shape_mismatch, "labels and predictions differ in length");
  }
  ConfusionMatrix cm(class_count);
  const auto in_range = [&](int x) { return x >= 0 && static_cast<std::size_t>(x) < class_count; };
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (!in_range(labels[k]) || !in_range(predictions[k])) {
      throw Error(ErrorCode::out_of_range, "pixel " + std::to_string(k) + " has class (" +
                                               std::to_string(labels[k]) + ", " +
                                               std::to_string(predictions[k]) +
                                               ") outside [0, " + std::to_string(class_count) + ")");
    }
    cm.add(static_cast<std::size_t>(labels[k]), static_cast<std::size_t>(predictions[k]));
  }
  return cm;
}

MiouResult miou(const ConfusionMatrix& cm, ZeroUnionPolicy policy) {
  const std::size_t n = cm.class_count();
  std::vector<std::uint64_t> row(n, 0);
  std::vector<std::uint64_t> col(n, 0);
  for (std::size_t g = 0; g < n; ++g) {
    for (std::size_t p = 0; p < n; ++p) {
      row[g] += cm.at(g, p);
      col[p] += cm.at(g, p);
    }
  }

  MiouResult out;
  out.per_class_iou.resize(n);
  double sum = 0.0;
  std::size_t counted = 0;
  bool any_union = false;
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t uni = row[c] + col[c] - tp;
    if (uni == 0) {
      if (policy == ZeroUnionPolicy::count_as_zero) {
        out.per_class_iou[c] = 0.0;
        ++counted;
      }
      continue;
    }
    any_union = true;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    out.per_class_iou[c] = iou;
    sum += iou;
    ++counted;
  }
  if (!any_union) throw Error(ErrorCode::all_empty, "every class has an empty union");
  out.miou = sum / static_cast<double>(counted);
  return out;
}

}  // namespace costot
