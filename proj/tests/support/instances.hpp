#pragma once

// Random instances and independent reference computations shared by the unit
// tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "costot/features.hpp"
#include "costot/matrix.hpp"
#include "costot/scene.hpp"
#include "costot/sinkhorn.hpp"
#include "costot/trainer.hpp"

namespace costot::testing {

inline CostMatrix random_cost(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                              double hi = 2.0) {
  std::uniform_real_distribution<double> dist(0.0, hi);
  Matrix c(rows, cols);
  for (auto& x : c.values()) x = dist(rng);
  return CostMatrix(std::move(c));
}

inline FeatureSet random_features(std::mt19937_64& rng, std::size_t count, std::size_t dim,
                                  FeatureRole role) {
  std::normal_distribution<double> g;
  Matrix m(count, dim);
  for (auto& x : m.values()) x = g(rng);
  return FeatureSet(std::move(m), role);
}

// Cosine via explicit unit vectors; deliberately not the library's formula.
inline double reference_cosine(std::span<const double> a, std::span<const double> b) {
  double na = 0.0;
  double nb = 0.0;
  for (double x : a) na += x * x;
  for (double x : b) nb += x * x;
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] / na) * (b[k] / nb);
  return s;
}

inline double max_row_violation(const Matrix& t, const ProbabilityVector& u) {
  double worst = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    double s = 0.0;
    for (double x : t.row(i)) s += x;
    worst = std::max(worst, std::abs(s - u[i]));
  }
  return worst;
}

inline double max_col_violation(const Matrix& t, const ProbabilityVector& v) {
  double worst = 0.0;
  for (std::size_t j = 0; j < t.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) s += t(i, j);
    worst = std::max(worst, std::abs(s - v[j]));
  }
  return worst;
}

inline double frobenius_inner(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) s += a.values()[k] * b.values()[k];
  return s;
}

// Largest entrywise gap between the plan and diag(a) exp(-C/lambda) diag(b),
// rebuilt from the reported log-scalings. The exponent is summed in log space
// so small lambdas never form the underflowing kernel.
inline double certificate_error(const SinkhornResult& r, const CostMatrix& c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const double rebuilt =
          std::exp(r.log_row_scaling[i] - c(i, j) / r.lambda + r.log_col_scaling[j]);
      worst = std::max(worst, std::abs(rebuilt - r.plan.plan()(i, j)));
    }
  }
  return worst;
}

// Tight settings for checks that need plans feasible to ~1e-7.
inline SinkhornConfig tight_sinkhorn(double lambda) {
  SinkhornConfig cfg;
  cfg.lambda = lambda;
  cfg.delta_v_threshold = 1e-6;
  cfg.max_iters = 1000000;
  cfg.log_domain = true;
  cfg.epsilon_scaling = true;
  return cfg;
}

// Central finite differences of the full loss, the plan held fixed.
inline Matrix finite_difference_gradient(const SyntheticScene& scene, const AlignmentModel& model,
                                         const TransportPlan& plan, double h) {
  const Matrix& base = model.text_embeddings.matrix();
  Matrix grad(base.rows(), base.cols());
  for (std::size_t n = 0; n < base.rows(); ++n) {
    for (std::size_t k = 0; k < base.cols(); ++k) {
      Matrix plus = base;
      Matrix minus = base;
      plus(n, k) += h;
      minus(n, k) -= h;
      AlignmentModel mp = model;
      AlignmentModel mm = model;
      mp.text_embeddings = FeatureSet(std::move(plus), FeatureRole::textual);
      mm.text_embeddings = FeatureSet(std::move(minus), FeatureRole::textual);
      grad(n, k) = (loss(scene, mp, plan).value - loss(scene, mm, plan).value) / (2.0 * h);
    }
  }
  return grad;
}

// max |a - f| / max(|a|, |f|, floor) over entries.
inline double max_relative_error(const Matrix& analytic, const Matrix& numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.values().size(); ++k) {
    const double a = analytic.values()[k];
    const double f = numeric.values()[k];
    const double scale = std::max({std::abs(a), std::abs(f), floor});
    worst = std::max(worst, std::abs(a - f) / scale);
  }
  return worst;
}

// IoU computed from pixel sets, no confusion matrix involved.
inline std::vector<double> reference_ious(const std::vector<int>& labels,
                                          const std::vector<int>& preds, int classes) {
  std::vector<double> out;
  for (int c = 0; c < classes; ++c) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool in_l = labels[i] == c;
      const bool in_p = preds[i] == c;
      inter += (in_l && in_p) ? 1 : 0;
      uni += (in_l || in_p) ? 1 : 0;
    }
    if (uni > 0) out.push_back(static_cast<double>(inter) / static_cast<double>(uni));
  }
  return out;
}

}  // namespace costot::testing
