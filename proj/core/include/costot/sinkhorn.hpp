#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "costot/features.hpp"
#include "costot/matrix.hpp"

namespace costot {

struct SinkhornConfig {
  /// Entropic regularization strength; the Gibbs kernel is exp(-C / lambda).
  double lambda = 0.1;
  /// Iteration stops once the column-scaling change falls below this.
  double delta_v_threshold = 0.01;
  std::size_t max_iters = 1000;
  /// Log-stabilized scalings: large factors are absorbed into the kernel exponent.
  bool log_domain = true;
  /// Warm-start from a geometric ladder of larger lambdas (halving from
  /// max(C)) before the target lambda. Log domain only.
  bool epsilon_scaling = false;
  bool record_trace = false;

  /// Throws ErrorCode::invalid_argument.
  void validate() const;
};

/// Nonnegative M x N coupling together with the marginals it was solved for.
class TransportPlan {
 public:
  TransportPlan(Matrix plan, ProbabilityVector row_marginal, ProbabilityVector col_marginal);

  const Matrix& plan() const noexcept { return plan_; }
  const ProbabilityVector& row_marginal() const noexcept { return row_marginal_; }
  const ProbabilityVector& col_marginal() const noexcept { return col_marginal_; }
  std::size_t rows() const noexcept { return plan_.rows(); }
  std::size_t cols() const noexcept { return plan_.cols(); }

  /// Largest absolute deviation of any row or column sum from its marginal.
  double max_marginal_violation() const;

  friend bool operator==(const TransportPlan&, const TransportPlan&) = default;

 private:
  Matrix plan_;
  ProbabilityVector row_marginal_;
  ProbabilityVector col_marginal_;
};

struct SinkhornTraceEntry {
  std::size_t iteration = 0;
  double lambda = 0.0;
  double delta_v = 0.0;
  double distance = 0.0;
};

struct SinkhornResult {
  TransportPlan plan;
  double distance = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double final_delta_v = 0.0;
  double lambda = 0.0;
  /// log a and log b with plan = diag(a) exp(-C / lambda) diag(b).
  std::vector<double> log_row_scaling;
  std::vector<double> log_col_scaling;
  /// Linear domain only: some kernel entry rounded to zero.
  bool kernel_underflow = false;
  std::vector<SinkhornTraceEntry> trace;
};

struct GibbsKernel {
  Matrix values;
  bool underflow = false;
};

/// K = exp(-C / lambda), flagging entries that underflow to zero.
GibbsKernel gibbs_kernel(const CostMatrix& cost, double lambda);

/// Entropic OT by alternating scaling updates a <- u / (K b), b <- v / (K^T a).
/// Delta-v is the infinity-norm change of log b between successive sweeps.
/// A run that hits max_iters is returned with converged == false; it is not an
/// error. Throws MarginalMismatch when a positive marginal meets a kernel
/// row or column that underflowed entirely.
SinkhornResult sinkhorn_solve(const CostMatrix& cost, const ProbabilityVector& u,
                              const ProbabilityVector& v, const SinkhornConfig& config);

/// Sum over m, n of T[m][n] * C[m][n].
double ot_distance(const Matrix& plan, const CostMatrix& cost);
double ot_distance(const TransportPlan& plan, const CostMatrix& cost);

/// Max absolute entrywise difference; equal entries (including equal
/// infinities) contribute zero.
double delta_v(std::span<const double> previous, std::span<const double> next);

}  // namespace costot
