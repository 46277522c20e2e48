#include "costot/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "costot/error.hpp"

namespace costot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

std::vector<double> log_weights(const ProbabilityVector& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = safe_log(p[i]);
  return out;
}

template <typename Term>
double log_sum_exp(std::size_t count, Term term) {
  double peak = kNegInf;
  for (std::size_t k = 0; k < count; ++k) peak = std::max(peak, term(k));
  if (peak == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) acc += std::exp(term(k) - peak);
  return peak + std::log(acc);
}

Matrix plan_from_logs(const Matrix& cost, std::span<const double> log_a,
                      std::span<const double> log_b, double lambda) {
  Matrix plan(cost.rows(), cost.cols());
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      plan(i, j) = std::exp(log_a[i] - cost(i, j) / lambda + log_b[j]);
    }
  }
  return plan;
}

Matrix plan_from_scalings(const Matrix& kernel, std::span<const double> a,
                          std::span<const double> b) {
  Matrix plan(kernel.rows(), kernel.cols());
  for (std::size_t i = 0; i < kernel.rows(); ++i) {
    for (std::size_t j = 0; j < kernel.cols(); ++j) plan(i, j) = a[i] * kernel(i, j) * b[j];
  }
  return plan;
}

struct StageOutcome {
  std::size_t iterations = 0;
  double delta_v = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Log-stabilized Sinkhorn at a fixed lambda. Full log-scalings are split as
// log a = log_a_abs + log(a_rel) (same for b): the absorbed parts live inside
// the kernel exp(log_a_abs + log_b_abs - C / lambda) and the relative parts are
// updated with plain products. Whenever a relative scaling leaves
// [e^-kAbsorbBound, e^kAbsorbBound] it is folded back into the kernel, so
// entries stay representable for any lambda.
class StabilizedStage {
 public:
  StabilizedStage(const CostMatrix& cost, std::span<const double> log_u,
                  std::span<const double> log_v, double lambda, std::vector<double>& log_a,
                  std::vector<double>& log_b)
      : cost_(cost.cost()),
        log_u_(log_u),
        log_v_(log_v),
        lambda_(lambda),
        rows_(cost.rows()),
        cols_(cost.cols()),
        log_a_(log_a),
        log_b_(log_b),
        a_abs_(rows_, 0.0),
        b_abs_(log_b),
        a_rel_(rows_, 1.0),
        b_rel_(cols_, 1.0),
        prev_b_rel_(cols_, 1.0),
        kernel_(rows_, cols_) {
    // Row offsets only shift where the first row update starts from; that
    // update overwrites a anyway.
    for (std::size_t i = 0; i < rows_; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < cols_; ++j) best = std::min(best, cost_(i, j) / lambda_ - b_abs_[j]);
      a_abs_[i] = best;
    }
    rebuild_kernel();
  }

  StageOutcome run(double threshold, std::size_t max_iters, std::vector<SinkhornTraceEntry>* trace,
                   const CostMatrix& cost) {
    StageOutcome out;
    std::vector<double> next_log_b(cols_);
    for (std::size_t t = 1; t <= max_iters; ++t) {
      absorbed_ = false;
      update_rows();
      update_cols();
      if (absorbed_) {
        for (std::size_t j = 0; j < cols_; ++j) next_log_b[j] = full_log(b_abs_[j], b_rel_[j]);
        out.delta_v = delta_v(log_b_, next_log_b);
        log_b_.swap(next_log_b);
      } else {
        // Without absorption log b changes by log(b_rel / previous b_rel); the
        // extreme ratios give the infinity norm with two logarithms.
        double lo = 1.0;
        double hi = 1.0;
        for (std::size_t j = 0; j < cols_; ++j) {
          if (prev_b_rel_[j] == b_rel_[j]) continue;
          const double ratio = b_rel_[j] / prev_b_rel_[j];
          lo = std::min(lo, ratio);
          hi = std::max(hi, ratio);
        }
        out.delta_v = std::max(std::log(hi), -std::log(lo));
        for (std::size_t j = 0; j < cols_; ++j) log_b_[j] = full_log(b_abs_[j], b_rel_[j]);
      }
      prev_b_rel_ = b_rel_;
      out.iterations = t;
      if (trace != nullptr) {
        sync_row_logs();
        trace->push_back({t, lambda_, out.delta_v,
                          ot_distance(plan_from_logs(cost_, log_a_, log_b_, lambda_), cost)});
      }
      if (out.delta_v < threshold) {
        out.converged = true;
        break;
      }
    }
    sync_row_logs();
    return out;
  }

 private:
  static constexpr double kAbsorbBound = 50.0;

  static double full_log(double absorbed, double relative) {
    return relative > 0.0 ? absorbed + std::log(relative) : kNegInf;
  }

  void sync_row_logs() {
    for (std::size_t i = 0; i < rows_; ++i) log_a_[i] = full_log(a_abs_[i], a_rel_[i]);
  }

  void rebuild_kernel() {
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        kernel_(i, j) = std::exp(a_abs_[i] + b_abs_[j] - cost_(i, j) / lambda_);
      }
    }
  }

  void absorb() {
    for (std::size_t i = 0; i < rows_; ++i) {
      a_abs_[i] = full_log(a_abs_[i], a_rel_[i]);
      a_rel_[i] = a_abs_[i] == kNegInf ? 0.0 : 1.0;
    }
    for (std::size_t j = 0; j < cols_; ++j) {
      b_abs_[j] = full_log(b_abs_[j], b_rel_[j]);
      b_rel_[j] = b_abs_[j] == kNegInf ? 0.0 : 1.0;
    }
    for (double& x : a_abs_) if (x == kNegInf) x = 0.0;
    for (double& x : b_abs_) if (x == kNegInf) x = 0.0;
    rebuild_kernel();
    absorbed_ = true;
  }

  static bool out_of_band(std::span<const double> rel) {
    static const double upper = std::exp(kAbsorbBound);
    static const double lower = std::exp(-kAbsorbBound);
    for (double s : rel) {
      if (s > upper || (s > 0.0 && s < lower)) return true;
    }
    return false;
  }

  static bool usable(double denominator) {
    return denominator >= std::numeric_limits<double>::min() && std::isfinite(denominator);
  }

  void update_rows() {
    bool fallback = false;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (log_u_[i] == kNegInf) {
        a_rel_[i] = 0.0;
        continue;
      }
      const double denom = dot(kernel_.row(i), b_rel_);
      if (!usable(denom)) {
        fallback = true;
        break;
      }
      a_rel_[i] = std::exp(log_u_[i]) / denom;
    }
    if (fallback) {
      // Exact log-sum-exp half-step, then fold everything into the kernel.
      for (std::size_t i = 0; i < rows_; ++i) {
        if (log_u_[i] == kNegInf) {
          a_abs_[i] = 0.0;
          a_rel_[i] = 0.0;
          continue;
        }
        a_abs_[i] = log_u_[i] - log_sum_exp(cols_, [&](std::size_t j) {
                      return full_log(b_abs_[j], b_rel_[j]) - cost_(i, j) / lambda_;
                    });
        a_rel_[i] = 1.0;
      }
      absorb();
    } else if (out_of_band(a_rel_)) {
      absorb();
    }
  }

  void update_cols() {
    bool fallback = false;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (log_v_[j] == kNegInf) {
        b_rel_[j] = 0.0;
        continue;
      }
      double denom = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) denom += kernel_(i, j) * a_rel_[i];
      if (!usable(denom)) {
        fallback = true;
        break;
      }
      b_rel_[j] = std::exp(log_v_[j]) / denom;
    }
    if (fallback) {
      for (std::size_t j = 0; j < cols_; ++j) {
        if (log_v_[j] == kNegInf) {
          b_abs_[j] = 0.0;
          b_rel_[j] = 0.0;
          continue;
        }
        b_abs_[j] = log_v_[j] - log_sum_exp(rows_, [&](std::size_t i) {
                      return full_log(a_abs_[i], a_rel_[i]) - cost_(i, j) / lambda_;
                    });
        b_rel_[j] = 1.0;
      }
      absorb();
    } else if (out_of_band(b_rel_)) {
      absorb();
    }
  }

  const Matrix& cost_;
  std::span<const double> log_u_;
  std::span<const double> log_v_;
  double lambda_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double>& log_a_;
  std::vector<double>& log_b_;
  std::vector<double> a_abs_;
  std::vector<double> b_abs_;
  std::vector<double> a_rel_;
  std::vector<double> b_rel_;
  std::vector<double> prev_b_rel_;
  Matrix kernel_;
  bool absorbed_ = false;
};

SinkhornResult solve_log_domain(const CostMatrix& cost, const ProbabilityVector& u,
                                const ProbabilityVector& v, const SinkhornConfig& config) {
  const auto log_u = log_weights(u);
  const auto log_v = log_weights(v);
  std::vector<double> log_a(cost.rows(), 0.0);
  std::vector<double> log_b(cost.cols(), 0.0);
  std::vector<SinkhornTraceEntry> trace;
  auto* trace_sink = config.record_trace ? &trace : nullptr;

  std::size_t total_iterations = 0;
  if (config.epsilon_scaling) {
    const auto values = cost.cost().values();
    double stage_lambda = std::max(*std::max_element(values.begin(), values.end()), config.lambda);
    while (stage_lambda > config.lambda) {
      StabilizedStage stage(cost, log_u, log_v, stage_lambda, log_a, log_b);
      total_iterations +=
          stage.run(config.delta_v_threshold, config.max_iters, trace_sink, cost).iterations;
      // Carry the dual potential lambda * log b over to the next lambda.
      const double next_lambda = std::max(stage_lambda / 2.0, config.lambda);
      for (double& lb : log_b) {
        if (lb != kNegInf) lb *= stage_lambda / next_lambda;
      }
      stage_lambda = next_lambda;
    }
  }
  StabilizedStage final_stage(cost, log_u, log_v, config.lambda, log_a, log_b);
  const auto outcome = final_stage.run(config.delta_v_threshold, config.max_iters, trace_sink, cost);
  total_iterations += outcome.iterations;

  Matrix plan = plan_from_logs(cost.cost(), log_a, log_b, config.lambda);
  const double distance = ot_distance(plan, cost);
  return SinkhornResult{TransportPlan(std::move(plan), u, v),
                        distance,
                        total_iterations,
                        outcome.converged,
                        outcome.delta_v,
                        config.lambda,
                        std::move(log_a),
                        std::move(log_b),
                        false,
                        std::move(trace)};
}

SinkhornResult solve_linear_domain(const CostMatrix& cost, const ProbabilityVector& u,
                                   const ProbabilityVector& v, const SinkhornConfig& config) {
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  const auto kernel = gibbs_kernel(cost, config.lambda);
  const Matrix& k = kernel.values;

  std::vector<double> a(rows, 1.0);
  std::vector<double> b(cols, 1.0);
  std::vector<double> log_b(cols, 0.0);
  std::vector<double> next_log_b(cols);
  std::vector<SinkhornTraceEntry> trace;

  auto scale = [](double marginal, double denominator, const char* axis, std::size_t index) {
    if (denominator > 0.0) {
      const double s = marginal / denominator;
      if (!std::isfinite(s)) {
        throw Error(ErrorCode::marginal_mismatch,
                    std::string("scaling overflow on ") + axis + " " + std::to_string(index) +
                        "; the kernel is too close to underflow for linear-domain iteration");
      }
      return s;
    }
    if (marginal > 0.0) {
      throw Error(ErrorCode::marginal_mismatch,
                  std::string("positive marginal on ") + axis + " " + std::to_string(index) +
                      " but its kernel entries all underflowed");
    }
    return 0.0;
  };

  std::size_t iterations = 0;
  double dv = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (std::size_t t = 1; t <= config.max_iters; ++t) {
    for (std::size_t i = 0; i < rows; ++i) a[i] = scale(u[i], dot(k.row(i), b), "row", i);
    for (std::size_t j = 0; j < cols; ++j) {
      double kta = 0.0;
      for (std::size_t i = 0; i < rows; ++i) kta += k(i, j) * a[i];
      b[j] = scale(v[j], kta, "column", j);
      next_log_b[j] = safe_log(b[j]);
    }
    dv = delta_v(log_b, next_log_b);
    log_b.swap(next_log_b);
    iterations = t;
    if (config.record_trace) {
      trace.push_back({t, config.lambda, dv, ot_distance(plan_from_scalings(k, a, b), cost)});
    }
    if (dv < config.delta_v_threshold) {
      converged = true;
      break;
    }
  }

  std::vector<double> log_a(rows);
  for (std::size_t i = 0; i < rows; ++i) log_a[i] = safe_log(a[i]);
  Matrix plan = plan_from_scalings(k, a, b);
  const double distance = ot_distance(plan, cost);
  return SinkhornResult{TransportPlan(std::move(plan), u, v),
                        distance,
                        iterations,
                        converged,
                        dv,
                        config.lambda,
                        std::move(log_a),
                        std::move(log_b),
                        kernel.underflow,
                        std::move(trace)};
}

}  // namespace

void SinkhornConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::invalid_argument, "lambda must be a positive finite number");
  }
  if (!(delta_v_threshold > 0.0) || !std::isfinite(delta_v_threshold)) {
    throw Error(ErrorCode::invalid_argument, "delta-v threshold must be a positive finite number");
  }
  if (max_iters < 1) throw Error(ErrorCode::invalid_argument, "max_iters must be >= 1");
  if (epsilon_scaling && !log_domain) {
    throw Error(ErrorCode::invalid_argument, "epsilon scaling requires log-domain iteration");
  }
}

TransportPlan::TransportPlan(Matrix plan, ProbabilityVector row_marginal,
                             ProbabilityVector col_marginal)
    : plan_(std::move(plan)),
      row_marginal_(std::move(row_marginal)),
      col_marginal_(std::move(col_marginal)) {
  if (plan_.rows() != row_marginal_.size() || plan_.cols() != col_marginal_.size()) {
    throw Error(ErrorCode::shape_mismatch, "transport plan shape does not match its marginals");
  }
  for (double x : plan_.values()) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(ErrorCode::invalid_argument, "transport plan entries must be finite and >= 0");
    }
  }
}

double TransportPlan::max_marginal_violation() const {
  double worst = 0.0;
  const auto rs = plan_.row_sums();
  const auto cs = plan_.col_sums();
  for (std::size_t i = 0; i < rs.size(); ++i)
    worst = std::max(worst, std::abs(rs[i] - row_marginal_[i]));
  for (std::size_t j = 0; j < cs.size(); ++j)
    worst = std::max(worst, std::abs(cs[j] - col_marginal_[j]));
  return worst;
}

GibbsKernel gibbs_kernel(const CostMatrix& cost, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be positive");
  GibbsKernel out{Matrix(cost.rows(), cost.cols()), false};
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      const double k = std::exp(-cost(i, j) / lambda);
      if (k == 0.0) out.underflow = true;
      out.values(i, j) = k;
    }
  }
  return out;
}

SinkhornResult sinkhorn_solve(const CostMatrix& cost, const ProbabilityVector& u,
                              const ProbabilityVector& v, const SinkhornConfig& config) {
  config.validate();
  if (u.size() != cost.rows() || v.size() != cost.cols()) {
    throw Error(ErrorCode::shape_mismatch,
                "marginal sizes (" + std::to_string(u.size()) + ", " + std::to_string(v.size()) +
                    ") do not match cost matrix " + std::to_string(cost.rows()) + "x" +
                    std::to_string(cost.cols()));
  }
  return config.log_domain ? solve_log_domain(cost, u, v, config)
                           : solve_linear_domain(cost, u, v, config);
}

double ot_distance(const Matrix& plan, const CostMatrix& cost) {
  if (!plan.same_shape(cost.cost())) {
    throw Error(ErrorCode::shape_mismatch, "plan and cost matrix shapes differ");
  }
  double total = 0.0;
  const auto p = plan.values();
  const auto c = cost.cost().values();
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] * c[k];
  return total;
}

double ot_distance(const TransportPlan& plan, const CostMatrix& cost) {
  return ot_distance(plan.plan(), cost);
}

double delta_v(std::span<const double> previous, std::span<const double> next) {
  if (previous.size() != next.size()) {
    throw Error(ErrorCode::shape_mismatch, "scaling vectors differ in length");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < next.size(); ++k) {
    if (previous[k] == next[k]) continue;
    worst = std::max(worst, std::abs(next[k] - previous[k]));
  }
  return worst;
}

}  // namespace costot
