#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "costot/error.hpp"
#include "costot/exact_ot.hpp"
#include "costot/sinkhorn.hpp"

namespace costot::cli {

namespace {

constexpr double kOracleTolerance = 1e-9;
constexpr double kMarginalTolerance = 1e-6;
constexpr double kCertificateTolerance = 1e-8;

enum Check { oracle_agreement, vertex_support, marginals, gap_bounds, gap_monotone, certificate, kCheckCount };

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

double certificate_error(const SinkhornResult& r, const CostMatrix& cost) {
  double worst = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      const double rebuilt =
          std::exp(r.log_row_scaling[i] - cost(i, j) / r.lambda + r.log_col_scaling[j]);
      worst = std::max(worst, std::abs(rebuilt - r.plan.plan()(i, j)));
    }
  }
  return worst;
}

}  // namespace

VerifyReport run_verification(const VerifyParams& params) {
  if (params.max_n < 2 || params.max_n > kMaxPermutationSize) {
    throw Error(ErrorCode::invalid_argument, "max_n must lie in [2, 8]");
  }
  if (params.lambdas.empty()) throw Error(ErrorCode::invalid_argument, "lambda grid is empty");
  for (double lambda : params.lambdas) {
    SinkhornConfig probe;
    probe.lambda = lambda;
    probe.delta_v_threshold = params.delta_v;
    probe.max_iters = params.max_iters;
    probe.validate();
  }
  std::vector<double> grid = params.lambdas;
  std::sort(grid.begin(), grid.end(), std::greater<>());

  VerifyReport report;
  report.checks = {{"oracle agreement (permutation vs simplex)"},
                   {"simplex vertex support <= 2n-1"},
                   {"marginals within 1e-6"},
                   {"0 <= gap <= lambda ln(n^2)"},
                   {"gap non-increasing as lambda shrinks"},
                   {"plan = diag(a) exp(-C/lambda) diag(b)"}};

  auto record = [&](Check check, bool ok, double measure, const nlohmann::json& instance) {
    auto& tally = report.checks[check];
    ++tally.total;
    if (ok) {
      ++tally.passed;
    } else {
      tally.worst = std::max(tally.worst, measure);
      if (!report.failure) {
        report.failure = instance;
        (*report.failure)["check"] = tally.name;
        (*report.failure)["measure"] = measure;
      }
    }
  };

  for (std::size_t trial = 0; trial < params.trials; ++trial) {
    std::mt19937_64 rng(params.seed + trial);
    std::uniform_int_distribution<std::size_t> pick_n(2, params.max_n);
    std::uniform_real_distribution<double> pick_cost(0.0, 2.0);
    const std::size_t n = pick_n(rng);
    Matrix c(n, n);
    for (double& x : c.values()) x = pick_cost(rng);
    const CostMatrix cost(c);
    const auto uniform = ProbabilityVector::uniform(n);

    nlohmann::json instance = {{"trial", trial}, {"seed", params.seed + trial}, {"cost", matrix_json(c)}};

    const auto exact = exact_ot_permutation(cost);
    const auto lp = exact_ot_simplex(cost, uniform, uniform);
    const double disagreement = std::abs(exact.value - lp.value);
    record(oracle_agreement, disagreement <= kOracleTolerance, disagreement, instance);
    std::size_t support = 0;
    for (double x : lp.plan.plan().values()) support += x > 0.0 ? 1 : 0;
    record(vertex_support, support <= 2 * n - 1, static_cast<double>(support), instance);

    std::optional<double> previous_gap;
    for (double lambda : grid) {
      SinkhornConfig cfg;
      cfg.lambda = lambda;
      cfg.delta_v_threshold = params.delta_v;
      cfg.max_iters = params.max_iters;
      cfg.log_domain = true;
      cfg.epsilon_scaling = true;
      const auto result = sinkhorn_solve(cost, uniform, uniform, cfg);
      auto at_lambda = instance;
      at_lambda["lambda"] = lambda;
      at_lambda["sinkhorn_converged"] = result.converged;

      const double violation = result.plan.max_marginal_violation();
      record(marginals, result.converged && violation <= kMarginalTolerance, violation, at_lambda);

      const double gap = result.distance - exact.value;
      const double bound = lambda * std::log(static_cast<double>(n * n));
      const bool in_bounds = gap >= -kOracleTolerance && gap <= bound;
      record(gap_bounds, in_bounds, gap < 0.0 ? -gap : gap - bound, at_lambda);

      if (previous_gap) {
        record(gap_monotone, gap <= *previous_gap + kOracleTolerance, gap - *previous_gap, at_lambda);
      }
      previous_gap = gap;

      const double cert = certificate_error(result, cost);
      record(certificate, cert <= kCertificateTolerance, cert, at_lambda);
    }
  }
  return report;
}

}  // namespace costot::cli
