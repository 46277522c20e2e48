#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace costot::cli {

struct VerifyParams {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t max_n = 6;
  std::vector<double> lambdas{0.5, 0.1, 0.05, 0.01};
  double delta_v = 1e-6;
  std::size_t max_iters = 1000000;
};

struct CheckTally {
  std::string name;
  std::size_t passed = 0;
  std::size_t total = 0;
  /// Largest observed violation measure (0 when every case passed cleanly).
  double worst = 0.0;
};

struct VerifyReport {
  std::vector<CheckTally> checks;
  /// First failing instance, serialized for replay.
  std::optional<nlohmann::json> failure;
  bool passed() const { return !failure.has_value(); }
};

/// Randomized square instances with uniform marginals, n in [2, max_n],
/// costs uniform in [0, 2]; trial t draws from seed + t. Checks oracle
/// agreement, marginal feasibility, the entropic gap bound
/// 0 <= <T_lambda, C> - OT <= lambda ln(n^2), gap monotonicity in lambda and
/// the scaling-form certificate.
VerifyReport run_verification(const VerifyParams& params);

}  // namespace costot::cli
