#pragma once

#include <cstddef>
#include <vector>

#include "costot/features.hpp"
#include "costot/sinkhorn.hpp"

namespace costot {

enum class OracleMethod { permutation, simplex };

/// Exact minimum of <T, C> over the transport polytope, with an optimal vertex.
struct ExactOTResult {
  double value = 0.0;
  TransportPlan plan;
  OracleMethod method = OracleMethod::permutation;
  /// Permutation oracle only: row i is matched to column assignment[i].
  std::vector<std::size_t> assignment;
};

inline constexpr std::size_t kMaxPermutationSize = 8;
inline constexpr std::size_t kMaxSimplexSize = 32;

/// Exhaustive search over permutations for a square cost with uniform
/// marginals. Among tied optima the lexicographically smallest permutation
/// wins. Throws TooLarge above 8 x 8, ShapeMismatch for non-square input.
ExactOTResult exact_ot_permutation(const CostMatrix& cost);

/// Transportation simplex: north-west corner start, MODI potentials, Bland's
/// rule for entering and leaving cells. Throws TooLarge if M or N exceeds 32.
ExactOTResult exact_ot_simplex(const CostMatrix& cost, const ProbabilityVector& u,
                               const ProbabilityVector& v);

}  // namespace costot
