#include "costot/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "costot/error.hpp"

namespace costot {

ExactOTResult exact_ot_permutation(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) {
    throw Error(ErrorCode::shape_mismatch, "permutation oracle needs a square cost matrix");
  }
  if (n > kMaxPermutationSize) {
    throw Error(ErrorCode::too_large, "permutation oracle is capped at " +
                                          std::to_string(kMaxPermutationSize) + " x " +
                                          std::to_string(kMaxPermutationSize));
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto assignment_cost = [&](const std::vector<std::size_t>& p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += cost(i, p[i]);
    return sum;
  };
  std::vector<std::size_t> best = perm;
  double best_sum = assignment_cost(perm);
  // next_permutation walks in lexicographic order, so requiring a strict
  // improvement keeps the smallest permutation among ties.
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double sum = assignment_cost(perm);
    if (sum < best_sum - 1e-12 * (1.0 + std::abs(best_sum))) {
      best_sum = sum;
      best = perm;
    }
  }

  const double mass = 1.0 / static_cast<double>(n);
  Matrix plan(n, n);
  for (std::size_t i = 0; i < n; ++i) plan(i, best[i]) = mass;
  const double value = ot_distance(plan, cost);
  return ExactOTResult{value,
                       TransportPlan(std::move(plan), ProbabilityVector::uniform(n),
                                     ProbabilityVector::uniform(n)),
                       OracleMethod::permutation, std::move(best)};
}

namespace {

struct Cell {
  std::size_t row;
  std::size_t col;
};

// Basis cells form a spanning tree over M row nodes and N column nodes
// (column j is node M + j).
class TransportationSimplex {
 public:
  TransportationSimplex(const CostMatrix& cost, const ProbabilityVector& u,
                        const ProbabilityVector& v)
      : cost_(cost), rows_(cost.rows()), cols_(cost.cols()), flow_(rows_, cols_),
        basic_(rows_ * cols_, false) {
    north_west_corner(u, v);
    double scale = 0.0;
    for (double c : cost.cost().values()) scale = std::max(scale, std::abs(c));
    tolerance_ = 1e-12 * (1.0 + scale);
  }

  Matrix solve() {
    // Bland's rule terminates; the cap only guards against a logic error.
    const std::size_t cap = 100000;
    for (std::size_t iter = 0; iter < cap; ++iter) {
      compute_potentials();
      const auto entering = find_entering();
      if (!entering) {
        for (double& x : flow_.values()) x = std::max(x, 0.0);
        return flow_;
      }
      pivot(*entering);
    }
    throw Error(ErrorCode::not_converged, "transportation simplex exceeded its pivot cap");
  }

 private:
  std::size_t index(const Cell& c) const { return c.row * cols_ + c.col; }

  void north_west_corner(const ProbabilityVector& u, const ProbabilityVector& v) {
    std::vector<double> supply(u.weights().begin(), u.weights().end());
    std::vector<double> demand(v.weights().begin(), v.weights().end());
    std::size_t i = 0;
    std::size_t j = 0;
    while (true) {
      const double x = std::min(supply[i], demand[j]);
      flow_(i, j) = x;
      basic_[i * cols_ + j] = true;
      basis_.push_back({i, j});
      supply[i] -= x;
      demand[j] -= x;
      if (i + 1 == rows_ && j + 1 == cols_) break;
      // Advance exactly one index per cell so the basis has M + N - 1 cells;
      // when both run out together the next cell carries a degenerate zero.
      if (j + 1 == cols_ || (i + 1 < rows_ && supply[i] <= demand[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void build_adjacency() {
    adjacency_.assign(rows_ + cols_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adjacency_[basis_[k].row].push_back(k);
      adjacency_[rows_ + basis_[k].col].push_back(k);
    }
  }

  void compute_potentials() {
    build_adjacency();
    row_pot_.assign(rows_, 0.0);
    col_pot_.assign(cols_, 0.0);
    std::vector<bool> seen(rows_ + cols_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t k : adjacency_[node]) {
        const Cell& c = basis_[k];
        if (node < rows_) {
          const std::size_t other = rows_ + c.col;
          if (!seen[other]) {
            col_pot_[c.col] = cost_(c.row, c.col) - row_pot_[c.row];
            seen[other] = true;
            stack.push_back(other);
          }
        } else if (!seen[c.row]) {
          row_pot_[c.row] = cost_(c.row, c.col) - col_pot_[c.col];
          seen[c.row] = true;
          stack.push_back(c.row);
        }
      }
    }
  }

  std::optional<Cell> find_entering() const {
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) {
        if (basic_[i * cols_ + j]) continue;
        const double reduced = cost_(i, j) - row_pot_[i] - col_pot_[j];
        if (reduced < -tolerance_) return Cell{i, j};
      }
    }
    return std::nullopt;
  }

  // Basis positions of the tree path from column node of `entering` to its
  // row node.
  std::vector<std::size_t> tree_path(const Cell& entering) const {
    const std::size_t source = entering.row;
    const std::size_t target = rows_ + entering.col;
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> via(rows_ + cols_, none);
    std::vector<bool> seen(rows_ + cols_, false);
    std::vector<std::size_t> stack{source};
    seen[source] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      if (node == target) break;
      for (std::size_t k : adjacency_[node]) {
        const Cell& c = basis_[k];
        const std::size_t other = node < rows_ ? rows_ + c.col : c.row;
        if (!seen[other]) {
          seen[other] = true;
          via[other] = k;
          stack.push_back(other);
        }
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = target; node != source;) {
      const std::size_t k = via[node];
      path.push_back(k);
      const Cell& c = basis_[k];
      node = node < rows_ ? rows_ + c.col : c.row;
    }
    return path;
  }

  void pivot(const Cell& entering) {
    const auto path = tree_path(entering);
    // Cells on the path alternate -, +, -, ... starting next to the entering
    // column; the path has odd length so it also ends on a minus cell.
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const Cell& c = basis_[path[p]];
      theta = std::min(theta, flow_(c.row, c.col));
    }
    std::size_t leaving = path.size();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const Cell& c = basis_[path[p]];
      if (flow_(c.row, c.col) <= theta &&
          (leaving == path.size() || index(c) < index(basis_[path[leaving]]))) {
        leaving = p;
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      const Cell& c = basis_[path[p]];
      flow_(c.row, c.col) += (p % 2 == 0) ? -theta : theta;
    }
    flow_(entering.row, entering.col) = theta;

    const std::size_t out_pos = path[leaving];
    const Cell out = basis_[out_pos];
    flow_(out.row, out.col) = 0.0;
    basic_[index(out)] = false;
    basic_[index(entering)] = true;
    basis_[out_pos] = entering;
  }

  const CostMatrix& cost_;
  std::size_t rows_;
  std::size_t cols_;
  Matrix flow_;
  std::vector<bool> basic_;
  std::vector<Cell> basis_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> row_pot_;
  std::vector<double> col_pot_;
  double tolerance_ = 0.0;
};

}  // namespace

ExactOTResult exact_ot_simplex(const CostMatrix& cost, const ProbabilityVector& u,
                               const ProbabilityVector& v) {
  if (u.size() != cost.rows() || v.size() != cost.cols()) {
    throw Error(ErrorCode::shape_mismatch, "marginal sizes do not match the cost matrix");
  }
  if (cost.rows() > kMaxSimplexSize || cost.cols() > kMaxSimplexSize) {
    throw Error(ErrorCode::too_large, "simplex oracle is capped at " +
                                          std::to_string(kMaxSimplexSize) + " x " +
                                          std::to_string(kMaxSimplexSize));
  }
  TransportationSimplex simplex(cost, u, v);
  Matrix plan = simplex.solve();
  const double value = ot_distance(plan, cost);
  return ExactOTResult{value, TransportPlan(std::move(plan), u, v), OracleMethod::simplex, {}};
}

}  // namespace costot
