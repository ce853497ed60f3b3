#pragma once

#include "fsdh/types.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

// Solvers for min_{b in {-1,1}^L} b^T Q b + f^T b.
namespace fsdh::biqp {

enum class Solver { dcc, exhaustive, branch_and_bound };

inline const char* to_string(Solver s) {
  switch (s) {
    case Solver::dcc: return "dcc";
    case Solver::exhaustive: return "exhaustive";
    case Solver::branch_and_bound: return "branch_and_bound";
  }
  return "?";
}

inline Solver parse_solver(const std::string& name) {
  if (name == "dcc") return Solver::dcc;
  if (name == "exhaustive") return Solver::exhaustive;
  if (name == "branch_and_bound" || name == "bnb") return Solver::branch_and_bound;
  throw PreconditionError("unknown B-step solver '" + name + "'");
}

template <typename Scalar>
struct Problem {
  Matrix<Scalar> quadratic;  // L x L symmetric
  Vector<Scalar> linear;     // L

  Index bits() const { return linear.size(); }

  Scalar objective(const Vector<Scalar>& b) const {
    return b.dot(quadratic * b) + linear.dot(b);
  }
};

template <typename Scalar>
struct Solution {
  Vector<Scalar> assignment;
  Scalar objective = 0;
  Solver solver = Solver::dcc;
  bool exact = false;
  Index sweeps = 0;  // dcc
  Index nodes = 0;   // branch_and_bound
};

template <typename Scalar>
void check_problem(const Problem<Scalar>& p) {
  require(p.quadratic.rows() == p.bits() && p.quadratic.cols() == p.bits(),
          "quadratic term must be L x L");
  const Scalar scale = std::max<Scalar>(Scalar(1), p.quadratic.cwiseAbs().maxCoeff());
  require((p.quadratic - p.quadratic.transpose()).cwiseAbs().maxCoeff() <=
              Scalar(1e-12) * scale,
          "quadratic term must be symmetric");
}

// a beats b: lower objective, or equal within a relative tolerance and
// lexicographically smaller (-1 < +1, first bit most significant).
template <typename Scalar>
bool better(Scalar a_value, const Vector<Scalar>& a, Scalar b_value,
            const Vector<Scalar>& b) {
  const Scalar tol = Scalar(1e-10) * std::max<Scalar>(
                                         Scalar(1), std::max(std::abs(a_value),
                                                             std::abs(b_value)));
  if (a_value < b_value - tol) return true;
  if (a_value > b_value + tol) return false;
  for (Index l = 0; l < a.size(); ++l) {
    if (a[l] != b[l]) return a[l] < b[l];
  }
  return false;
}

// Cyclic single-bit updates b_l <- -sgn(2 sum_{i != l} Q_il b_i + f_l).
// A zero argument keeps the current bit. Stops after a sweep with no flip.
template <typename Scalar>
Solution<Scalar> solve_dcc(const Problem<Scalar>& p, const Vector<Scalar>& init,
                           Index max_sweeps) {
  require(max_sweeps >= 1, "max_sweeps must be >= 1");
  require(init.size() == p.bits(), "initial assignment has wrong length");
  require((init.array().abs() == Scalar(1)).all(), "initial assignment must be +-1");
  Solution<Scalar> s;
  s.solver = Solver::dcc;
  s.assignment = init;
  Vector<Scalar>& b = s.assignment;
  // coupling = Q b, kept current as bits flip
  Vector<Scalar> coupling = p.quadratic * b;
  for (Index sweep = 0; sweep < max_sweeps; ++sweep) {
    ++s.sweeps;
    bool changed = false;
    for (Index l = 0; l < p.bits(); ++l) {
      const Scalar arg =
          Scalar(2) * (coupling[l] - p.quadratic(l, l) * b[l]) + p.linear[l];
      if (arg == Scalar(0)) continue;
      const Scalar next = arg > 0 ? Scalar(-1) : Scalar(1);
      if (next != b[l]) {
        coupling += p.quadratic.col(l) * (next - b[l]);
        b[l] = next;
        changed = true;
      }
    }
    if (!changed) break;
  }
  s.objective = p.objective(b);
  return s;
}

inline constexpr Index kExhaustiveMaxBits = 24;

// Global minimum over all 2^L assignments (Gray-code walk, O(L) per step).
template <typename Scalar>
Solution<Scalar> solve_exhaustive(const Problem<Scalar>& p,
                                  Index max_bits = kExhaustiveMaxBits) {
  const Index n = p.bits();
  if (n > max_bits) {
    throw BudgetError("exhaustive search over " + std::to_string(n) +
                      " bits exceeds the cap of " + std::to_string(max_bits));
  }
  Solution<Scalar> s;
  s.solver = Solver::exhaustive;
  s.exact = true;
  Vector<Scalar> b = Vector<Scalar>::Constant(n, Scalar(-1));
  Vector<Scalar> coupling = p.quadratic * b;
  Scalar value = p.objective(b);
  s.assignment = b;
  s.objective = value;
  const std::uint64_t total = std::uint64_t(1) << n;
  for (std::uint64_t t = 1; t < total; ++t) {
    const Index k = std::countr_zero(t);
    // flipping b_k changes the objective by -2 b_k (f_k + 2 sum_{i != k} Q_ik b_i)
    const Scalar off = coupling[k] - p.quadratic(k, k) * b[k];
    value += Scalar(-2) * b[k] * (p.linear[k] + Scalar(2) * off);
    coupling += p.quadratic.col(k) * (Scalar(-2) * b[k]);
    b[k] = -b[k];
    if (better(value, b, s.objective, s.assignment)) {
      s.objective = value;
      s.assignment = b;
    }
  }
  s.objective = p.objective(s.assignment);
  return s;
}

namespace detail {

template <typename Scalar>
struct BranchAndBound {
  const Problem<Scalar>& p;
  Index budget;
  Vector<Scalar> coupling_mass;  // sum_{l != m, l,m >= k} |Q_lm| for each depth k
  Vector<Scalar> diag_tail;      // sum_{l >= k} Q_ll
  Vector<Scalar> b;
  Vector<Scalar> effective;      // f_l + 2 sum_{fixed i} Q_il b_i
  Solution<Scalar> best;
  Index nodes = 0;
  bool exhausted = false;

  BranchAndBound(const Problem<Scalar>& problem, Index node_budget)
      : p(problem), budget(node_budget) {
    const Index n = p.bits();
    coupling_mass = Vector<Scalar>::Zero(n + 1);
    diag_tail = Vector<Scalar>::Zero(n + 1);
    for (Index k = n - 1; k >= 0; --k) {
      Scalar row = 0;
      for (Index m = k + 1; m < n; ++m) row += std::abs(p.quadratic(k, m));
      coupling_mass[k] = coupling_mass[k + 1] + Scalar(2) * row;
      diag_tail[k] = diag_tail[k + 1] + p.quadratic(k, k);
    }
    b = Vector<Scalar>::Zero(n);
    effective = p.linear;
  }

  Scalar bound(Index depth, Scalar fixed_value) const {
    Scalar lb = fixed_value + diag_tail[depth] - coupling_mass[depth];
    for (Index l = depth; l < p.bits(); ++l) lb -= std::abs(effective[l]);
    return lb;
  }

  void dive(Index depth, Scalar fixed_value) {
    if (exhausted) return;
    if (nodes >= budget) {
      exhausted = true;
      return;
    }
    ++nodes;
    const Index n = p.bits();
    if (depth == n) {
      if (better(fixed_value, b, best.objective, best.assignment)) {
        best.objective = fixed_value;
        best.assignment = b;
      }
      return;
    }
    // the sign that lowers the local linear term goes first, -1 on ties
    const Scalar first = effective[depth] > Scalar(0) ? Scalar(-1)
                         : effective[depth] < Scalar(0) ? Scalar(1)
                                                        : Scalar(-1);
    for (const Scalar sign : {first, -first}) {
      b[depth] = sign;
      const Scalar value =
          fixed_value + p.quadratic(depth, depth) + sign * effective[depth];
      for (Index l = depth + 1; l < n; ++l) {
        effective[l] += Scalar(2) * p.quadratic(depth, l) * sign;
      }
      const Scalar lb = bound(depth + 1, value);
      const Scalar tol =
          Scalar(1e-10) * std::max<Scalar>(Scalar(1), std::abs(best.objective));
      if (lb <= best.objective + tol) dive(depth + 1, value);
      for (Index l = depth + 1; l < n; ++l) {
        effective[l] -= Scalar(2) * p.quadratic(depth, l) * sign;
      }
      if (exhausted) break;
    }
    b[depth] = 0;
  }
};

}  // namespace detail

// Depth-first search fixing b_1..b_L. Lower bound at a node:
//   value(prefix) + sum_free Q_ll - sum_free |f_l + 2 sum_fixed Q_il b_i|
//   - sum_{free l != m} |Q_lm|.
// The incumbent starts from DCC. When the node budget runs out the incumbent
// is returned with exact = false.
template <typename Scalar>
Solution<Scalar> solve_branch_and_bound(
    const Problem<Scalar>& p,
    Index budget_nodes = std::numeric_limits<Index>::max()) {
  require(budget_nodes >= 1, "budget_nodes must be >= 1");
  const Index n = p.bits();
  Vector<Scalar> init(n);
  for (Index l = 0; l < n; ++l) init[l] = p.linear[l] > 0 ? Scalar(-1) : Scalar(1);
  const Solution<Scalar> start = solve_dcc(p, init, std::max<Index>(n, 1));

  detail::BranchAndBound<Scalar> search(p, budget_nodes);
  search.best = start;
  search.dive(0, Scalar(0));

  Solution<Scalar> s = search.best;
  s.solver = Solver::branch_and_bound;
  s.exact = !search.exhausted;
  s.nodes = search.nodes;
  s.sweeps = 0;
  s.objective = p.objective(s.assignment);
  return s;
}

template <typename Scalar>
Solution<Scalar> solve(const Problem<Scalar>& p, Solver solver,
                       const Vector<Scalar>& init, Index dcc_sweeps,
                       Index bnb_budget) {
  switch (solver) {
    case Solver::dcc: return solve_dcc(p, init, dcc_sweeps);
    case Solver::exhaustive: return solve_exhaustive(p);
    case Solver::branch_and_bound: return solve_branch_and_bound(p, bnb_budget);
  }
  throw PreconditionError("unknown solver");
}

}  // namespace fsdh::biqp
