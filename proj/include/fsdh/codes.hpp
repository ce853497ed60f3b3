#pragma once

#include "fsdh/types.hpp"

#include <bit>
#include <functional>
#include <vector>

namespace fsdh {

inline constexpr Index kDefaultHadamardCap = 4096;

inline bool is_power_of_two(Index n) {
  return n >= 1 && std::has_single_bit(static_cast<std::uint64_t>(n));
}

// Sylvester Hadamard matrix of order L = 2^k (k >= 1):
// H_2 = [[1, 1], [1, -1]], H_2n = [[H_n, H_n], [H_n, -H_n]].
template <typename Scalar = int>
Matrix<Scalar> sylvester(Index order, Index cap = kDefaultHadamardCap) {
  if (order < 2 || !is_power_of_two(order)) {
    throw PreconditionError("Hadamard order " + std::to_string(order) +
                            " is not a power of 2 (>= 2)");
  }
  if (order > cap) {
    throw BudgetError("Hadamard order " + std::to_string(order) +
                      " exceeds the cap " + std::to_string(cap));
  }
  Matrix<Scalar> h(order, order);
  h(0, 0) = Scalar(1);
  for (Index n = 1; n < order; n *= 2) {
    h.block(0, n, n, n) = h.block(0, 0, n, n);
    h.block(n, 0, n, n) = h.block(0, 0, n, n);
    h.block(n, n, n, n) = -h.block(0, 0, n, n);
  }
  return h;
}

// One {-1, +1} code per class, stored column-wise (L x C).
struct ClassCodes {
  Eigen::MatrixXi codes;

  Index bits() const { return codes.rows(); }
  Index classes() const { return codes.cols(); }

  bool operator==(const ClassCodes& other) const {
    return codes.rows() == other.codes.rows() &&
           codes.cols() == other.codes.cols() && codes == other.codes;
  }
};

// Entries in {-1, +1}, pairwise orthogonal columns with squared norm L.
bool is_orthogonal_code_set(const ClassCodes& codes);

// The first C columns of the Hadamard matrix.
ClassCodes pick_class_codes(const Eigen::MatrixXi& hadamard, Index classes);

// L x N matrix whose column i is the code of labels[i].
template <typename Scalar = double>
Matrix<Scalar> expand_codes(const ClassCodes& class_codes,
                            const LabelArray& labels) {
  Matrix<Scalar> out(class_codes.bits(), labels.size());
  for (Index i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < class_codes.classes(),
            "label out of range for the class codes");
    out.col(i) = class_codes.codes.col(labels[i]).template cast<Scalar>();
  }
  return out;
}

// min_W |I - W^T B'|^2 + lambda |W|^2 for a fixed L x C code matrix, solved
// with an explicit W (ridge solve, or least squares when lambda == 0).
double class_code_objective(const Eigen::MatrixXd& codes, double lambda);

struct OracleResult {
  double brute_force_value = 0.0;
  // sum_i lambda / (sigma_i + lambda) with sigma_i = L, i.e. C lambda / (L + lambda).
  double analytic_value = 0.0;
  // L / (L + lambda), the alternative closed form, kept for comparison.
  double corollary_value = 0.0;
  // First minimizer in enumeration order.
  Eigen::MatrixXi optimal_codes;
  // Every minimizer within `tie_tolerance` of the minimum.
  std::vector<Eigen::MatrixXi> minimizers;
  // Objective of the first C Hadamard columns.
  double hadamard_value = 0.0;
  Index enumerated = 0;
};

struct OracleOptions {
  Index max_entries = 20;  // enumeration covers 2^(L C) matrices
  double tie_tolerance = 1e-9;
};

// Enumerates every B' in {-1, 1}^{L x C}. Requires L * C <= max_entries.
OracleResult fsdh_objective_oracle(Index bits, Index classes, double lambda,
                                   const OracleOptions& options = {});

struct AllocationResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  Index evaluated = 0;
};

// Grid search of sum_i cost(x_i) over {x_i >= 0, sum x_i = total} with
// x_i = k_i * step. `parts` up to 4 and total / step up to 2000.
AllocationResult allocation_grid_search(
    const std::function<double(double)>& cost, Index parts, double total,
    double step);

}  // namespace fsdh
