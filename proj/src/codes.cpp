#include "fsdh/codes.hpp"

#include <cmath>
#include <limits>

namespace fsdh {

bool is_orthogonal_code_set(const ClassCodes& codes) {
  const Eigen::MatrixXi& b = codes.codes;
  if ((b.array().abs() != 1).any()) return false;
  const Eigen::MatrixXi gram = b.transpose() * b;
  return gram == Eigen::MatrixXi::Identity(b.cols(), b.cols()) * int(b.rows());
}

ClassCodes pick_class_codes(const Eigen::MatrixXi& hadamard, Index classes) {
  require(hadamard.rows() == hadamard.cols(), "Hadamard matrix must be square");
  require(classes >= 1, "class count must be positive");
  if (classes > hadamard.cols()) {
    throw PreconditionError("assumption violated: " + std::to_string(classes) +
                            " classes need at least as many bits, have " +
                            std::to_string(hadamard.cols()));
  }
  return ClassCodes{hadamard.leftCols(classes)};
}

double class_code_objective(const Eigen::MatrixXd& codes, double lambda) {
  require(lambda >= 0.0, "lambda must be non-negative");
  const Index c = codes.cols();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(c, c);
  Eigen::MatrixXd w;
  if (lambda > 0.0) {
    Eigen::MatrixXd lhs = codes * codes.transpose();
    lhs.diagonal().array() += lambda;
    w = lhs.llt().solve(codes);
  } else {
    // min |B^T W - I|, minimum-norm least squares.
    w = codes.transpose().completeOrthogonalDecomposition().solve(identity);
  }
  return (identity - w.transpose() * codes).squaredNorm() +
         lambda * w.squaredNorm();
}

OracleResult fsdh_objective_oracle(Index bits, Index classes, double lambda,
                                   const OracleOptions& options) {
  require(bits >= 1 && classes >= 1, "bits and classes must be positive");
  require(lambda >= 0.0, "lambda must be non-negative");
  const Index entries = bits * classes;
  if (entries > options.max_entries || entries > 62) {
    throw BudgetError("enumeration of 2^" + std::to_string(entries) +
                      " code matrices exceeds the budget of 2^" +
                      std::to_string(options.max_entries));
  }

  OracleResult result;
  result.analytic_value = double(classes) * lambda / (double(bits) + lambda);
  result.corollary_value = double(bits) / (double(bits) + lambda);
  result.brute_force_value = std::numeric_limits<double>::infinity();

  const std::uint64_t total = std::uint64_t(1) << entries;
  std::vector<double> values(total);
  Eigen::MatrixXd b(bits, classes);
  for (std::uint64_t t = 0; t < total; ++t) {
    for (Index e = 0; e < entries; ++e) {
      b(e % bits, e / bits) = ((t >> e) & 1u) ? 1.0 : -1.0;
    }
    values[t] = class_code_objective(b, lambda);
    result.brute_force_value = std::min(result.brute_force_value, values[t]);
  }
  result.enumerated = Index(total);

  for (std::uint64_t t = 0; t < total; ++t) {
    if (values[t] > result.brute_force_value + options.tie_tolerance) continue;
    Eigen::MatrixXi m(bits, classes);
    for (Index e = 0; e < entries; ++e) {
      m(e % bits, e / bits) = ((t >> e) & 1u) ? 1 : -1;
    }
    if (result.minimizers.empty()) result.optimal_codes = m;
    result.minimizers.push_back(std::move(m));
  }

  if (bits >= 2 && is_power_of_two(bits) && classes <= bits) {
    const ClassCodes h = pick_class_codes(sylvester(bits), classes);
    result.hadamard_value = class_code_objective(h.codes.cast<double>(), lambda);
  } else {
    result.hadamard_value = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

namespace {

void enumerate_allocations(const std::function<double(double)>& cost,
                           Index parts, Index units, double step,
                           Eigen::VectorXd& current, Index position,
                           double partial, AllocationResult& best) {
  if (position == parts - 1) {
    current[position] = double(units) * step;
    const double value = partial + cost(current[position]);
    ++best.evaluated;
    if (value < best.value) {
      best.value = value;
      best.argmin = current;
    }
    return;
  }
  for (Index k = 0; k <= units; ++k) {
    current[position] = double(k) * step;
    enumerate_allocations(cost, parts, units - k, step, current, position + 1,
                          partial + cost(current[position]), best);
  }
}

}  // namespace

AllocationResult allocation_grid_search(
    const std::function<double(double)>& cost, Index parts, double total,
    double step) {
  require(parts >= 1, "need at least one part");
  require(step > 0.0 && total >= 0.0, "step must be positive, total >= 0");
  const Index units = Index(std::llround(total / step));
  require(std::abs(double(units) * step - total) <= 1e-9 * std::max(1.0, total),
          "total must be a multiple of the grid step");
  // number of grid points is binom(units + parts - 1, parts - 1)
  double points = 1.0;
  for (Index j = 1; j < parts; ++j) points *= double(units + j) / double(j);
  if (points > 1e7) {
    throw BudgetError("allocation grid has " + std::to_string(points) +
                      " points, over the 1e7 budget");
  }
  AllocationResult best;
  best.value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd current(parts);
  enumerate_allocations(cost, parts, units, step, current, 0, 0.0, best);
  return best;
}

}  // namespace fsdh
