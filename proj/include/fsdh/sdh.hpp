#pragma once

#include "fsdh/biqp.hpp"
#include "fsdh/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fsdh {

// Tikhonov term added to X X^T before the projection solve:
// jitter = absolute + relative * trace(X X^T) / M.
struct Ridge {
  double absolute = 0.0;
  double relative = 1e-8;

  static Ridge none() { return {0.0, 0.0}; }
};

// Factors X X^T + jitter I once so that P = (X X^T + jitter I)^{-1} X B^T can
// be recomputed for many code matrices B.
template <typename Scalar>
class ProjectionSolver {
 public:
  ProjectionSolver(const Matrix<Scalar>& features, const Ridge& ridge)
      : features_(features) {
    Matrix<Scalar> gram = Matrix<Scalar>::Zero(features.rows(), features.rows());
    gram.template selfadjointView<Eigen::Lower>().rankUpdate(features);
    gram.template triangularView<Eigen::Upper>() = gram.transpose();
    const Index m = features.rows();
    jitter_ = Scalar(ridge.absolute) +
              Scalar(ridge.relative) * gram.trace() / Scalar(std::max<Index>(m, 1));
    gram.diagonal().array() += jitter_;
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success || !(llt_.rcond() > Scalar(1e-15))) {
      throw NumericError(
          "X X^T + jitter I is singular or indefinite; increase the jitter or "
          "use fewer anchors than samples");
    }
  }

  // M x L projection for the L x N code matrix.
  Matrix<Scalar> solve(const Matrix<Scalar>& codes) const {
    require(codes.cols() == features_.cols(), "code count must match sample count");
    return llt_.solve(features_ * codes.transpose());
  }

  // Same solve with a precomputed right-hand side X B^T (M x L).
  Matrix<Scalar> solve_rhs(const Matrix<Scalar>& rhs) const {
    return llt_.solve(rhs);
  }

  Scalar jitter() const { return jitter_; }

 private:
  const Matrix<Scalar>& features_;
  Eigen::LLT<Matrix<Scalar>> llt_;
  Scalar jitter_ = 0;
};

// F-step: P = (X X^T + jitter I)^{-1} X B^T.
template <typename Scalar>
Matrix<Scalar> f_step(const Matrix<Scalar>& features, const Matrix<Scalar>& codes,
                      const Ridge& ridge = {}) {
  return ProjectionSolver<Scalar>(features, ridge).solve(codes);
}

// W-step: W = (B B^T + lambda I)^{-1} B Y^T with Y one-hot.
template <typename Scalar>
Matrix<Scalar> w_step(const Matrix<Scalar>& codes, const LabelArray& labels,
                      int classes, double lambda) {
  require(lambda >= 0.0, "lambda must be non-negative");
  require(codes.cols() == labels.size(), "codes and labels disagree on N");
  const Index l = codes.rows();
  Matrix<Scalar> lhs = Matrix<Scalar>::Zero(l, l);
  lhs.template selfadjointView<Eigen::Lower>().rankUpdate(codes);
  lhs.template triangularView<Eigen::Upper>() = lhs.transpose();
  lhs.diagonal().array() += Scalar(lambda);
  // B Y^T: column c sums the codes of class c
  Matrix<Scalar> rhs = Matrix<Scalar>::Zero(l, classes);
  for (Index i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "label out of range");
    rhs.col(labels[i]) += codes.col(i);
  }
  Eigen::LLT<Matrix<Scalar>> llt(lhs);
  if (llt.info() != Eigen::Success || !(llt.rcond() > Scalar(1e-14))) {
    throw NumericError("B B^T + lambda I is singular; use lambda > 0");
  }
  return llt.solve(rhs);
}

template <typename Scalar>
struct SdhState {
  Matrix<Scalar> codes;       // B, L x N
  Matrix<Scalar> weights;     // W, L x C
  Matrix<Scalar> projection;  // P, M x L
  double lambda = 1.0;
  double nu = 1e-5;
  Index iteration = 0;
};

struct ObjectiveBreakdown {
  double classification_term = 0.0;  // |Y - W^T B|^2  (W-loss)
  double regularizer = 0.0;          // lambda |W|^2
  double bias_term = 0.0;            // nu |B - P^T X|^2
  double p_loss = 0.0;               // |B - P^T X|^2
  double total = 0.0;
};

template <typename Scalar>
ObjectiveBreakdown objective(const SdhState<Scalar>& state,
                             const Matrix<Scalar>& features,
                             const LabelArray& labels) {
  const Index n = state.codes.cols();
  require(labels.size() == n && features.cols() == n, "N mismatch");
  require(state.weights.rows() == state.codes.rows(), "W rows must equal L");
  require(state.projection.rows() == features.rows() &&
              state.projection.cols() == state.codes.rows(),
          "P must be M x L");
  const int classes = int(state.weights.cols());
  ObjectiveBreakdown out;
  const Matrix<Scalar> y = one_hot<Scalar>(labels, classes);
  out.classification_term =
      double((y - state.weights.transpose() * state.codes).squaredNorm());
  out.regularizer = state.lambda * double(state.weights.squaredNorm());
  out.p_loss =
      double((state.codes - state.projection.transpose() * features).squaredNorm());
  out.bias_term = state.nu * out.p_loss;
  out.total = out.classification_term + out.regularizer + out.bias_term;
  return out;
}

struct Magnitudes {
  double classification = 0.0;  // |W Y|^2
  double bias = 0.0;            // nu |P^T X|^2
};

template <typename Scalar>
Magnitudes magnitude_report(const SdhState<Scalar>& state,
                            const Matrix<Scalar>& features,
                            const LabelArray& labels) {
  const Matrix<Scalar> y = one_hot<Scalar>(labels, int(state.weights.cols()));
  Magnitudes m;
  m.classification = double((state.weights * y).squaredNorm());
  m.bias = state.nu == 0.0
               ? 0.0
               : state.nu * double((state.projection.transpose() * features).squaredNorm());
  return m;
}

struct BStepOptions {
  biqp::Solver solver = biqp::Solver::dcc;
  Index dcc_sweeps = 3;
  Index bnb_budget = 1'000'000;
};

template <typename Scalar>
struct BStepResult {
  Matrix<Scalar> codes;
  bool exact = true;
  Index problems_solved = 0;
};

// Column i minimizes (or, for DCC, locally improves from its current value)
// b^T Q b + f_i^T b with Q = W W^T and F = -2 (W Y + nu P^T X).
// With nu = 0 only one problem per class is solved and broadcast; DCC starts
// from the current code of the first sample of that class.
template <typename Scalar>
BStepResult<Scalar> b_step(const SdhState<Scalar>& state,
                           const Matrix<Scalar>& features,
                           const LabelArray& labels,
                           const BStepOptions& options = {}) {
  const Index n = state.codes.cols();
  require(labels.size() == n && features.cols() == n, "N mismatch");
  const int classes = int(state.weights.cols());
  biqp::Problem<Scalar> problem;
  problem.quadratic = state.weights * state.weights.transpose();
  BStepResult<Scalar> out;
  out.codes = state.codes;

  auto run = [&](const Vector<Scalar>& init) {
    auto s = biqp::solve(problem, options.solver, init, options.dcc_sweeps,
                         options.bnb_budget);
    out.exact = out.exact && s.exact;
    ++out.problems_solved;
    return s.assignment;
  };

  if (state.nu == 0.0) {
    std::vector<Index> first(static_cast<std::size_t>(classes), -1);
    for (Index i = 0; i < n; ++i) {
      require(labels[i] >= 0 && labels[i] < classes, "label out of range");
      if (first[std::size_t(labels[i])] < 0) first[std::size_t(labels[i])] = i;
    }
    std::vector<Vector<Scalar>> per_class(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) {
      if (first[std::size_t(c)] < 0) continue;
      problem.linear = Scalar(-2) * state.weights.col(c);
      per_class[std::size_t(c)] = run(state.codes.col(first[std::size_t(c)]));
    }
    for (Index i = 0; i < n; ++i) out.codes.col(i) = per_class[std::size_t(labels[i])];
    return out;
  }

  const Matrix<Scalar> projected = state.projection.transpose() * features;
  for (Index i = 0; i < n; ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "label out of range");
    problem.linear =
        Scalar(-2) * (state.weights.col(labels[i]) + Scalar(state.nu) * projected.col(i));
    out.codes.col(i) = run(state.codes.col(i));
  }
  return out;
}

struct SdhOptions {
  Index bits = 32;
  double lambda = 1.0;
  double nu = 1e-5;
  Index max_iters = 5;
  std::uint64_t seed = 0;
  BStepOptions b_step;
  Ridge ridge;
};

struct StepRecord {
  Index iteration = 0;
  std::string step;  // "F", "W" or "B"
  ObjectiveBreakdown objective;
};

template <typename Scalar>
struct SdhResult {
  SdhState<Scalar> state;
  // Objective after every full F/W/B iteration.
  std::vector<ObjectiveBreakdown> trajectory;
  // Objective after every individual step.
  std::vector<StepRecord> steps;
  bool exact_b_steps = true;
};

// Uniform random {-1, +1} codes from a dedicated seeded generator.
template <typename Scalar>
Matrix<Scalar> random_codes(Index bits, Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix<Scalar> b(bits, count);
  for (Index i = 0; i < count; ++i)
    for (Index l = 0; l < bits; ++l) b(l, i) = (rng() >> 63) ? Scalar(1) : Scalar(-1);
  return b;
}

// Alternating F-step / W-step / B-step from a random start. After the last
// iteration P and W are refit to the final codes so the returned state is
// self-consistent (encoding uses sgn(P^T x)).
template <typename Scalar>
SdhResult<Scalar> train_sdh(const Matrix<Scalar>& features,
                            const LabelArray& labels, int classes,
                            const SdhOptions& options) {
  require(options.bits >= 1, "bits must be >= 1");
  require(options.max_iters >= 1, "max_iters must be >= 1");
  require(options.lambda >= 0.0 && options.nu >= 0.0, "lambda and nu must be >= 0");
  require(features.cols() == labels.size(), "features and labels disagree on N");
  require(classes >= 1, "class count must be positive");

  SdhResult<Scalar> result;
  SdhState<Scalar>& s = result.state;
  s.lambda = options.lambda;
  s.nu = options.nu;
  s.codes = random_codes<Scalar>(options.bits, features.cols(), options.seed);
  s.weights = Matrix<Scalar>::Zero(options.bits, classes);

  const ProjectionSolver<Scalar> projector(features, options.ridge);
  for (Index it = 1; it <= options.max_iters; ++it) {
    s.iteration = it;
    s.projection = projector.solve(s.codes);
    result.steps.push_back({it, "F", objective(s, features, labels)});
    s.weights = w_step(s.codes, labels, classes, options.lambda);
    result.steps.push_back({it, "W", objective(s, features, labels)});
    auto b = b_step(s, features, labels, options.b_step);
    s.codes = std::move(b.codes);
    result.exact_b_steps = result.exact_b_steps && b.exact;
    result.steps.push_back({it, "B", objective(s, features, labels)});
    result.trajectory.push_back(result.steps.back().objective);
  }
  s.projection = projector.solve(s.codes);
  s.weights = w_step(s.codes, labels, classes, options.lambda);
  return result;
}

}  // namespace fsdh
