#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fsdh {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Class index per sample, values in [0, C).
using LabelArray = Eigen::VectorXi;

// Base of every error raised by the library. The CLI prefixes the stage name.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A linear system that must be solved is singular or indefinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An exhaustive search or grid would exceed its configured size cap.
class BudgetError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw PreconditionError(message);
}

// Number of distinct classes implied by the labels (max + 1), 0 when empty.
inline int implied_class_count(const LabelArray& labels) {
  return labels.size() == 0 ? 0 : labels.maxCoeff() + 1;
}

// C x N one-hot label matrix Y.
template <typename Scalar = double>
Matrix<Scalar> one_hot(const LabelArray& labels, int classes) {
  Matrix<Scalar> y = Matrix<Scalar>::Zero(classes, labels.size());
  for (Index i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "label out of range");
    y(labels[i], i) = Scalar(1);
  }
  return y;
}

}  // namespace fsdh
