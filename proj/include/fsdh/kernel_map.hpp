#pragma once

#include "fsdh/dataset.hpp"

#include <cstdint>
#include <vector>

namespace fsdh {

// RBF anchor map x -> [exp(-|x - a_m|^2 / sigma)]_m. Sigma divides the
// squared distance directly (not 2 sigma^2).
struct KernelMap {
  Eigen::MatrixXd anchors;  // D x M, columns drawn from the training set
  double sigma = 1.0;

  Index source_dim() const { return anchors.rows(); }
  Index anchor_count() const { return anchors.cols(); }

  bool operator==(const KernelMap& other) const;
};

// M distinct indices in [0, N), uniform without replacement, ascending.
std::vector<Index> sample_anchor_indices(Index sample_count, Index anchor_count,
                                         std::uint64_t seed);

KernelMap fit_anchors(const RawDataset& dataset, Index anchor_count,
                      double sigma, std::uint64_t seed);

// M x K kernel features for the D x K samples.
Eigen::MatrixXd transform(const KernelMap& map, const Eigen::MatrixXd& samples);

}  // namespace fsdh
