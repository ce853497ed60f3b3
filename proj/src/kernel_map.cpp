#include "fsdh/kernel_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fsdh {

bool KernelMap::operator==(const KernelMap& other) const {
  return sigma == other.sigma && anchors.rows() == other.anchors.rows() &&
         anchors.cols() == other.anchors.cols() && anchors == other.anchors;
}

std::vector<Index> sample_anchor_indices(Index sample_count, Index anchor_count,
                                         std::uint64_t seed) {
  require(anchor_count >= 1, "anchor count must be positive");
  if (anchor_count > sample_count) {
    throw PreconditionError("anchor count " + std::to_string(anchor_count) +
                            " exceeds sample count " +
                            std::to_string(sample_count));
  }
  std::vector<Index> all(static_cast<std::size_t>(sample_count));
  std::iota(all.begin(), all.end(), Index(0));
  std::vector<Index> picked;
  picked.reserve(std::size_t(anchor_count));
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), anchor_count,
              rng);
  return picked;
}

KernelMap fit_anchors(const RawDataset& dataset, Index anchor_count,
                      double sigma, std::uint64_t seed) {
  require(sigma > 0.0, "kernel sigma must be positive");
  const auto ids = sample_anchor_indices(dataset.size(), anchor_count, seed);
  KernelMap map;
  map.sigma = sigma;
  map.anchors.resize(dataset.dim(), anchor_count);
  for (std::size_t m = 0; m < ids.size(); ++m) {
    map.anchors.col(Index(m)) = dataset.features.col(ids[m]);
  }
  return map;
}

Eigen::MatrixXd transform(const KernelMap& map, const Eigen::MatrixXd& samples) {
  if (samples.rows() != map.source_dim()) {
    throw PreconditionError("sample dimension " + std::to_string(samples.rows()) +
                            " does not match kernel dimension " +
                            std::to_string(map.source_dim()));
  }
  const Eigen::VectorXd anchor_sq = map.anchors.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd sample_sq = samples.colwise().squaredNorm();

  // |x - a|^2 = |x|^2 + |a|^2 - 2 a.x; the expansion loses the exact zero for
  // coincident points, so tiny distances are recomputed directly.
  Eigen::MatrixXd out = -2.0 * (map.anchors.transpose() * samples);
  out.colwise() += anchor_sq;
  out.rowwise() += sample_sq;
  const double inv_sigma = 1.0 / map.sigma;
  for (Index k = 0; k < out.cols(); ++k) {
    for (Index m = 0; m < out.rows(); ++m) {
      double d = out(m, k);
      if (d <= 1e-6 * (anchor_sq[m] + sample_sq[k])) {
        d = (samples.col(k) - map.anchors.col(m)).squaredNorm();
      }
      out(m, k) = std::exp(-std::max(d, 0.0) * inv_sigma);
    }
  }
  return out;
}

}  // namespace fsdh
