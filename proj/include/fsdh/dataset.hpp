#pragma once

#include "fsdh/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>

namespace fsdh {

// Labeled feature vectors, one column per sample.
struct RawDataset {
  Eigen::MatrixXd features;  // D x N
  LabelArray labels;         // N
  int class_count = 0;       // C

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }

  // Throws PreconditionError when the invariants do not hold.
  void validate() const;

  // Exact (bitwise) comparison of shape, values, labels and class count.
  bool operator==(const RawDataset& other) const;
};

enum class Normalization { unit_norm, zero_mean_unit_norm };

Normalization parse_normalization(const std::string& name);
const char* to_string(Normalization mode);

// Reads IDX images (magic 0x00000803) and labels (magic 0x00000801).
// Pixels are divided by 255; C is fixed at 10. `limit` keeps the first
// samples in file order.
RawDataset load_mnist(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path,
                      std::optional<Index> limit = std::nullopt);

// Writes features as IDX unsigned bytes (round(255 * v)) plus the labels.
// Values must lie in [0, 1]; rows * cols must equal the feature dimension.
void write_idx(const RawDataset& dataset, std::uint32_t rows,
               std::uint32_t cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

// One sample per row of comma separated decimals; labels one integer per row.
// When `class_count` is absent it is inferred as max(label) + 1.
RawDataset load_csv(const std::filesystem::path& features_path,
                    const std::filesystem::path& labels_path,
                    std::optional<int> class_count = std::nullopt);

void write_csv(const RawDataset& dataset,
               const std::filesystem::path& features_path,
               const std::filesystem::path& labels_path);

// Gaussian blobs: class k is centered on a standard normal draw and sampled
// with isotropic standard deviation `spread`. Samples are grouped by class.
RawDataset synth_blobs(int classes, Index per_class, Index dim, double spread,
                       std::uint64_t seed);

RawDataset normalize(const RawDataset& dataset, Normalization mode);

// Same as `normalize`, but zero-mean mode subtracts the supplied center
// instead of the dataset's own mean. Used to map queries with the
// database statistics.
RawDataset normalize(const RawDataset& dataset, Normalization mode,
                     const Eigen::VectorXd& center);

Eigen::VectorXd feature_mean(const RawDataset& dataset);

// Random split into (train, test) with `test_count` test samples.
// Both parts keep the original relative order.
std::pair<RawDataset, RawDataset> train_test_split(const RawDataset& dataset,
                                                   Index test_count,
                                                   std::uint64_t seed);

// Reorders samples so labels are non-decreasing (stable within a class).
RawDataset sort_by_label(const RawDataset& dataset);

// Columns selected by index, labels carried along.
RawDataset subset(const RawDataset& dataset, std::span<const Index> ids);

}  // namespace fsdh
