#pragma once

#include "fsdh/codes.hpp"
#include "fsdh/index.hpp"
#include "fsdh/kernel_map.hpp"
#include "fsdh/sdh.hpp"

#include <cstdint>
#include <filesystem>

namespace fsdh {

enum class Method : std::uint32_t { fsdh = 0, sdh = 1 };

Method parse_method(const std::string& name);
const char* to_string(Method method);

// Identifies the training data a model was fit on.
struct Fingerprint {
  std::uint64_t sample_count = 0;
  std::uint32_t dim = 0;
  std::uint32_t class_count = 0;
  std::uint64_t seed = 0;

  bool operator==(const Fingerprint&) const = default;
};

// Trained hash function x -> sgn(P^T phi(x)) together with its class codes.
// For FSDH the class codes are Hadamard columns; for SDH they are the
// per-class representatives sgn(W e_c) of the trained classifier.
struct HashModel {
  Method method = Method::fsdh;
  KernelMap kernel;
  Eigen::MatrixXd projection;  // M x L
  ClassCodes class_codes;      // L x C
  double lambda = 1.0;
  Fingerprint trained_on;

  Index bits() const { return projection.cols(); }

  // Throws PreconditionError when dimensions or code invariants do not hold.
  void validate() const;

  bool operator==(const HashModel& other) const;
};

struct FsdhFit {
  Eigen::MatrixXd projection;  // P, M x L
  ClassCodes class_codes;      // B', L x C
  // wall-clock seconds of the two stages
  double code_seconds = 0.0;
  double solve_seconds = 0.0;
};

// Closed-form training on kernel features X (M x N):
// B' = first C Hadamard columns, B = B'[labels], P = (X X^T + jitter I)^{-1} X B^T.
FsdhFit train_fsdh(const Eigen::MatrixXd& features, const LabelArray& labels,
                   int classes, Index bits, const Ridge& ridge = {},
                   Index hadamard_cap = kDefaultHadamardCap);

// W = B' / (L + lambda), the exact ridge classifier for one sample per class.
Eigen::MatrixXd optimal_weights(const ClassCodes& class_codes, double lambda);

// Packed sgn(P^T x) for kernel features (M x K); sgn(0) = +1.
PackedCodes encode_features(const Eigen::MatrixXd& projection,
                            const Eigen::MatrixXd& kernel_features);

// Packed codes for raw samples (D x K).
PackedCodes encode(const HashModel& model, const Eigen::MatrixXd& raw_samples);

// Model file: "FSDH", u32 version, u32 method, u32 L, C, M, D, f64 lambda,
// sigma, u64 sample count, seed, anchors (D x M f64, column-major),
// P (M x L f64, column-major), class codes packed in 64-bit words,
// trailing CRC32 of everything before it. Little-endian throughout.
inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const HashModel& model, const std::filesystem::path& path);
HashModel load_model(const std::filesystem::path& path);

}  // namespace fsdh
