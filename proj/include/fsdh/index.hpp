#pragma once

#include "fsdh/types.hpp"

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

namespace fsdh {

using CodeView = std::span<const std::uint64_t>;

// N binary codes of L bits, ceil(L / 64) words each. Bit j of a code is 1 for
// +1 and 0 for -1; bits past L are always zero.
class PackedCodes {
 public:
  PackedCodes() = default;
  PackedCodes(Index bits, Index count);

  Index bits() const { return bits_; }
  Index count() const { return count_; }
  Index words_per_code() const { return words_; }

  CodeView code(Index i) const {
    return {words_data_.data() + i * words_, std::size_t(words_)};
  }
  std::span<std::uint64_t> mutable_code(Index i) {
    return {words_data_.data() + i * words_, std::size_t(words_)};
  }
  const std::vector<std::uint64_t>& words() const { return words_data_; }

  // +1 / -1 value of bit j of code i.
  int sign(Index i, Index j) const {
    return (code(i)[std::size_t(j / 64)] >> (j % 64)) & 1u ? 1 : -1;
  }

  bool operator==(const PackedCodes&) const = default;

 private:
  Index bits_ = 0;
  Index count_ = 0;
  Index words_ = 0;
  std::vector<std::uint64_t> words_data_;
};

inline Index words_for_bits(Index bits) { return (bits + 63) / 64; }

// Packs the columns of an L x N matrix with entries in {-1, +1}.
template <typename Derived>
PackedCodes pack(const Eigen::MatrixBase<Derived>& expr) {
  const typename Derived::PlainObject signs = expr;
  PackedCodes out(signs.rows(), signs.cols());
  for (Index i = 0; i < signs.cols(); ++i) {
    auto words = out.mutable_code(i);
    for (Index j = 0; j < signs.rows(); ++j) {
      const auto v = signs(j, i);
      if (v == 1) {
        words[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
      } else if (v != -1) {
        throw PreconditionError("pack: entry (" + std::to_string(j) + ", " +
                                std::to_string(i) + ") is not +-1");
      }
    }
  }
  return out;
}

// Packs sgn(values) column-wise with sgn(0) = +1.
template <typename Derived>
PackedCodes pack_signs(const Eigen::MatrixBase<Derived>& expr) {
  const typename Derived::PlainObject values = expr;
  PackedCodes out(values.rows(), values.cols());
  for (Index i = 0; i < values.cols(); ++i) {
    auto words = out.mutable_code(i);
    for (Index j = 0; j < values.rows(); ++j) {
      if (values(j, i) >= 0) words[std::size_t(j / 64)] |= std::uint64_t(1) << (j % 64);
    }
  }
  return out;
}

Eigen::MatrixXi unpack(const PackedCodes& codes);

// Number of differing bits (XOR + popcount per word).
inline int hamming(CodeView a, CodeView b) {
  if (a.size() != b.size()) throw PreconditionError("hamming: code length mismatch");
  int d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

// Bit-length checked variant for codes from two containers.
int hamming(const PackedCodes& a, Index i, const PackedCodes& b, Index j);

// Packed codes with aligned labels.
class CodeIndex {
 public:
  CodeIndex(PackedCodes codes, LabelArray labels);

  const PackedCodes& codes() const { return codes_; }
  const LabelArray& labels() const { return labels_; }
  Index size() const { return codes_.count(); }
  Index bits() const { return codes_.bits(); }

  // Distance from the query to every stored code, in id order.
  std::vector<int> distances(CodeView query) const;

 private:
  PackedCodes codes_;
  LabelArray labels_;
};

struct Neighbor {
  Index id = 0;
  int distance = 0;
  bool operator==(const Neighbor&) const = default;
};

// Every id within `radius`, ordered by (distance, id).
std::vector<Neighbor> radius_search(const CodeIndex& index, CodeView query,
                                    int radius);

// All ids ordered by (distance, id).
std::vector<Index> rank_all(const CodeIndex& index, CodeView query);

}  // namespace fsdh
