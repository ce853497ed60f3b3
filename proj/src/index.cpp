#include "fsdh/index.hpp"

#include <algorithm>

namespace fsdh {

PackedCodes::PackedCodes(Index bits, Index count)
    : bits_(bits), count_(count), words_(words_for_bits(bits)) {
  require(bits >= 0 && count >= 0, "negative code dimensions");
  words_data_.assign(std::size_t(words_ * count), 0);
}

Eigen::MatrixXi unpack(const PackedCodes& codes) {
  Eigen::MatrixXi out(codes.bits(), codes.count());
  for (Index i = 0; i < codes.count(); ++i)
    for (Index j = 0; j < codes.bits(); ++j) out(j, i) = codes.sign(i, j);
  return out;
}

int hamming(const PackedCodes& a, Index i, const PackedCodes& b, Index j) {
  if (a.bits() != b.bits()) {
    throw PreconditionError("hamming: " + std::to_string(a.bits()) + "-bit vs " +
                            std::to_string(b.bits()) + "-bit codes");
  }
  return hamming(a.code(i), b.code(j));
}

CodeIndex::CodeIndex(PackedCodes codes, LabelArray labels)
    : codes_(std::move(codes)), labels_(std::move(labels)) {
  require(codes_.count() == labels_.size(), "index: code and label counts differ");
}

std::vector<int> CodeIndex::distances(CodeView query) const {
  if (Index(query.size()) != codes_.words_per_code()) {
    throw PreconditionError("query code length does not match the index");
  }
  std::vector<int> out(static_cast<std::size_t>(size()));
  const std::size_t words = query.size();
  const std::uint64_t* data = codes_.words().data();
  for (Index i = 0; i < size(); ++i) {
    int d = 0;
    const std::uint64_t* c = data + std::size_t(i) * words;
    for (std::size_t w = 0; w < words; ++w) d += std::popcount(c[w] ^ query[w]);
    out[std::size_t(i)] = d;
  }
  return out;
}

std::vector<Neighbor> radius_search(const CodeIndex& index, CodeView query,
                                    int radius) {
  require(radius >= 0, "radius must be non-negative");
  const std::vector<int> dist = index.distances(query);
  std::vector<Neighbor> hits;
  for (Index i = 0; i < index.size(); ++i) {
    if (dist[std::size_t(i)] <= radius) hits.push_back({i, dist[std::size_t(i)]});
  }
  // ids are already ascending, so a stable sort on distance gives (distance, id)
  std::stable_sort(hits.begin(), hits.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance;
  });
  return hits;
}

std::vector<Index> rank_all(const CodeIndex& index, CodeView query) {
  const std::vector<int> dist = index.distances(query);
  // counting sort over distances 0..L, stable in id
  std::vector<Index> start(static_cast<std::size_t>(index.bits() + 2), 0);
  for (int d : dist) ++start[std::size_t(d) + 1];
  for (std::size_t k = 1; k < start.size(); ++k) start[k] += start[k - 1];
  std::vector<Index> order(dist.size());
  for (Index i = 0; i < index.size(); ++i) {
    order[std::size_t(start[std::size_t(dist[std::size_t(i)])]++)] = i;
  }
  return order;
}

}  // namespace fsdh
