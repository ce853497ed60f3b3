#include "fsdh/fsdh.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fsdh {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'D', 'H'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    static_assert(sizeof(T) == sizeof(U));
    const U bits = std::bit_cast<U>(value);
    for (std::size_t k = 0; k < sizeof(U); ++k) {
      bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
  }

  void put_matrix(const Eigen::MatrixXd& m) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) put(m(i, j));
  }

  void put_raw(const char* data, std::size_t n) {
    bytes_.insert(bytes_.end(), data, data + n);
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t end, std::string name)
      : bytes_(bytes), end_(end), name_(std::move(name)) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) {
      bits |= U(bytes_[pos_ + k]) << (8 * k);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  Eigen::MatrixXd get_matrix(Index rows, Index cols) {
    need(std::size_t(rows * cols) * 8);
    Eigen::MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = get<double>();
    return m;
  }

  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) {
      throw FormatError(name_ + ": truncated model file at byte offset " +
                        std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths
  while (n > 0) {
    const uInt chunk = uInt(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return std::uint32_t(crc);
}

}  // namespace

void save_model(const HashModel& model, const std::filesystem::path& path) {
  model.validate();
  Writer w;
  w.put_raw(kMagic, 4);
  w.put<std::uint32_t>(kModelVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.method));
  w.put<std::uint32_t>(std::uint32_t(model.bits()));
  w.put<std::uint32_t>(std::uint32_t(model.class_codes.classes()));
  w.put<std::uint32_t>(std::uint32_t(model.kernel.anchor_count()));
  w.put<std::uint32_t>(std::uint32_t(model.kernel.source_dim()));
  w.put<double>(model.lambda);
  w.put<double>(model.kernel.sigma);
  w.put<std::uint64_t>(model.trained_on.sample_count);
  w.put<std::uint64_t>(model.trained_on.seed);
  w.put_matrix(model.kernel.anchors);
  w.put_matrix(model.projection);
  const PackedCodes packed = pack(model.class_codes.codes);
  for (std::uint64_t word : packed.words()) w.put<std::uint64_t>(word);
  const std::uint32_t crc = crc_of(w.bytes().data(), w.bytes().size());
  w.put<std::uint32_t>(crc);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            std::streamsize(w.bytes().size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

HashModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  const std::string name = path.string();
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(name + ": bad magic, expected 'FSDH'");
  }
  if (bytes.size() < 12) {
    throw FormatError(name + ": truncated model file at byte offset " +
                      std::to_string(bytes.size()));
  }
  Reader header(bytes, bytes.size(), name);
  header.get<std::uint32_t>();  // magic
  if (const auto version = header.get<std::uint32_t>(); version != kModelVersion) {
    throw FormatError(name + ": unsupported version " + std::to_string(version) +
                      " (this build reads version " +
                      std::to_string(kModelVersion) + ")");
  }
  // everything but the trailing CRC
  Reader r(bytes, bytes.size() - 4, name);
  r.get<std::uint32_t>();
  r.get<std::uint32_t>();
  const auto method = r.get<std::uint32_t>();
  if (method > 1) throw FormatError(name + ": unknown method tag " + std::to_string(method));
  const auto bits = r.get<std::uint32_t>();
  const auto classes = r.get<std::uint32_t>();
  const auto anchors = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();

  HashModel model;
  model.method = static_cast<Method>(method);
  model.lambda = r.get<double>();
  model.kernel.sigma = r.get<double>();
  model.trained_on.sample_count = r.get<std::uint64_t>();
  model.trained_on.seed = r.get<std::uint64_t>();
  model.trained_on.dim = dim;
  model.trained_on.class_count = classes;

  const std::size_t expected =
      64 + 8 * (std::size_t(dim) * anchors + std::size_t(anchors) * bits) +
      8 * std::size_t(words_for_bits(bits)) * classes;
  if (bytes.size() < expected) {
    throw FormatError(name + ": truncated model file (" + std::to_string(bytes.size()) +
                      " bytes, header implies " + std::to_string(expected) + ")");
  }
  const std::uint32_t stored_crc = [&] {
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) v |= std::uint32_t(bytes[bytes.size() - 4 + k]) << (8 * k);
    return v;
  }();
  if (crc_of(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw FormatError(name + ": checksum mismatch");
  }
  if (bytes.size() != expected) {
    throw FormatError(name + ": " + std::to_string(bytes.size() - expected) +
                      " unexpected trailing bytes");
  }

  model.kernel.anchors = r.get_matrix(dim, anchors);
  model.projection = r.get_matrix(anchors, bits);
  PackedCodes packed(bits, classes);
  for (Index c = 0; c < Index(classes); ++c) {
    auto words = packed.mutable_code(c);
    for (auto& word : words) word = r.get<std::uint64_t>();
  }
  model.class_codes.codes = unpack(packed);
  model.validate();
  return model;
}

}  // namespace fsdh
