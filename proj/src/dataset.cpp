#include "fsdh/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <vector>

namespace fsdh {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class IdxReader {
 public:
  IdxReader(std::vector<std::uint8_t> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (std::uint32_t(bytes_[pos_]) << 24) |
                      (std::uint32_t(bytes_[pos_ + 1]) << 16) |
                      (std::uint32_t(bytes_[pos_ + 2]) << 8) |
                      std::uint32_t(bytes_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t offset() const { return pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError(name_ + ": " + what + " at byte offset " +
                      std::to_string(at));
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      fail("truncated file (need " + std::to_string(n) + " bytes, have " +
               std::to_string(bytes_.size() - pos_) + ")",
           pos_);
    }
  }

  std::vector<std::uint8_t> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void put_u32_be(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
  out.write(b, 4);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view cell, const std::string& where) {
  cell = trim(cell);
  T value{};
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty()) {
    throw FormatError(where + ": non-numeric cell '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

bool RawDataset::operator==(const RawDataset& other) const {
  return class_count == other.class_count &&
         features.rows() == other.features.rows() &&
         features.cols() == other.features.cols() &&
         labels.size() == other.labels.size() && features == other.features &&
         labels == other.labels;
}

void RawDataset::validate() const {
  require(class_count >= 1, "class count must be positive");
  require(size() >= 1, "dataset has no samples");
  require(labels.size() == size(), "label count does not match sample count");
  for (Index i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < class_count,
            "label out of range at sample " + std::to_string(i));
  }
  require(features.allFinite(), "features contain non-finite values");
}

Normalization parse_normalization(const std::string& name) {
  if (name == "unit_norm") return Normalization::unit_norm;
  if (name == "zero_mean_unit_norm") return Normalization::zero_mean_unit_norm;
  throw PreconditionError("unknown normalization '" + name + "'");
}

const char* to_string(Normalization mode) {
  return mode == Normalization::unit_norm ? "unit_norm" : "zero_mean_unit_norm";
}

RawDataset load_mnist(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path,
                      std::optional<Index> limit) {
  if (limit && *limit <= 0) throw PreconditionError("empty dataset requested");

  IdxReader images(read_file(images_path), images_path.string());
  if (std::uint32_t magic = images.u32(); magic != kIdxImagesMagic) {
    images.fail("bad magic number " + std::to_string(magic) +
                    " (expected 2051 for IDX images)",
                0);
  }
  const std::uint32_t image_count = images.u32();
  const std::uint32_t rows = images.u32();
  const std::uint32_t cols = images.u32();

  IdxReader labels(read_file(labels_path), labels_path.string());
  if (std::uint32_t magic = labels.u32(); magic != kIdxLabelsMagic) {
    labels.fail("bad magic number " + std::to_string(magic) +
                    " (expected 2049 for IDX labels)",
                0);
  }
  const std::uint32_t label_count = labels.u32();
  if (label_count != image_count) {
    labels.fail("count mismatch: " + std::to_string(label_count) +
                    " labels for " + std::to_string(image_count) + " images",
                4);
  }

  Index n = image_count;
  if (limit) n = std::min<Index>(n, *limit);
  if (n == 0) throw PreconditionError("empty dataset requested");

  const Index dim = Index(rows) * Index(cols);
  RawDataset out;
  out.class_count = 10;
  out.features.resize(dim, n);
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const std::uint8_t* px = images.take(std::size_t(dim));
    for (Index d = 0; d < dim; ++d) out.features(d, i) = px[d] / 255.0;
  }
  for (Index i = 0; i < n; ++i) {
    const std::size_t at = labels.offset();
    const std::uint8_t y = *labels.take(1);
    if (y >= 10) labels.fail("label " + std::to_string(y) + " outside 0-9", at);
    out.labels[i] = y;
  }
  return out;
}

void write_idx(const RawDataset& dataset, std::uint32_t rows,
               std::uint32_t cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  require(Index(rows) * Index(cols) == dataset.dim(),
          "rows * cols must equal the feature dimension");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw FormatError("cannot open IDX output files");
  put_u32_be(img, kIdxImagesMagic);
  put_u32_be(img, std::uint32_t(dataset.size()));
  put_u32_be(img, rows);
  put_u32_be(img, cols);
  std::vector<char> buf(static_cast<std::size_t>(dataset.dim()));
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index d = 0; d < dataset.dim(); ++d) {
      const double v = dataset.features(d, i);
      require(v >= 0.0 && v <= 1.0, "IDX pixels must lie in [0, 1]");
      buf[std::size_t(d)] = char(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
    img.write(buf.data(), std::streamsize(buf.size()));
  }
  put_u32_be(lab, kIdxLabelsMagic);
  put_u32_be(lab, std::uint32_t(dataset.size()));
  for (Index i = 0; i < dataset.size(); ++i) {
    require(dataset.labels[i] >= 0 && dataset.labels[i] < 256,
            "IDX labels must fit in a byte");
    lab.put(char(static_cast<std::uint8_t>(dataset.labels[i])));
  }
}

RawDataset load_csv(const std::filesystem::path& features_path,
                    const std::filesystem::path& labels_path,
                    std::optional<int> class_count) {
  std::ifstream fin(features_path);
  if (!fin) throw FormatError("cannot open " + features_path.string());
  std::vector<double> values;
  Index dim = -1;
  Index rows = 0;
  std::string line;
  while (std::getline(fin, line)) {
    if (trim(line).empty()) continue;
    ++rows;
    const std::string where =
        features_path.string() + " row " + std::to_string(rows);
    Index cells = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_number<double>(rest.substr(0, comma), where));
      ++cells;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (dim < 0) dim = cells;
    if (cells != dim) {
      throw FormatError(where + ": ragged row with " + std::to_string(cells) +
                        " columns, expected " + std::to_string(dim));
    }
  }
  if (rows == 0) throw FormatError(features_path.string() + ": no samples");

  std::ifstream lin(labels_path);
  if (!lin) throw FormatError("cannot open " + labels_path.string());
  std::vector<int> labels;
  while (std::getline(lin, line)) {
    if (trim(line).empty()) continue;
    labels.push_back(parse_number<int>(
        line, labels_path.string() + " row " + std::to_string(labels.size() + 1)));
  }
  if (Index(labels.size()) != rows) {
    throw FormatError("row count mismatch: " + std::to_string(rows) +
                      " feature rows vs " + std::to_string(labels.size()) +
                      " labels");
  }

  RawDataset out;
  out.features = Eigen::Map<const Eigen::MatrixXd>(values.data(), dim, rows);
  out.labels = Eigen::Map<const LabelArray>(labels.data(), rows);
  out.class_count = class_count.value_or(
      std::max(1, *std::max_element(labels.begin(), labels.end()) + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= out.class_count) {
      throw FormatError("label out of range: " + std::to_string(labels[i]) +
                        " at row " + std::to_string(i + 1) + " (classes " +
                        std::to_string(out.class_count) + ")");
    }
  }
  if (!out.features.allFinite()) {
    throw FormatError(features_path.string() + ": non-finite value");
  }
  return out;
}

void write_csv(const RawDataset& dataset,
               const std::filesystem::path& features_path,
               const std::filesystem::path& labels_path) {
  std::ofstream fout(features_path);
  std::ofstream lout(labels_path);
  if (!fout || !lout) throw FormatError("cannot open CSV output files");
  fout.precision(17);
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index d = 0; d < dataset.dim(); ++d) {
      if (d) fout << ',';
      fout << dataset.features(d, i);
    }
    fout << '\n';
    lout << dataset.labels[i] << '\n';
  }
}

RawDataset synth_blobs(int classes, Index per_class, Index dim, double spread,
                       std::uint64_t seed) {
  require(classes >= 1 && per_class >= 1 && dim >= 1,
          "synth_blobs needs classes, per_class and dim >= 1");
  require(spread >= 0.0, "spread must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd centers(dim, classes);
  for (Index k = 0; k < classes; ++k)
    for (Index d = 0; d < dim; ++d) centers(d, k) = normal(rng);

  RawDataset out;
  out.class_count = classes;
  out.features.resize(dim, classes * per_class);
  out.labels.resize(classes * per_class);
  Index col = 0;
  for (int k = 0; k < classes; ++k) {
    for (Index j = 0; j < per_class; ++j, ++col) {
      for (Index d = 0; d < dim; ++d) {
        out.features(d, col) = centers(d, k) + spread * normal(rng);
      }
      out.labels[col] = k;
    }
  }
  return out;
}

Eigen::VectorXd feature_mean(const RawDataset& dataset) {
  return dataset.features.rowwise().mean();
}

RawDataset normalize(const RawDataset& dataset, Normalization mode) {
  if (mode == Normalization::unit_norm) {
    return normalize(dataset, mode, Eigen::VectorXd::Zero(dataset.dim()));
  }
  return normalize(dataset, mode, feature_mean(dataset));
}

RawDataset normalize(const RawDataset& dataset, Normalization mode,
                     const Eigen::VectorXd& center) {
  require(center.size() == dataset.dim(), "center dimension mismatch");
  RawDataset out = dataset;
  if (mode == Normalization::zero_mean_unit_norm) {
    out.features.colwise() -= center;
  }
  for (Index i = 0; i < out.size(); ++i) {
    const double norm = out.features.col(i).norm();
    if (!(norm > 0.0)) {
      throw PreconditionError("zero-norm sample at column " + std::to_string(i));
    }
    out.features.col(i) /= norm;
  }
  return out;
}

RawDataset subset(const RawDataset& dataset, std::span<const Index> ids) {
  RawDataset out;
  out.class_count = dataset.class_count;
  out.features.resize(dataset.dim(), Index(ids.size()));
  out.labels.resize(Index(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    require(ids[j] >= 0 && ids[j] < dataset.size(), "sample index out of range");
    out.features.col(Index(j)) = dataset.features.col(ids[j]);
    out.labels[Index(j)] = dataset.labels[ids[j]];
  }
  return out;
}

std::pair<RawDataset, RawDataset> train_test_split(const RawDataset& dataset,
                                                   Index test_count,
                                                   std::uint64_t seed) {
  require(test_count >= 0 && test_count < dataset.size(),
          "test count must be in [0, N)");
  std::vector<Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> test(order.begin(), order.begin() + test_count);
  std::vector<Index> train(order.begin() + test_count, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {subset(dataset, train), subset(dataset, test)};
}

RawDataset sort_by_label(const RawDataset& dataset) {
  std::vector<Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return dataset.labels[a] < dataset.labels[b];
  });
  return subset(dataset, order);
}

}  // namespace fsdh
