#include "fsdh/eval.hpp"
#include "fsdh/fsdh.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <iterator>

using namespace fsdh;
using Eigen::MatrixXd;
using fsdh::testing::TempDir;

namespace {

HashModel toy_model(std::uint64_t seed = 0) {
  const RawDataset ds = normalize(synth_blobs(4, 20, 6, 0.3, seed), Normalization::unit_norm);
  HashModel model;
  model.kernel = fit_anchors(ds, 16, 0.4, seed);
  const FsdhFit fit = train_fsdh(transform(model.kernel, ds.features), ds.labels, 4, 8);
  model.projection = fit.projection;
  model.class_codes = fit.class_codes;
  model.lambda = 1.0;
  model.trained_on = {std::uint64_t(ds.size()), std::uint32_t(ds.dim()), 4, seed};
  return model;
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size()));
}

std::string load_error(const std::filesystem::path& p) {
  try {
    load_model(p);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("identity features reproduce the class codes") {
  const MatrixXd x = MatrixXd::Identity(2, 2);
  LabelArray labels(2);
  labels << 0, 1;
  const FsdhFit fit = train_fsdh(x, labels, 2, 2, Ridge::none());
  const MatrixXd b = expand_codes(fit.class_codes, labels);
  CHECK((fit.projection - b.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(unpack(encode_features(fit.projection, x)) == b.cast<int>());
}

TEST_CASE("train_fsdh assumptions") {
  const MatrixXd x = MatrixXd::Identity(3, 3);
  LabelArray labels(3);
  labels << 0, 1, 2;
  try {
    train_fsdh(x, labels, 3, 24);
    FAIL("expected an error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("assumption violated") != std::string::npos);
    CHECK(std::string(e.what()).find("power of 2") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(train_fsdh(x, labels, 3, 2), doctest::Contains("exceed"),
                       PreconditionError);
  CHECK_THROWS_AS(train_fsdh(x, labels, 3, 1), PreconditionError);
}

TEST_CASE("train_fsdh is deterministic and matches the direct solve") {
  std::mt19937_64 rng(1);
  const MatrixXd x = testing::gaussian(6, 40, rng);
  LabelArray labels(40);
  for (Index i = 0; i < 40; ++i) labels[i] = int(rng() % 5);
  const FsdhFit a = train_fsdh(x, labels, 5, 16);
  const FsdhFit b = train_fsdh(x, labels, 5, 16);
  CHECK(a.projection == b.projection);
  CHECK(a.class_codes == b.class_codes);
  const MatrixXd bmat = expand_codes(a.class_codes, labels);
  const MatrixXd direct = f_step(x, bmat, Ridge{});
  CHECK((a.projection - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("optimal_weights") {
  const ClassCodes c16 = pick_class_codes(sylvester(16), 10);
  const MatrixXd w = optimal_weights(c16, 1.0);
  CHECK((w.array().abs() == 1.0 / 17.0).all());

  const ClassCodes c8 = pick_class_codes(sylvester(8), 5);
  const MatrixXd b = c8.codes.cast<double>();
  const MatrixXd w0 = optimal_weights(c8, 0.0);
  CHECK(w0 == b / 8.0);
  CHECK(w0.transpose() * b == MatrixXd::Identity(5, 5));

  for (Index bits : {2, 4, 8, 32}) {
    for (double lambda : {0.0, 0.3, 1.0, 7.5}) {
      const ClassCodes cc = pick_class_codes(sylvester(bits), bits / 2 + 1);
      const MatrixXd bc = cc.codes.cast<double>();
      const MatrixXd wc = optimal_weights(cc, lambda);
      const MatrixXd lhs = bc * bc.transpose() + lambda * MatrixXd::Identity(bits, bits);
      CHECK((lhs * wc - bc).norm() < 1e-12);
    }
  }
  CHECK_THROWS_AS(optimal_weights(c8, -1.0), PreconditionError);
}

TEST_CASE("encode agrees with an unpacked sign oracle") {
  const HashModel model = toy_model();
  std::mt19937_64 rng(2);
  const MatrixXd raw = testing::gaussian(6, 100, rng);
  const PackedCodes codes = encode(model, raw);
  const MatrixXd projected = model.projection.transpose() * transform(model.kernel, raw);
  for (Index k = 0; k < 100; ++k)
    for (Index j = 0; j < model.bits(); ++j)
      CHECK(codes.sign(k, j) == (projected(j, k) >= 0 ? 1 : -1));

  MatrixXd twins(6, 2);
  twins.col(0) = raw.col(0);
  twins.col(1) = raw.col(0);
  const PackedCodes t = encode(model, twins);
  CHECK(hamming(t.code(0), t.code(1)) == 0);
  CHECK_THROWS_AS(encode(model, MatrixXd::Zero(5, 1)), PreconditionError);
}

TEST_CASE("self-retrieval on synthetic blobs") {
  const RawDataset ds = normalize(synth_blobs(10, 100, 16, 0.3, 1), Normalization::unit_norm);
  const KernelMap map = fit_anchors(ds, 64, 0.4, 1);
  const MatrixXd x = transform(map, ds.features);
  const FsdhFit fit = train_fsdh(x, ds.labels, 10, 32);
  const PackedCodes codes = encode_features(fit.projection, x);
  const CodeIndex index(codes, ds.labels);
  const PrecisionRecall pr = precision_recall_at_radius(index, codes, ds.labels, 2);
  CHECK(pr.precision > 0.95);
}

TEST_CASE("model validation") {
  HashModel m = toy_model();
  CHECK_NOTHROW(m.validate());
  HashModel bad = m;
  bad.class_codes.codes(0, 1) *= -1;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = m;
  bad.trained_on.dim = 7;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = m;
  bad.projection = MatrixXd::Zero(3, 8);
  CHECK_THROWS_AS(bad.validate(), PreconditionError);

  HashModel sdh = m;
  sdh.method = Method::sdh;
  sdh.class_codes.codes(0, 1) *= -1;
  CHECK_NOTHROW(sdh.validate());
  CHECK(parse_method("sdh") == Method::sdh);
  CHECK_THROWS_AS(parse_method("ksh"), PreconditionError);
}

TEST_CASE("model save and load round trip") {
  TempDir dir("model");
  for (std::uint64_t seed : {0u, 5u}) {
    HashModel m = toy_model(seed);
    m.lambda = 0.125 * double(seed + 1);
    save_model(m, dir / "m.fsdh");
    const HashModel back = load_model(dir / "m.fsdh");
    CHECK(back == m);
    const MatrixXd probe = m.kernel.anchors;
    CHECK(encode(back, probe) == encode(m, probe));
  }
  HashModel wide = toy_model();
  wide.method = Method::sdh;
  std::mt19937_64 rng(1);
  wide.projection = testing::gaussian(16, 70, rng);
  wide.class_codes.codes = testing::random_signs(70, 4, rng).cast<int>();
  save_model(wide, dir / "w.fsdh");
  CHECK(load_model(dir / "w.fsdh") == wide);
}

TEST_CASE("model file corruption is reported") {
  TempDir dir("corrupt");
  save_model(toy_model(), dir / "m.fsdh");
  const std::vector<char> good = read_bytes(dir / "m.fsdh");
  const std::size_t expected_size =
      64 + 8 * (6 * 16 + 16 * 8) + 8 * 4;
  CHECK(good.size() == expected_size);

  SUBCASE("magic") {
    auto b = good;
    b[0] = 'X';
    write_bytes(dir / "x", b);
    CHECK(load_error(dir / "x").find("expected 'FSDH'") != std::string::npos);
  }
  SUBCASE("version") {
    auto b = good;
    b[4] = 2;
    write_bytes(dir / "x", b);
    CHECK(load_error(dir / "x").find("unsupported version 2") != std::string::npos);
  }
  SUBCASE("truncation") {
    for (std::size_t keep : {std::size_t(2), std::size_t(10), std::size_t(40), good.size() - 9}) {
      write_bytes(dir / "x", std::vector<char>(good.begin(), good.begin() + long(keep)));
      CHECK(load_error(dir / "x").find("truncated") != std::string::npos);
    }
  }
  SUBCASE("payload bit flip") {
    auto b = good;
    b[200] ^= 0x10;
    write_bytes(dir / "x", b);
    CHECK(load_error(dir / "x").find("checksum mismatch") != std::string::npos);
  }
  SUBCASE("trailing bytes") {
    auto b = good;
    b.push_back(0);
    write_bytes(dir / "x", b);
    CHECK_FALSE(load_error(dir / "x").empty());
  }
  SUBCASE("missing file") {
    CHECK_FALSE(load_error(dir / "absent").empty());
  }
}
