#include "fsdh/kernel_map.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fsdh;

TEST_CASE("anchors with M = N are a permutation of all samples") {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    auto ids = sample_anchor_indices(5, 5, seed);
    CHECK(ids == std::vector<Index>{0, 1, 2, 3, 4});
  }
  const RawDataset ds = synth_blobs(1, 5, 3, 1.0, 4);
  const KernelMap map = fit_anchors(ds, 5, 0.4, 7);
  CHECK(map.anchors == ds.features);
}

TEST_CASE("anchor sampling is deterministic and distinct") {
  const auto a = sample_anchor_indices(1000, 50, 3);
  CHECK(a == sample_anchor_indices(1000, 50, 3));
  CHECK(a != sample_anchor_indices(1000, 50, 4));
  CHECK(std::adjacent_find(a.begin(), a.end(), std::greater_equal<>()) == a.end());
  CHECK(a.front() >= 0);
  CHECK(a.back() < 1000);
  CHECK_THROWS_AS(sample_anchor_indices(4, 5, 0), PreconditionError);
  const RawDataset ds = synth_blobs(1, 5, 3, 1.0, 4);
  CHECK_THROWS_AS(fit_anchors(ds, 2, 0.0, 0), PreconditionError);
}

TEST_CASE("transform analytic values") {
  KernelMap map;
  map.sigma = 0.4;
  map.anchors.resize(2, 2);
  map.anchors << 0.3, -1.0, 0.7, 2.0;

  Eigen::MatrixXd x(2, 2);
  x.col(0) = map.anchors.col(0);
  x.col(1) = map.anchors.col(1) + Eigen::Vector2d(std::sqrt(0.4), 0.0);
  const Eigen::MatrixXd k = transform(map, x);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(1, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(k(1, 1) == doctest::Approx(0.367879).epsilon(1e-6));

  const Eigen::MatrixXd self = transform(map, map.anchors);
  CHECK((self.diagonal().array() == 1.0).all());

  CHECK_THROWS_AS(transform(map, Eigen::MatrixXd::Zero(3, 1)), PreconditionError);
}

TEST_CASE("transform matches a scalar double loop") {
  std::mt19937_64 rng(5);
  KernelMap map;
  map.sigma = 0.7;
  map.anchors = testing::gaussian(3, 6, rng);
  const Eigen::MatrixXd x = testing::gaussian(3, 4, rng);
  const Eigen::MatrixXd k = transform(map, x);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 4);
  for (Index j = 0; j < 4; ++j) {
    for (Index m = 0; m < 6; ++m) {
      double d = 0;
      for (Index r = 0; r < 3; ++r) d += (x(r, j) - map.anchors(r, m)) * (x(r, j) - map.anchors(r, m));
      CHECK(std::abs(k(m, j) - std::exp(-d / 0.7)) < 1e-12);
    }
  }
  CHECK((k.array() > 0.0).all());
  CHECK((k.array() <= 1.0).all());
}

TEST_CASE("kernel values decrease with distance") {
  KernelMap map;
  map.sigma = 0.4;
  map.anchors = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd x(1, 5);
  x << 0.0, 0.1, 0.5, 1.0, 3.0;
  const Eigen::MatrixXd k = transform(map, x);
  for (Index j = 1; j < 5; ++j) CHECK(k(0, j) < k(0, j - 1));
}
