#include "fsdh/eval.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <numeric>
#include <set>

using namespace fsdh;
using Eigen::MatrixXd;
using fsdh::testing::TempDir;

namespace {

Eigen::MatrixXi codes_from(std::initializer_list<std::initializer_list<int>> cols, Index bits) {
  Eigen::MatrixXi m(bits, Index(cols.size()));
  Index j = 0;
  for (const auto& c : cols) {
    Index i = 0;
    for (int v : c) m(i++, j) = v;
    ++j;
  }
  return m;
}

LabelArray labels_of(std::initializer_list<int> v) {
  LabelArray y(Index(v.size()));
  Index k = 0;
  for (int x : v) y[k++] = x;
  return y;
}

struct Instance {
  Eigen::MatrixXi db;
  LabelArray db_labels;
  Eigen::MatrixXi queries;
  LabelArray query_labels;
};

Instance random_instance(Index bits, Index n, Index q, int classes, std::mt19937_64& rng) {
  Instance in;
  in.db = testing::random_signs(bits, n, rng).cast<int>();
  in.queries = testing::random_signs(bits, q, rng).cast<int>();
  in.db_labels.resize(n);
  in.query_labels.resize(q);
  for (Index i = 0; i < n; ++i) in.db_labels[i] = int(i % classes);
  for (Index i = 0; i < q; ++i) in.query_labels[i] = int(rng() % classes);
  return in;
}

int dist(const Eigen::MatrixXi& a, Index i, const Eigen::MatrixXi& b, Index j) {
  return int((a.col(i).array() != b.col(j).array()).count());
}

// Set-based precision and recall at a radius, written from the definition.
std::pair<double, double> naive_pr(const Instance& in, int radius) {
  double p = 0, r = 0;
  for (Index q = 0; q < in.queries.cols(); ++q) {
    std::set<Index> retrieved, relevant;
    for (Index i = 0; i < in.db.cols(); ++i) {
      if (dist(in.queries, q, in.db, i) <= radius) retrieved.insert(i);
      if (in.db_labels[i] == in.query_labels[q]) relevant.insert(i);
    }
    Index both = 0;
    for (Index i : retrieved) both += relevant.count(i);
    if (!retrieved.empty()) p += double(both) / double(retrieved.size());
    r += double(both) / double(relevant.size());
  }
  return {p / double(in.queries.cols()), r / double(in.queries.cols())};
}

double naive_map(const Instance& in) {
  double total = 0;
  for (Index q = 0; q < in.queries.cols(); ++q) {
    std::vector<Index> ids(std::size_t(in.db.cols()));
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](Index a, Index b) {
      return dist(in.queries, q, in.db, a) < dist(in.queries, q, in.db, b);
    });
    double hits = 0, sum = 0, relevant = 0;
    for (Index i = 0; i < in.db.cols(); ++i) relevant += in.db_labels[i] == in.query_labels[q];
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (in.db_labels[ids[k]] != in.query_labels[q]) continue;
      hits += 1;
      sum += hits / double(k + 1);
    }
    total += sum / relevant;
  }
  return total / double(in.queries.cols());
}

}  // namespace

TEST_CASE("precision at radius by hand") {
  // query 1111; four items within radius 1, three of class 0; one far item
  const auto db = codes_from({{1, 1, 1, 1}, {1, 1, 1, -1}, {1, 1, -1, 1}, {-1, 1, 1, 1},
                              {-1, -1, -1, -1}}, 4);
  const CodeIndex index(pack(db), labels_of({0, 0, 1, 0, 0}));
  const PackedCodes q = pack(codes_from({{1, 1, 1, 1}}, 4));
  const PrecisionRecall pr = precision_recall_at_radius(index, q, labels_of({0}), 1);
  CHECK(pr.precision == doctest::Approx(0.75));
  CHECK(pr.recall == doctest::Approx(0.75));

  const PrecisionRecall full = precision_recall_at_radius(index, q, labels_of({0}), 4);
  CHECK(full.precision == doctest::Approx(0.8));
  CHECK(full.recall == 1.0);
}

TEST_CASE("empty retrievals are scored zero or skipped") {
  const auto db = codes_from({{1, 1, 1, 1}, {1, 1, 1, -1}}, 4);
  const CodeIndex index(pack(db), labels_of({0, 0}));
  const PackedCodes q = pack(codes_from({{1, 1, 1, 1}, {-1, -1, -1, -1}}, 4));
  const auto zero = precision_recall_at_radius(index, q, labels_of({0, 0}), 0);
  CHECK(zero.precision == doctest::Approx(0.5));
  CHECK(zero.queries_with_hits == 1);
  const auto skip =
      precision_recall_at_radius(index, q, labels_of({0, 0}), 0, EmptyRetrieval::skip);
  CHECK(skip.precision == doctest::Approx(1.0));
  CHECK(parse_empty_retrieval("skip") == EmptyRetrieval::skip);
  CHECK_THROWS_AS(parse_empty_retrieval("ignore"), PreconditionError);
}

TEST_CASE("precision and recall match a set oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_instance(12, 150, 20, 3, rng);
    const CodeIndex index(pack(in.db), in.db_labels);
    for (int radius : {0, 2, 4, 12}) {
      const auto pr = precision_recall_at_radius(index, pack(in.queries), in.query_labels, radius);
      const auto [p, r] = naive_pr(in, radius);
      CHECK(std::abs(pr.precision - p) < 1e-12);
      CHECK(std::abs(pr.recall - r) < 1e-12);
      CHECK(pr.precision >= 0);
      CHECK(pr.precision <= 1);
    }
  }
}

TEST_CASE("evaluation errors") {
  std::mt19937_64 rng(2);
  const Instance in = random_instance(8, 10, 3, 2, rng);
  const CodeIndex empty(PackedCodes(8, 0), LabelArray(0));
  CHECK_THROWS_WITH_AS(precision_recall_at_radius(empty, pack(in.queries), in.query_labels, 2),
                       "empty database", PreconditionError);
  const CodeIndex index(pack(in.db), in.db_labels);
  CHECK_THROWS_AS(mean_average_precision(index, pack(in.queries), labels_of({0, 1, 5})),
                  PreconditionError);
  CHECK_THROWS_AS(pr_curve(index, pack(in.queries), labels_of({0, 1, 5})), PreconditionError);
  CHECK_THROWS_AS(precision_recall_at_radius(index, pack(in.queries), labels_of({0, 1}), 2),
                  PreconditionError);
}

TEST_CASE("average precision by hand") {
  CHECK(average_precision({true, false, true}) == doctest::Approx(5.0 / 6.0));
  CHECK(average_precision({true, true}) == 1.0);
  CHECK(average_precision({false, false}) == 0.0);

  const auto db = codes_from({{1, 1, 1}, {1, 1, -1}, {-1, 1, -1}}, 3);
  const CodeIndex index(pack(db), labels_of({0, 1, 0}));
  const PackedCodes q = pack(codes_from({{1, 1, 1}}, 3));
  CHECK(mean_average_precision(index, q, labels_of({0})) == doctest::Approx(5.0 / 6.0));

  const CodeIndex same(pack(db), labels_of({2, 2, 2}));
  CHECK(mean_average_precision(same, q, labels_of({2})) == 1.0);
}

TEST_CASE("MAP matches the definition oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_instance(10, 200, 15, 4, rng);
    const CodeIndex index(pack(in.db), in.db_labels);
    const double map = mean_average_precision(index, pack(in.queries), in.query_labels);
    CHECK(std::abs(map - naive_map(in)) < 1e-12);
    CHECK(map >= 0);
    CHECK(map <= 1);
  }
}

TEST_CASE("MAP ignores permutations within a label and distance tie") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_instance(6, 120, 1, 3, rng);
    const CodeIndex index(pack(in.db), in.db_labels);
    const PackedCodes q = pack(in.queries);
    const double before = mean_average_precision(index, q, in.query_labels);
    // swap codes of item pairs that share a label and the distance to the query
    Instance moved = in;
    std::vector<bool> used(120, false);
    Index swaps = 0;
    for (Index i = 0; i < 120; ++i) {
      for (Index j = i + 1; j < 120 && !used[std::size_t(i)]; ++j) {
        if (used[std::size_t(j)] || in.db_labels[i] != in.db_labels[j]) continue;
        if (dist(in.queries, 0, in.db, i) != dist(in.queries, 0, in.db, j)) continue;
        moved.db.col(i).swap(moved.db.col(j));
        used[std::size_t(i)] = used[std::size_t(j)] = true;
        ++swaps;
      }
    }
    CHECK(swaps > 10);
    const CodeIndex permuted(pack(moved.db), moved.db_labels);
    CHECK(mean_average_precision(permuted, q, in.query_labels) == before);
  }
}

TEST_CASE("PR curve") {
  // single query 11; items at distances 0, 1, 1, 2 with labels 0, 1, 0, 0
  const auto db = codes_from({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, 2);
  const CodeIndex index(pack(db), labels_of({0, 1, 0, 0}));
  const PackedCodes q = pack(codes_from({{1, 1}}, 2));
  const auto curve = pr_curve(index, q, labels_of({0}));
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].threshold == 0);
  CHECK(curve[0].recall == doctest::Approx(1.0 / 3.0));
  CHECK(curve[0].precision == 1.0);
  CHECK(curve[1].recall == doctest::Approx(2.0 / 3.0));
  CHECK(curve[1].precision == doctest::Approx(2.0 / 3.0));
  CHECK(curve[2].recall == 1.0);
  CHECK(curve[2].precision == doctest::Approx(0.75));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance in = random_instance(16, 100, 10, 3, rng);
    const auto c = pr_curve(CodeIndex(pack(in.db), in.db_labels), pack(in.queries), in.query_labels);
    REQUIRE(c.size() == 17);
    for (std::size_t t = 1; t < c.size(); ++t) CHECK(c[t].recall >= c[t - 1].recall);
    CHECK(c.back().recall == doctest::Approx(1.0));
    for (const auto& p : c) {
      CHECK(p.precision >= 0);
      CHECK(p.precision <= 1);
    }
  }
}

TEST_CASE("evaluate and report files") {
  std::mt19937_64 rng(6);
  const Instance in = random_instance(16, 80, 12, 4, rng);
  const CodeIndex index(pack(in.db), in.db_labels);
  const EvalReport a = evaluate(index, pack(in.queries), in.query_labels, 3);
  const EvalReport b = evaluate(index, pack(in.queries), in.query_labels, 3);
  CHECK(a.map == b.map);
  CHECK(a.precision_at_radius == b.precision_at_radius);
  CHECK(a.per_query.size() == 12);
  double ap = 0;
  for (const auto& d : a.per_query) ap += d.average_precision;
  CHECK(std::abs(ap / 12 - a.map) < 1e-12);

  TempDir dir("report");
  write_summary(a, dir / "summary.txt");
  write_pr_curve(a.pr_curve, dir / "pr.csv");
  std::ifstream s(dir / "summary.txt");
  std::string line;
  std::getline(s, line);
  CHECK(line == "radius=3");
  std::getline(s, line);
  CHECK(line.rfind("precision_at_radius=", 0) == 0);
  std::ifstream pr(dir / "pr.csv");
  Index rows = 0;
  while (std::getline(pr, line)) ++rows;
  CHECK(rows == 18);
}

TEST_CASE("bias term diagnostics") {
  std::mt19937_64 rng(7);
  SUBCASE("orthonormal features give K = I and no bias") {
    const Eigen::HouseholderQR<MatrixXd> qr(testing::gaussian(6, 6, rng));
    const MatrixXd x = qr.householderQ();
    const LabelArray y = labels_of({0, 0, 0, 1, 1, 1});
    const MatrixXd b = testing::random_signs(4, 6, rng);
    const BiasDiagnostics d = bias_term_diagnostics(x, b, y);
    CHECK((d.projection_matrix - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(d.trace_direct == doctest::Approx(24.0));
    CHECK(std::abs(d.bias_via_trace) < 1e-9);
    CHECK(std::abs(d.bias_direct) < 1e-9);
    CHECK_FALSE(d.trace_grouped.has_value());
  }
  SUBCASE("FSDH codes on sorted labels") {
    const ClassCodes cc = pick_class_codes(sylvester(8), 3);
    const LabelArray y = labels_of({0, 0, 1, 1, 1, 2, 2, 2, 2, 2});
    const MatrixXd b = expand_codes(cc, y);
    const MatrixXd x = testing::gaussian(5, 10, rng);
    const BiasDiagnostics d = bias_term_diagnostics(x, b, y);
    for (Index i = 0; i < 10; ++i)
      for (Index j = 0; j < 10; ++j) CHECK(d.code_gram(i, j) == (y[i] == y[j] ? 8.0 : 0.0));
    CHECK(d.code_trace == 80.0);
    REQUIRE(d.trace_grouped.has_value());
    CHECK(std::abs(*d.trace_grouped - d.trace_direct) < 1e-9);
    CHECK(std::abs(d.bias_via_trace - d.bias_direct) < 1e-8 * std::max(1.0, d.bias_direct));
  }
  SUBCASE("random instance identity") {
    const MatrixXd x = testing::gaussian(5, 12, rng);
    const MatrixXd b = testing::random_signs(4, 12, rng);
    const LabelArray y = labels_of({0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
    const BiasDiagnostics d = bias_term_diagnostics(x, b, y);
    CHECK(d.code_trace == 48.0);
    CHECK(std::abs(d.bias_via_trace - d.bias_direct) < 1e-9);
  }
  SUBCASE("errors") {
    const MatrixXd x = testing::gaussian(3, 6, rng);
    const MatrixXd b = testing::random_signs(2, 6, rng);
    CHECK_THROWS_AS(bias_term_diagnostics(x, b, labels_of({1, 0, 0, 1, 1, 1})),
                    PreconditionError);
    const MatrixXd big = MatrixXd::Zero(1, kBiasDiagnosticsMaxSamples + 1);
    CHECK_THROWS_AS(bias_term_diagnostics(big, MatrixXd::Zero(1, big.cols()),
                                          LabelArray::Zero(big.cols())),
                    BudgetError);
    MatrixXd singular = testing::gaussian(3, 6, rng);
    singular.row(2) = singular.row(1);
    CHECK_THROWS_AS(bias_term_diagnostics(singular, b, labels_of({0, 0, 0, 1, 1, 1})),
                    NumericError);
  }
}

TEST_CASE("loss table rows") {
  std::mt19937_64 rng(8);
  const MatrixXd x = testing::gaussian(6, 40, rng);
  LabelArray y(40);
  for (Index i = 0; i < 40; ++i) y[i] = int(i % 4);
  const TrainedCodes t{testing::random_signs(8, 40, rng), testing::gaussian(6, 8, rng)};
  const LossRow same = loss_table_row(t, t, x, y, 4, 1.0);
  CHECK(same.sdh.w_loss == same.fsdh.w_loss);
  CHECK(same.sdh.p_loss == same.fsdh.p_loss);
  CHECK(same.bits == 8);

  const TrainedCodes shorter{testing::random_signs(4, 40, rng), testing::gaussian(6, 4, rng)};
  CHECK_THROWS_AS(loss_table_row(t, shorter, x, y, 4, 1.0), PreconditionError);

  SdhOptions opts;
  opts.bits = 8;
  const auto sdh = train_sdh(x, y, 4, opts);
  const FsdhFit fit = train_fsdh(x, y, 4, 8);
  const LossRow row = loss_table_row(sdh.state, fit, x, y, 1.0);
  const LossRow again = loss_table_row(sdh.state, train_fsdh(x, y, 4, 8), x, y, 1.0);
  CHECK(row.fsdh.w_loss == again.fsdh.w_loss);
  CHECK(row.fsdh.p_loss == again.fsdh.p_loss);
  CHECK(row.fsdh.w_loss <= row.sdh.w_loss + 1e-9);

  TempDir dir("losses");
  write_loss_table({row, same}, dir / "losses.csv");
  std::ifstream in(dir / "losses.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "bits,sdh_w_loss,sdh_p_loss,fsdh_w_loss,fsdh_p_loss");
}
