#include "fsdh/eval.hpp"

#include <fstream>
#include <iomanip>

namespace fsdh {

namespace {

void check_queries(const CodeIndex& index, const PackedCodes& queries,
                   const LabelArray& query_labels) {
  if (index.size() == 0) throw PreconditionError("empty database");
  require(queries.count() == query_labels.size(),
          "query code and label counts differ");
  require(queries.bits() == index.bits(), "query and database code lengths differ");
}

std::vector<Index> label_counts(const CodeIndex& index) {
  std::vector<Index> counts;
  for (Index i = 0; i < index.size(); ++i) {
    const auto y = std::size_t(index.labels()[i]);
    if (y >= counts.size()) counts.resize(y + 1, 0);
    ++counts[y];
  }
  return counts;
}

Index count_for(const std::vector<Index>& counts, int label) {
  return label >= 0 && std::size_t(label) < counts.size() ? counts[std::size_t(label)] : 0;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << std::setprecision(10);
  return out;
}

}  // namespace

EmptyRetrieval parse_empty_retrieval(const std::string& name) {
  if (name == "zero") return EmptyRetrieval::zero;
  if (name == "skip") return EmptyRetrieval::skip;
  throw PreconditionError("unknown empty-retrieval policy '" + name + "'");
}

PrecisionRecall precision_recall_at_radius(const CodeIndex& index,
                                           const PackedCodes& queries,
                                           const LabelArray& query_labels,
                                           int radius, EmptyRetrieval empty) {
  check_queries(index, queries, query_labels);
  require(radius >= 0, "radius must be non-negative");
  const auto counts = label_counts(index);
  PrecisionRecall out;
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  for (Index q = 0; q < queries.count(); ++q) {
    const std::vector<int> dist = index.distances(queries.code(q));
    Index retrieved = 0;
    Index hits = 0;
    for (Index i = 0; i < index.size(); ++i) {
      if (dist[std::size_t(i)] > radius) continue;
      ++retrieved;
      hits += index.labels()[i] == query_labels[q];
    }
    if (retrieved > 0) {
      ++out.queries_with_hits;
      precision_sum += double(hits) / double(retrieved);
    }
    const Index relevant = count_for(counts, query_labels[q]);
    if (relevant > 0) recall_sum += double(hits) / double(relevant);
  }
  const Index precision_queries =
      empty == EmptyRetrieval::zero ? queries.count() : out.queries_with_hits;
  out.precision = precision_queries > 0 ? precision_sum / double(precision_queries) : 0.0;
  out.recall = queries.count() > 0 ? recall_sum / double(queries.count()) : 0.0;
  return out;
}

double average_precision(const std::vector<bool>& relevant_in_rank_order) {
  Index hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < relevant_in_rank_order.size(); ++k) {
    if (!relevant_in_rank_order[k]) continue;
    ++hits;
    sum += double(hits) / double(k + 1);
  }
  return hits > 0 ? sum / double(hits) : 0.0;
}

namespace {

double query_average_precision(const CodeIndex& index, CodeView query, int label,
                               Index relevant_total) {
  const std::vector<Index> order = rank_all(index, query);
  Index hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size() && hits < relevant_total; ++k) {
    if (index.labels()[order[k]] != label) continue;
    ++hits;
    sum += double(hits) / double(k + 1);
  }
  return sum / double(relevant_total);
}

}  // namespace

double mean_average_precision(const CodeIndex& index, const PackedCodes& queries,
                              const LabelArray& query_labels) {
  check_queries(index, queries, query_labels);
  const auto counts = label_counts(index);
  double sum = 0.0;
  for (Index q = 0; q < queries.count(); ++q) {
    const Index relevant = count_for(counts, query_labels[q]);
    if (relevant == 0) {
      throw PreconditionError("query label " + std::to_string(query_labels[q]) +
                              " is absent from the database");
    }
    sum += query_average_precision(index, queries.code(q), query_labels[q], relevant);
  }
  return queries.count() > 0 ? sum / double(queries.count()) : 0.0;
}

std::vector<PrPoint> pr_curve(const CodeIndex& index, const PackedCodes& queries,
                              const LabelArray& query_labels, EmptyRetrieval empty) {
  check_queries(index, queries, query_labels);
  const auto counts = label_counts(index);
  const int bits = int(index.bits());
  std::vector<double> precision_sum(static_cast<std::size_t>(bits + 1), 0.0);
  std::vector<Index> precision_n(static_cast<std::size_t>(bits + 1), 0);
  std::vector<double> recall_sum(static_cast<std::size_t>(bits + 1), 0.0);
  std::vector<Index> all(static_cast<std::size_t>(bits + 1));
  std::vector<Index> rel(static_cast<std::size_t>(bits + 1));
  for (Index q = 0; q < queries.count(); ++q) {
    const Index relevant = count_for(counts, query_labels[q]);
    if (relevant == 0) {
      throw PreconditionError("query label " + std::to_string(query_labels[q]) +
                              " is absent from the database");
    }
    std::fill(all.begin(), all.end(), 0);
    std::fill(rel.begin(), rel.end(), 0);
    const std::vector<int> dist = index.distances(queries.code(q));
    for (Index i = 0; i < index.size(); ++i) {
      ++all[std::size_t(dist[std::size_t(i)])];
      rel[std::size_t(dist[std::size_t(i)])] += index.labels()[i] == query_labels[q];
    }
    Index cum_all = 0;
    Index cum_rel = 0;
    for (int t = 0; t <= bits; ++t) {
      cum_all += all[std::size_t(t)];
      cum_rel += rel[std::size_t(t)];
      recall_sum[std::size_t(t)] += double(cum_rel) / double(relevant);
      if (cum_all > 0) {
        precision_sum[std::size_t(t)] += double(cum_rel) / double(cum_all);
        ++precision_n[std::size_t(t)];
      } else if (empty == EmptyRetrieval::zero) {
        ++precision_n[std::size_t(t)];
      }
    }
  }
  std::vector<PrPoint> curve;
  for (int t = 0; t <= bits; ++t) {
    const auto k = std::size_t(t);
    curve.push_back({t, queries.count() ? recall_sum[k] / double(queries.count()) : 0.0,
                     precision_n[k] ? precision_sum[k] / double(precision_n[k]) : 0.0});
  }
  return curve;
}

EvalReport evaluate(const CodeIndex& index, const PackedCodes& queries,
                    const LabelArray& query_labels, int radius,
                    EmptyRetrieval empty) {
  EvalReport report;
  report.radius = radius;
  const PrecisionRecall pr =
      precision_recall_at_radius(index, queries, query_labels, radius, empty);
  report.precision_at_radius = pr.precision;
  report.recall_at_radius = pr.recall;
  report.map = mean_average_precision(index, queries, query_labels);
  report.pr_curve = pr_curve(index, queries, query_labels, empty);

  const auto counts = label_counts(index);
  report.per_query.reserve(std::size_t(queries.count()));
  for (Index q = 0; q < queries.count(); ++q) {
    QueryDetail d;
    d.relevant_total = count_for(counts, query_labels[q]);
    const auto hits = radius_search(index, queries.code(q), radius);
    d.retrieved = Index(hits.size());
    for (const auto& h : hits) d.relevant_retrieved += index.labels()[h.id] == query_labels[q];
    d.average_precision =
        query_average_precision(index, queries.code(q), query_labels[q], d.relevant_total);
    report.per_query.push_back(d);
  }
  return report;
}

void write_summary(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "radius=" << report.radius << '\n'
      << "precision_at_radius=" << report.precision_at_radius << '\n'
      << "recall_at_radius=" << report.recall_at_radius << '\n'
      << "map=" << report.map << '\n'
      << "queries=" << report.per_query.size() << '\n';
}

void write_pr_curve(const std::vector<PrPoint>& curve,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "threshold,recall,precision\n";
  for (const auto& p : curve) out << p.threshold << ',' << p.recall << ',' << p.precision << '\n';
}

BiasDiagnostics bias_term_diagnostics(const Eigen::MatrixXd& features,
                                      const Eigen::MatrixXd& codes,
                                      const LabelArray& labels) {
  const Index n = features.cols();
  if (n > kBiasDiagnosticsMaxSamples) {
    throw BudgetError("bias diagnostics materialize N x N grids; N = " +
                      std::to_string(n) + " exceeds " +
                      std::to_string(kBiasDiagnosticsMaxSamples));
  }
  require(codes.cols() == n && labels.size() == n, "N mismatch");
  for (Index i = 1; i < n; ++i) {
    require(labels[i - 1] <= labels[i], "labels must be sorted by class");
  }

  const Eigen::MatrixXd gram = features * features.transpose();
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15)) {
    throw NumericError("X X^T is singular; bias diagnostics need full row rank");
  }
  BiasDiagnostics d;
  d.projection_matrix = features.transpose() * llt.solve(features);
  d.code_gram = codes.transpose() * codes;
  d.code_trace = d.code_gram.trace();
  d.trace_direct = (codes * d.projection_matrix * codes.transpose()).trace();
  d.bias_via_trace = d.code_trace - d.trace_direct;
  const Eigen::MatrixXd projection = llt.solve(features * codes.transpose());
  d.bias_direct = (codes - projection.transpose() * features).squaredNorm();

  // grouped form: Tr(K B^T B K) = sum_i sum_{c,d} (b'_c . b'_d) S_ic S_id with
  // S_ic the sum of K_ij over samples j of class c
  const int classes = n ? labels.maxCoeff() + 1 : 0;
  Eigen::MatrixXd class_codes(codes.rows(), classes);
  std::vector<bool> seen(static_cast<std::size_t>(classes), false);
  bool constant = true;
  for (Index i = 0; i < n && constant; ++i) {
    const auto c = std::size_t(labels[i]);
    if (!seen[c]) {
      class_codes.col(labels[i]) = codes.col(i);
      seen[c] = true;
    } else if (class_codes.col(labels[i]) != codes.col(i)) {
      constant = false;
    }
  }
  if (constant) {
    for (int c = 0; c < classes; ++c)
      if (!seen[std::size_t(c)]) class_codes.col(c).setZero();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n, classes);
    for (Index j = 0; j < n; ++j) sums.col(labels[j]) += d.projection_matrix.col(j);
    const Eigen::MatrixXd class_gram = class_codes.transpose() * class_codes;
    d.trace_grouped = (sums * class_gram * sums.transpose()).trace();
  }
  return d;
}

void write_grid_csv(const Eigen::MatrixXd& grid, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Index i = 0; i < grid.rows(); ++i) {
    for (Index j = 0; j < grid.cols(); ++j) {
      if (j) out << ',';
      out << grid(i, j);
    }
    out << '\n';
  }
}

MethodLosses method_losses(const Eigen::MatrixXd& codes,
                           const Eigen::MatrixXd& projection,
                           const Eigen::MatrixXd& features,
                           const LabelArray& labels, int classes, double lambda) {
  const Eigen::MatrixXd w = w_step(codes, labels, classes, lambda);
  MethodLosses out;
  out.w_loss = (one_hot(labels, classes) - w.transpose() * codes).squaredNorm();
  out.p_loss = (codes - projection.transpose() * features).squaredNorm();
  return out;
}

LossRow loss_table_row(const TrainedCodes& sdh, const TrainedCodes& fsdh,
                       const Eigen::MatrixXd& features, const LabelArray& labels,
                       int classes, double lambda) {
  if (sdh.codes.rows() != fsdh.codes.rows() || sdh.codes.cols() != fsdh.codes.cols() ||
      sdh.projection.rows() != fsdh.projection.rows()) {
    throw PreconditionError("loss table: the two methods were trained on different shapes");
  }
  LossRow row;
  row.bits = sdh.codes.rows();
  row.sdh = method_losses(sdh.codes, sdh.projection, features, labels, classes, lambda);
  row.fsdh = method_losses(fsdh.codes, fsdh.projection, features, labels, classes, lambda);
  return row;
}

LossRow loss_table_row(const SdhState<double>& sdh, const FsdhFit& fsdh,
                       const Eigen::MatrixXd& features, const LabelArray& labels,
                       double lambda) {
  const int classes = int(fsdh.class_codes.classes());
  require(sdh.weights.cols() == classes, "loss table: class counts differ");
  return loss_table_row(TrainedCodes{sdh.codes, sdh.projection},
                        TrainedCodes{expand_codes(fsdh.class_codes, labels), fsdh.projection},
                        features, labels, classes, lambda);
}

void write_loss_table(const std::vector<LossRow>& rows,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "bits,sdh_w_loss,sdh_p_loss,fsdh_w_loss,fsdh_p_loss\n";
  for (const auto& r : rows) {
    out << r.bits << ',' << r.sdh.w_loss << ',' << r.sdh.p_loss << ',' << r.fsdh.w_loss
        << ',' << r.fsdh.p_loss << '\n';
  }
}

}  // namespace fsdh
