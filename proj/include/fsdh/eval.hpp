#pragma once

#include "fsdh/fsdh.hpp"
#include "fsdh/index.hpp"
#include "fsdh/sdh.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace fsdh {

// How a query that retrieves nothing within the radius is scored.
enum class EmptyRetrieval {
  zero,  // precision 0 (default)
  skip,  // excluded from the precision mean
};

EmptyRetrieval parse_empty_retrieval(const std::string& name);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  Index queries_with_hits = 0;
};

// Mean precision and recall of radius search over the queries.
PrecisionRecall precision_recall_at_radius(
    const CodeIndex& index, const PackedCodes& queries,
    const LabelArray& query_labels, int radius,
    EmptyRetrieval empty = EmptyRetrieval::zero);

// Mean over queries of AP_q = (1/R_q) sum_{relevant rank k} hits(k) / k on the
// full Hamming ranking (ties broken by id).
double mean_average_precision(const CodeIndex& index, const PackedCodes& queries,
                              const LabelArray& query_labels);

// Average precision of a single query from its relevance flags in rank order.
double average_precision(const std::vector<bool>& relevant_in_rank_order);

struct PrPoint {
  int threshold = 0;
  double recall = 0.0;
  double precision = 0.0;
};

// One averaged point per Hamming threshold t = 0..L.
std::vector<PrPoint> pr_curve(const CodeIndex& index, const PackedCodes& queries,
                              const LabelArray& query_labels,
                              EmptyRetrieval empty = EmptyRetrieval::zero);

struct QueryDetail {
  Index retrieved = 0;
  Index relevant_retrieved = 0;
  Index relevant_total = 0;
  double average_precision = 0.0;
};

struct EvalReport {
  int radius = 2;
  double precision_at_radius = 0.0;
  double recall_at_radius = 0.0;
  double map = 0.0;
  std::vector<PrPoint> pr_curve;
  std::vector<QueryDetail> per_query;
};

EvalReport evaluate(const CodeIndex& index, const PackedCodes& queries,
                    const LabelArray& query_labels, int radius = 2,
                    EmptyRetrieval empty = EmptyRetrieval::zero);

// metric=value lines.
void write_summary(const EvalReport& report, const std::filesystem::path& path);
void write_pr_curve(const std::vector<PrPoint>& curve,
                    const std::filesystem::path& path);

struct BiasDiagnostics {
  Eigen::MatrixXd projection_matrix;  // K = X^T (X X^T)^{-1} X, N x N
  Eigen::MatrixXd code_gram;          // B^T B, N x N
  double code_trace = 0.0;            // Tr(B^T B)
  double trace_direct = 0.0;          // Tr(B K B^T)
  // L-weighted class-block sums; present only when B is constant per class.
  std::optional<double> trace_grouped;
  double bias_via_trace = 0.0;        // Tr(B^T B) - Tr(B K B^T)
  double bias_direct = 0.0;           // |B - P^T X|^2, P from an exact F-step
};

inline constexpr Index kBiasDiagnosticsMaxSamples = 5000;

// Labels must be sorted by class. X is M x N with M <= N and full row rank.
BiasDiagnostics bias_term_diagnostics(const Eigen::MatrixXd& features,
                                      const Eigen::MatrixXd& codes,
                                      const LabelArray& labels);

void write_grid_csv(const Eigen::MatrixXd& grid, const std::filesystem::path& path);

// W-loss and P-loss of one trained method, with W refit by the exact ridge
// solve on its final codes.
struct MethodLosses {
  double w_loss = 0.0;
  double p_loss = 0.0;
};

MethodLosses method_losses(const Eigen::MatrixXd& codes,
                           const Eigen::MatrixXd& projection,
                           const Eigen::MatrixXd& features,
                           const LabelArray& labels, int classes, double lambda);

struct LossRow {
  Index bits = 0;
  MethodLosses sdh;
  MethodLosses fsdh;
};

// Final codes B (L x N) and projection P (M x L) of a trained method.
struct TrainedCodes {
  Eigen::MatrixXd codes;
  Eigen::MatrixXd projection;
};

LossRow loss_table_row(const TrainedCodes& sdh, const TrainedCodes& fsdh,
                       const Eigen::MatrixXd& features, const LabelArray& labels,
                       int classes, double lambda);

// Compares an SDH run with an FSDH fit trained on the same (X, labels, L).
LossRow loss_table_row(const SdhState<double>& sdh, const FsdhFit& fsdh,
                       const Eigen::MatrixXd& features, const LabelArray& labels,
                       double lambda);

void write_loss_table(const std::vector<LossRow>& rows,
                      const std::filesystem::path& path);

}  // namespace fsdh
