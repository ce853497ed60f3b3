#pragma once

#include "fsdh/config.hpp"
#include "fsdh/eval.hpp"
#include "fsdh/fsdh.hpp"

#include <optional>

namespace fsdh {

// Normalized database (training) and query sets.
struct DataSplit {
  RawDataset train;
  RawDataset test;
};

// Loads the configured source. Without explicit test files the queries are a
// seeded split of `test_limit` samples. Zero-mean mode centers both sets with
// the training mean.
DataSplit load_data(const RunConfig& config);

struct TrainOutput {
  HashModel model;
  double kernel_seconds = 0.0;  // anchor sampling + kernel transform
  double code_seconds = 0.0;    // FSDH: Hadamard codes; SDH: 0
  double solve_seconds = 0.0;   // FSDH: projection solve; SDH: all iterations
  double total_seconds = 0.0;
  Eigen::MatrixXd kernel_features;  // X of the training set, M x N
  std::optional<SdhResult<double>> sdh;
  std::optional<FsdhFit> fsdh;
};

// Kernel map plus the configured method. SDH models keep sgn(W e_c) as the
// class codes.
TrainOutput train_model(const RawDataset& train, const RunConfig& config);

SdhOptions sdh_options(const RunConfig& config);

// Encodes both sets with the model and evaluates queries against the database.
EvalReport evaluate_model(const HashModel& model, const RawDataset& database,
                          const RawDataset& queries, int radius,
                          EmptyRetrieval empty = EmptyRetrieval::zero);

}  // namespace fsdh
