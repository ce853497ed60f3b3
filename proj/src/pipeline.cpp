#include "fsdh/pipeline.hpp"

#include <chrono>

namespace fsdh {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

RawDataset first_samples(const RawDataset& ds, Index count) {
  if (count <= 0 || count >= ds.size()) return ds;
  std::vector<Index> ids(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) ids[std::size_t(i)] = i;
  return subset(ds, ids);
}

}  // namespace

DataSplit load_data(const RunConfig& config) {
  RawDataset train;
  std::optional<RawDataset> test;
  const std::optional<Index> limit =
      config.train_limit > 0 ? std::optional<Index>(config.train_limit) : std::nullopt;
  switch (config.source) {
    case DataSource::synth: {
      train = synth_blobs(config.synth_classes, config.synth_per_class, config.synth_dim,
                          config.synth_spread, config.data_seed);
      break;
    }
    case DataSource::mnist: {
      train = load_mnist(config.train_data, config.train_labels, limit);
      if (!config.test_data.empty())
        test = load_mnist(config.test_data, config.test_labels, config.test_limit);
      break;
    }
    case DataSource::csv: {
      train = first_samples(load_csv(config.train_data, config.train_labels), config.train_limit);
      if (!config.test_data.empty()) {
        test = first_samples(
            load_csv(config.test_data, config.test_labels, train.class_count),
            config.test_limit);
      }
      break;
    }
  }

  DataSplit split;
  if (test) {
    split.train = std::move(train);
    split.test = std::move(*test);
  } else {
    if (config.test_limit >= train.size()) {
      throw PreconditionError("test_limit " + std::to_string(config.test_limit) +
                              " leaves no training samples out of " +
                              std::to_string(train.size()));
    }
    auto [a, b] = train_test_split(train, config.test_limit, config.data_seed);
    split.train = std::move(a);
    split.test = std::move(b);
    if (config.source == DataSource::synth && limit) {
      split.train = first_samples(split.train, *limit);
    }
  }
  require(split.train.dim() == split.test.dim(),
          "training and test feature dimensions differ");
  const Eigen::VectorXd center = feature_mean(split.train);
  split.train = normalize(split.train, config.normalization, center);
  split.test = normalize(split.test, config.normalization, center);
  return split;
}

SdhOptions sdh_options(const RunConfig& config) {
  SdhOptions o;
  o.bits = config.bits;
  o.lambda = config.lambda;
  o.nu = config.nu;
  o.max_iters = config.iters;
  o.seed = config.seed;
  o.b_step = {config.solver, config.dcc_sweeps, config.bnb_budget};
  o.ridge = Ridge{0.0, config.ridge};
  return o;
}

TrainOutput train_model(const RawDataset& train, const RunConfig& config) {
  train.validate();
  TrainOutput out;
  const auto start = Clock::now();
  HashModel& model = out.model;
  model.method = config.method;
  model.lambda = config.lambda;
  model.kernel = fit_anchors(train, config.anchors, config.sigma, config.kernel_seed);
  out.kernel_features = transform(model.kernel, train.features);
  out.kernel_seconds = since(start);

  const auto solve_start = Clock::now();
  if (config.method == Method::fsdh) {
    FsdhFit fit = train_fsdh(out.kernel_features, train.labels, train.class_count,
                             config.bits, Ridge{0.0, config.ridge}, config.hadamard_cap);
    model.projection = fit.projection;
    model.class_codes = fit.class_codes;
    out.code_seconds = fit.code_seconds;
    out.solve_seconds = fit.solve_seconds;
    out.fsdh = std::move(fit);
  } else {
    auto result = train_sdh(out.kernel_features, train.labels, train.class_count,
                            sdh_options(config));
    model.projection = result.state.projection;
    model.class_codes.codes = result.state.weights.unaryExpr(
        [](double v) { return v >= 0.0 ? 1 : -1; });
    out.solve_seconds = since(solve_start);
    out.sdh = std::move(result);
  }
  model.trained_on = {std::uint64_t(train.size()), std::uint32_t(train.dim()),
                      std::uint32_t(train.class_count), config.kernel_seed};
  out.total_seconds = since(start);
  model.validate();
  return out;
}

EvalReport evaluate_model(const HashModel& model, const RawDataset& database,
                          const RawDataset& queries, int radius, EmptyRetrieval empty) {
  for (const RawDataset* ds : {&database, &queries}) {
    if (ds->dim() != model.kernel.source_dim()) {
      throw PreconditionError("feature dimension " + std::to_string(ds->dim()) +
                              " does not match the model's " +
                              std::to_string(model.kernel.source_dim()));
    }
  }
  if (database.class_count != int(model.trained_on.class_count)) {
    throw PreconditionError("fingerprint mismatch: database has " +
                            std::to_string(database.class_count) +
                            " classes, the model was trained on " +
                            std::to_string(model.trained_on.class_count));
  }
  const CodeIndex index(encode(model, database.features), database.labels);
  return evaluate(index, encode(model, queries.features), queries.labels, radius, empty);
}

}  // namespace fsdh
