#pragma once

#include "fsdh/biqp.hpp"
#include "fsdh/dataset.hpp"
#include "fsdh/eval.hpp"
#include "fsdh/fsdh.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fsdh {

enum class DataSource { mnist, csv, synth };

DataSource parse_data_source(const std::string& name);
const char* to_string(DataSource source);

// Flat run configuration. The text form is one `key = value` per line, with
// `#` starting a comment; see README for the schema.
struct RunConfig {
  // dataset
  DataSource source = DataSource::synth;
  std::filesystem::path train_data;    // IDX images or CSV features
  std::filesystem::path train_labels;
  std::filesystem::path test_data;     // empty: split from the training file
  std::filesystem::path test_labels;
  Index train_limit = 0;               // 0: all samples
  Index test_limit = 1000;
  Normalization normalization = Normalization::unit_norm;
  std::uint64_t data_seed = 0;
  int synth_classes = 10;
  Index synth_per_class = 1000;
  Index synth_dim = 32;
  double synth_spread = 1.0;

  // kernel
  Index anchors = 1000;
  double sigma = 0.4;
  std::uint64_t kernel_seed = 0;

  // training
  Method method = Method::fsdh;
  Index bits = 32;
  double lambda = 1.0;
  double nu = 1e-5;
  Index iters = 5;
  std::uint64_t seed = 0;
  biqp::Solver solver = biqp::Solver::dcc;
  Index dcc_sweeps = 3;
  Index bnb_budget = 1'000'000;
  double ridge = 1e-8;
  Index hadamard_cap = kDefaultHadamardCap;

  // evaluation
  int radius = 2;
  EmptyRetrieval empty_retrieval = EmptyRetrieval::zero;

  // figures and bench
  std::vector<Index> bits_list = {32, 64, 128, 256, 512};
  std::vector<Index> anchors_list = {1000};
  Index repeats = 3;
  Index sdh_max_bits = 128;
  Index fig1_bits = 16;
  int fig1_classes = 10;
  Index fig1_samples = 10;
  Index fig1_seeds = 10;
  Index fig1_iters = 10;
  Index biasmap_samples = 200;

  std::filesystem::path output_dir = "out";

  // Parses one key; throws PreconditionError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  // Throws PreconditionError when a field violates a module precondition.
  void validate() const;

  // Text form that parses back to an equal configuration.
  std::string to_text() const;
};

RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Applies "key=value" overrides in order.
void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments);

}  // namespace fsdh
