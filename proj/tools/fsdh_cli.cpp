#include "fsdh/config.hpp"
#include "fsdh/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace fsdh;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// An error tagged with the pipeline stage it came from.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string seconds(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s;
  return os.str();
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Context {
  RunConfig config;
  fs::path out;
};

Context prepare(const std::string& config_path, const std::vector<std::string>& sets,
                const std::string& out_override) {
  return stage("config", [&] {
    Context ctx;
    if (!config_path.empty()) ctx.config = load_config(config_path);
    apply_overrides(ctx.config, sets);
    if (!out_override.empty()) ctx.config.output_dir = out_override;
    ctx.config.validate();
    ctx.out = ctx.config.output_dir;
    fs::create_directories(ctx.out);
    open_out(ctx.out / "config.txt") << ctx.config.to_text();
    return ctx;
  });
}

void write_sdh_trajectory(const SdhResult<double>& result, const fs::path& path) {
  auto out = open_out(path);
  out << "iteration,step,objective,w_loss,regularizer,bias_term,p_loss\n";
  for (const auto& s : result.steps) {
    out << s.iteration << ',' << s.step << ',' << number(s.objective.total) << ','
        << number(s.objective.classification_term) << ','
        << number(s.objective.regularizer) << ',' << number(s.objective.bias_term) << ','
        << number(s.objective.p_loss) << '\n';
  }
}

int cmd_train(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const DataSplit data = stage("dataset", [&] { return load_data(c); });
  const TrainOutput trained = stage("train", [&] { return train_model(data.train, c); });
  stage("save", [&] {
    save_model(trained.model, ctx.out / "model.bin");
    auto log = open_out(ctx.out / "train_log.txt");
    log << "method=" << to_string(c.method) << "\nbits=" << c.bits
        << "\nanchors=" << c.anchors << "\nsamples=" << data.train.size()
        << "\nclasses=" << data.train.class_count
        << "\nkernel_seconds=" << seconds(trained.kernel_seconds)
        << "\ncode_seconds=" << seconds(trained.code_seconds)
        << "\nsolve_seconds=" << seconds(trained.solve_seconds)
        << "\ntrain_seconds=" << seconds(trained.total_seconds) << '\n';
    if (trained.sdh) write_sdh_trajectory(*trained.sdh, ctx.out / "sdh_trajectory.csv");
    return 0;
  });
  std::cout << "model=" << (ctx.out / "model.bin").string() << '\n'
            << "train_seconds=" << seconds(trained.total_seconds) << '\n';
  return 0;
}

int cmd_eval(const Context& ctx, const std::string& model_path) {
  const RunConfig& c = ctx.config;
  const HashModel model = stage("model", [&] { return load_model(model_path); });
  const DataSplit data = stage("dataset", [&] { return load_data(c); });
  const EvalReport report = stage("eval", [&] {
    return evaluate_model(model, data.train, data.test, c.radius, c.empty_retrieval);
  });
  stage("report", [&] {
    write_summary(report, ctx.out / "summary.txt");
    write_pr_curve(report.pr_curve, ctx.out / "pr_curve.csv");
    return 0;
  });
  std::cout << "precision_at_radius=" << number(report.precision_at_radius) << '\n'
            << "recall_at_radius=" << number(report.recall_at_radius) << '\n'
            << "map=" << number(report.map) << '\n';
  return 0;
}

// nu = 0 SDH on random Gaussian X, one trajectory per seed and B-step solver,
// plus the objective of the Hadamard class codes with their optimal W.
int fig1(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const Index n = c.fig1_samples;
  const Index m = std::max<Index>(1, n / 2);
  LabelArray labels(n);
  for (Index i = 0; i < n; ++i) labels[i] = int(i % c.fig1_classes);
  const int classes = int(std::min<Index>(c.fig1_classes, n));

  auto out = open_out(ctx.out / "fig1_final.csv");
  out << "solver,seed,final_objective\n";
  for (Index seed = 0; seed < c.fig1_seeds; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd x(m, n);
    for (Index j = 0; j < n; ++j)
      for (Index r = 0; r < m; ++r) x(r, j) = gauss(rng);
    for (biqp::Solver solver : {biqp::Solver::dcc, biqp::Solver::exhaustive}) {
      SdhOptions o;
      o.bits = c.fig1_bits;
      o.lambda = c.lambda;
      o.nu = 0.0;
      o.max_iters = c.fig1_iters;
      o.seed = std::uint64_t(seed);
      o.b_step = {solver, c.dcc_sweeps, c.bnb_budget};
      const auto result = stage("train", [&] { return train_sdh(x, labels, classes, o); });
      write_sdh_trajectory(result, ctx.out / ("fig1_" + std::string(biqp::to_string(solver)) +
                                              "_seed" + std::to_string(seed) + ".csv"));
      out << biqp::to_string(solver) << ',' << seed << ','
          << number(result.trajectory.back().total) << '\n';
    }
  }

  const double reference = stage("reference", [&] {
    SdhState<double> s;
    s.lambda = c.lambda;
    s.nu = 0.0;
    s.codes = expand_codes(pick_class_codes(sylvester(c.fig1_bits, c.hadamard_cap), classes),
                           labels);
    s.weights = w_step(s.codes, labels, classes, c.lambda);
    s.projection = Eigen::MatrixXd::Zero(m, c.fig1_bits);
    return objective(s, Eigen::MatrixXd(Eigen::MatrixXd::Zero(m, n)), labels).total;
  });
  auto ref = open_out(ctx.out / "fig1_reference.txt");
  ref << "# objective |Y - W^T B|^2 + lambda |W|^2 (nu = 0), X random Gaussian " << m << " x "
      << n << "\n"
      << "bits=" << c.fig1_bits << "\nclasses=" << classes << "\nsamples=" << n
      << "\nlambda=" << number(c.lambda) << "\nfsdh_reference=" << number(reference) << '\n';
  std::cout << "fsdh_reference=" << number(reference) << '\n';
  return 0;
}

bool sdh_allowed(const RunConfig& c, Index bits) { return bits <= c.sdh_max_bits; }

int bitscale(const Context& ctx) {
  const DataSplit data = stage("dataset", [&] { return load_data(ctx.config); });
  auto out = open_out(ctx.out / "bitscale.csv");
  out << "method,bits,train_seconds,precision,recall,map\n";
  for (Method method : {Method::fsdh, Method::sdh}) {
    for (Index bits : ctx.config.bits_list) {
      if (method == Method::sdh && !sdh_allowed(ctx.config, bits)) continue;
      RunConfig c = ctx.config;
      c.method = method;
      c.bits = bits;
      stage("config", [&] { c.validate(); return 0; });
      const TrainOutput t = stage("train", [&] { return train_model(data.train, c); });
      const EvalReport r = stage("eval", [&] {
        return evaluate_model(t.model, data.train, data.test, c.radius, c.empty_retrieval);
      });
      out << to_string(method) << ',' << bits << ',' << seconds(t.total_seconds) << ','
          << number(r.precision_at_radius) << ',' << number(r.recall_at_radius) << ','
          << number(r.map) << '\n';
      std::cout << to_string(method) << " L=" << bits << " train_seconds="
                << seconds(t.total_seconds) << " precision=" << number(r.precision_at_radius)
                << '\n';
    }
  }
  return 0;
}

int losses(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const DataSplit data = stage("dataset", [&] { return load_data(c); });
  const Eigen::MatrixXd x = stage("kernel", [&] {
    return transform(fit_anchors(data.train, c.anchors, c.sigma, c.kernel_seed),
                     data.train.features);
  });
  std::vector<LossRow> rows;
  for (Index bits : c.bits_list) {
    if (!sdh_allowed(c, bits)) continue;
    RunConfig run = c;
    run.bits = bits;
    const FsdhFit fit = stage("train", [&] {
      return train_fsdh(x, data.train.labels, data.train.class_count, bits,
                        Ridge{0.0, c.ridge}, c.hadamard_cap);
    });
    const auto sdh = stage("train", [&] {
      return train_sdh(x, data.train.labels, data.train.class_count, sdh_options(run));
    });
    rows.push_back(stage("losses", [&] {
      return loss_table_row(sdh.state, fit, x, data.train.labels, c.lambda);
    }));
  }
  stage("report", [&] { write_loss_table(rows, ctx.out / "losses.csv"); return 0; });
  for (const auto& r : rows) {
    std::cout << "L=" << r.bits << " sdh_w_loss=" << number(r.sdh.w_loss)
              << " fsdh_w_loss=" << number(r.fsdh.w_loss) << '\n';
  }
  return 0;
}

int biasmap(const Context& ctx) {
  const RunConfig& c = ctx.config;
  const RawDataset sample = stage("dataset", [&] {
    const DataSplit data = load_data(c);
    const Index n = std::min(c.biasmap_samples, data.train.size());
    std::vector<Index> ids(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids[std::size_t(i)] = i;
    return sort_by_label(subset(data.train, ids));
  });
  const Index anchors = std::max<Index>(1, std::min(c.anchors, sample.size() / 4));
  const Eigen::MatrixXd x = stage("kernel", [&] {
    return transform(fit_anchors(sample, anchors, c.sigma, c.kernel_seed), sample.features);
  });
  const BiasDiagnostics d = stage("biasmap", [&] {
    const FsdhFit fit = train_fsdh(x, sample.labels, sample.class_count, c.bits,
                                   Ridge{0.0, c.ridge}, c.hadamard_cap);
    return bias_term_diagnostics(x, expand_codes(fit.class_codes, sample.labels),
                                 sample.labels);
  });
  stage("report", [&] {
    write_grid_csv(d.projection_matrix, ctx.out / "k_matrix.csv");
    write_grid_csv(d.code_gram, ctx.out / "btb.csv");
    auto out = open_out(ctx.out / "traces.txt");
    out << "samples=" << sample.size() << "\nanchors=" << anchors << "\nbits=" << c.bits
        << "\ncode_trace=" << number(d.code_trace) << "\ntrace_direct=" << number(d.trace_direct)
        << "\ntrace_grouped="
        << (d.trace_grouped ? number(*d.trace_grouped) : std::string("n/a"))
        << "\nbias_via_trace=" << number(d.bias_via_trace)
        << "\nbias_direct=" << number(d.bias_direct) << '\n';
    return 0;
  });
  std::cout << "trace_direct=" << number(d.trace_direct) << " bias_direct="
            << number(d.bias_direct) << '\n';
  return 0;
}

int cmd_bench(const Context& ctx) {
  const DataSplit data = stage("dataset", [&] { return load_data(ctx.config); });
  auto out = open_out(ctx.out / "bench.csv");
  out << "method,anchors,bits,repeats,kernel_seconds,code_seconds,solve_seconds,total_seconds\n";
  for (Method method : {Method::fsdh, Method::sdh}) {
    for (Index anchors : ctx.config.anchors_list) {
      for (Index bits : ctx.config.bits_list) {
        if (method == Method::sdh && !sdh_allowed(ctx.config, bits)) continue;
        RunConfig c = ctx.config;
        c.method = method;
        c.anchors = anchors;
        c.bits = bits;
        stage("config", [&] { c.validate(); return 0; });
        std::vector<double> kernel, code, solve, total;
        for (Index r = 0; r < c.repeats; ++r) {
          const TrainOutput t = stage("train", [&] { return train_model(data.train, c); });
          kernel.push_back(t.kernel_seconds);
          code.push_back(t.code_seconds);
          solve.push_back(t.solve_seconds);
          total.push_back(t.total_seconds);
        }
        out << to_string(method) << ',' << anchors << ',' << bits << ',' << c.repeats << ','
            << seconds(median(kernel)) << ',' << seconds(median(code)) << ','
            << seconds(median(solve)) << ',' << seconds(median(total)) << '\n';
        std::cout << to_string(method) << " M=" << anchors << " L=" << bits
                  << " total_seconds=" << seconds(median(total)) << '\n';
      }
    }
  }
  return 0;
}

int cmd_synth(const Context& ctx) {
  const RunConfig& c = ctx.config;
  stage("dataset", [&] {
    const RawDataset all = synth_blobs(c.synth_classes, c.synth_per_class, c.synth_dim,
                                       c.synth_spread, c.data_seed);
    const auto [train, test] = train_test_split(all, c.test_limit, c.data_seed);
    write_csv(train, ctx.out / "train_features.csv", ctx.out / "train_labels.csv");
    write_csv(test, ctx.out / "test_features.csv", ctx.out / "test_labels.csv");
    std::cout << "train=" << train.size() << " test=" << test.size() << '\n';
    return 0;
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised discrete hashing with Hadamard class codes"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path, out_dir, model_path, figure;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "key = value config file");
  app.add_option("-s,--set", sets, "override, key=value (repeatable)")->allow_extra_args(false);
  app.add_option("-o,--out", out_dir, "output directory (overrides output_dir)");

  auto* train = app.add_subcommand("train", "train a model and write model.bin");
  auto* eval = app.add_subcommand("eval", "evaluate a model on the configured data");
  eval->add_option("-m,--model", model_path, "model file")->required();
  auto* figures = app.add_subcommand("figures", "write a figure's CSV bundle");
  figures->add_option("figure", figure, "fig1 | bitscale | losses | biasmap")
      ->required()
      ->check(CLI::IsMember({"fig1", "bitscale", "losses", "biasmap"}));
  auto* bench = app.add_subcommand("bench", "median stage timings over repeats");
  auto* synth = app.add_subcommand("synth", "write a synthetic train/test split as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    const Context ctx = prepare(config_path, sets, out_dir);
    const auto start = Clock::now();
    int rc = 0;
    if (train->parsed()) rc = cmd_train(ctx);
    else if (eval->parsed()) rc = cmd_eval(ctx, model_path);
    else if (bench->parsed()) rc = cmd_bench(ctx);
    else if (synth->parsed()) rc = cmd_synth(ctx);
    else if (figures->parsed()) {
      if (figure == "fig1") rc = fig1(ctx);
      else if (figure == "bitscale") rc = bitscale(ctx);
      else if (figure == "losses") rc = losses(ctx);
      else rc = biasmap(ctx);
    }
    std::cout << "elapsed_seconds=" << seconds(since(start)) << '\n';
    return rc;
  } catch (const StageError& e) {
    std::cerr << "fsdh: [" << e.stage() << "] " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fsdh: [io] " << e.what() << '\n';
    return 1;
  }
}
