#include "fsdh/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace fsdh {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw PreconditionError("config: " + key + " = '" + value + "' is not a valid number");
  }
  return out;
}

std::vector<Index> parse_list(const std::string& key, const std::string& value) {
  std::vector<Index> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<Index>(key, trim(item)));
  if (out.empty()) throw PreconditionError("config: " + key + " is empty");
  return out;
}

std::string join(const std::vector<Index>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(const char* key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            c.*member = parse_number<T>(key, v);
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

Field path(const char* key, std::filesystem::path RunConfig::*member) {
  return {key, [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return (c.*member).string(); }};
}

Field list(const char* key, std::vector<Index> RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_list(key, v); },
          [member](const RunConfig& c) { return join(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"source", [](RunConfig& c, const std::string& v) { c.source = parse_data_source(v); },
       [](const RunConfig& c) { return std::string(to_string(c.source)); }},
      path("train_data", &RunConfig::train_data),
      path("train_labels", &RunConfig::train_labels),
      path("test_data", &RunConfig::test_data),
      path("test_labels", &RunConfig::test_labels),
      number("train_limit", &RunConfig::train_limit),
      number("test_limit", &RunConfig::test_limit),
      {"normalization",
       [](RunConfig& c, const std::string& v) { c.normalization = parse_normalization(v); },
       [](const RunConfig& c) { return std::string(to_string(c.normalization)); }},
      number("data_seed", &RunConfig::data_seed),
      number("synth_classes", &RunConfig::synth_classes),
      number("synth_per_class", &RunConfig::synth_per_class),
      number("synth_dim", &RunConfig::synth_dim),
      number("synth_spread", &RunConfig::synth_spread),
      number("anchors", &RunConfig::anchors),
      number("sigma", &RunConfig::sigma),
      number("kernel_seed", &RunConfig::kernel_seed),
      {"method", [](RunConfig& c, const std::string& v) { c.method = parse_method(v); },
       [](const RunConfig& c) { return std::string(to_string(c.method)); }},
      number("bits", &RunConfig::bits),
      number("lambda", &RunConfig::lambda),
      number("nu", &RunConfig::nu),
      number("iters", &RunConfig::iters),
      number("seed", &RunConfig::seed),
      {"solver", [](RunConfig& c, const std::string& v) { c.solver = biqp::parse_solver(v); },
       [](const RunConfig& c) { return std::string(biqp::to_string(c.solver)); }},
      number("dcc_sweeps", &RunConfig::dcc_sweeps),
      number("bnb_budget", &RunConfig::bnb_budget),
      number("ridge", &RunConfig::ridge),
      number("hadamard_cap", &RunConfig::hadamard_cap),
      number("radius", &RunConfig::radius),
      {"empty_retrieval",
       [](RunConfig& c, const std::string& v) { c.empty_retrieval = parse_empty_retrieval(v); },
       [](const RunConfig& c) {
         return std::string(c.empty_retrieval == EmptyRetrieval::zero ? "zero" : "skip");
       }},
      list("bits_list", &RunConfig::bits_list),
      list("anchors_list", &RunConfig::anchors_list),
      number("repeats", &RunConfig::repeats),
      number("sdh_max_bits", &RunConfig::sdh_max_bits),
      number("fig1_bits", &RunConfig::fig1_bits),
      number("fig1_classes", &RunConfig::fig1_classes),
      number("fig1_samples", &RunConfig::fig1_samples),
      number("fig1_seeds", &RunConfig::fig1_seeds),
      number("fig1_iters", &RunConfig::fig1_iters),
      number("biasmap_samples", &RunConfig::biasmap_samples),
      path("output_dir", &RunConfig::output_dir),
  };
  return table;
}

}  // namespace

DataSource parse_data_source(const std::string& name) {
  if (name == "mnist") return DataSource::mnist;
  if (name == "csv") return DataSource::csv;
  if (name == "synth") return DataSource::synth;
  throw PreconditionError("unknown data source '" + name + "'");
}

const char* to_string(DataSource source) {
  switch (source) {
    case DataSource::mnist: return "mnist";
    case DataSource::csv: return "csv";
    case DataSource::synth: return "synth";
  }
  return "?";
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      try {
        f.set(*this, value);
      } catch (const PreconditionError& e) {
        const std::string what = e.what();
        if (what.rfind("config:", 0) == 0) throw;
        throw PreconditionError("config: " + key + ": " + what);
      }
      return;
    }
  }
  throw PreconditionError("config: unknown key '" + key + "'");
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw PreconditionError("config: " + msg);
  };
  if (source != DataSource::synth) {
    check(!train_data.empty() && !train_labels.empty(),
          "train_data and train_labels are required for source " +
              std::string(to_string(source)));
    check(test_data.empty() == test_labels.empty(),
          "test_data and test_labels must be given together");
  }
  check(train_limit >= 0, "train_limit must be >= 0");
  check(test_limit >= 1, "test_limit must be >= 1");
  check(synth_classes >= 1 && synth_per_class >= 1 && synth_dim >= 1,
        "synth_classes, synth_per_class and synth_dim must be >= 1");
  check(synth_spread >= 0.0, "synth_spread must be >= 0");
  check(anchors >= 1, "anchors must be >= 1");
  check(sigma > 0.0, "sigma must be > 0");
  check(bits >= 1, "bits must be >= 1");
  check(lambda >= 0.0, "lambda must be >= 0");
  check(nu >= 0.0, "nu must be >= 0");
  check(iters >= 1, "iters must be >= 1");
  check(dcc_sweeps >= 1, "dcc_sweeps must be >= 1");
  check(bnb_budget >= 1, "bnb_budget must be >= 1");
  check(ridge >= 0.0, "ridge must be >= 0");
  check(hadamard_cap >= 2, "hadamard_cap must be >= 2");
  check(radius >= 0, "radius must be >= 0");
  check(repeats >= 1, "repeats must be >= 1");
  for (Index b : bits_list) check(b >= 1, "bits_list entries must be >= 1");
  for (Index m : anchors_list) check(m >= 1, "anchors_list entries must be >= 1");
  check(fig1_bits >= 1 && fig1_classes >= 1 && fig1_samples >= 1 && fig1_seeds >= 1 &&
            fig1_iters >= 1,
        "fig1 settings must be >= 1");
  check(biasmap_samples >= 2, "biasmap_samples must be >= 2");
  if (method == Method::fsdh) {
    check(is_power_of_two(bits) && bits >= 2,
          "assumption violated: code length " + std::to_string(bits) +
              " is not a power of 2 (fsdh)");
  }
  check(!output_dir.empty(), "output_dir must be set");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw PreconditionError("config line " + std::to_string(number) +
                              ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      throw PreconditionError("override '" + a + "' is not key=value");
    }
    config.set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

}  // namespace fsdh
