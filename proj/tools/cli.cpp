#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "genens/data.hpp"
#include "genens/decomposition.hpp"
#include "genens/error.hpp"
#include "genens/generators.hpp"
#include "genens/predictors.hpp"
#include "genens/truth_process.hpp"
#include "json.hpp"

namespace genens::cli {
namespace {

namespace fs = std::filesystem;

const std::map<std::string, std::set<std::string>> kKeys{
    {"data", {"csv", "schema", "name", "test_fraction", "test_csv", "test_rows"}},
    {"generator", {"kind", "mode", "n_rows", "epsilon", "delta"}},
    {"predictors", {"list"}},
    {"experiment", {"seed", "m", "m_values", "repeats", "metrics", "averaging"}},
    {"decompose",
     {"mode", "rho", "m", "predictor", "real", "summary", "theta", "syn", "y", "test_points",
      "bootstrap", "flag_threshold"}},
    {"nested", {"r_theta", "s_per_theta", "n_rows", "bootstrap"}},
    {"forest", {"trees", "metrics"}},
    {"predict", {"curve", "m_targets"}},
};

struct Options {
  std::string command;
  std::string config;
  std::optional<Seed> seed;
  int jobs = 0;
  std::string output = "out";
  std::string input;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Files land in the output directory only through here, so a failed run
// can remove everything it wrote.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    const fs::path p = dir_ / name;
    names_.push_back(name);
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw Error("cannot write " + p.string());
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& n : names_) fs::remove(dir_ / n, ec);
    names_.clear();
  }

  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

// Where rows come from: a CSV file or a truth process.
struct Source {
  std::string name;
  std::optional<Dataset> data;
  std::optional<Dataset> test;  // explicit test file
  double test_fraction = 0.25;
  std::shared_ptr<const TruthProcess> process;
  std::size_t test_rows = 1000;

  const Schema& schema() const { return process ? *process->schema() : data->schema(); }
  Task task() const { return schema().task(); }

  Dataset real(Seed seed) const {
    return process ? process->sample_real(derive_seed(seed, "real")) : *data;
  }

  std::pair<Dataset, Dataset> split(Seed seed) const {
    if (process) return process_split(process, test_rows)(0, seed);
    if (test) return {*data, *test};
    return train_test_split(*data, test_fraction, derive_seed(seed, "split"));
  }

  SplitSource splits() const {
    if (process) return process_split(process, test_rows);
    if (test) return fixed_split(*data, *test);
    return random_split(*data, test_fraction);
  }
};

std::shared_ptr<const TruthProcess> load_process(Config& c) {
  if (!c.has_section("process")) return nullptr;
  std::string id;
  ProcessOptions opts;
  for (const auto& [k, v] : c.section("process")) {
    if (k == "id") id = v;
    else opts[k] = v;
  }
  if (id.empty()) throw ConfigError("[process] id: required field is missing");
  try {
    return make_truth_process(id, opts);
  } catch (const Error& e) {
    throw ConfigError(std::string("[process]: ") + e.what());
  }
}

Source load_source(Config& c) {
  Source s;
  s.process = load_process(c);
  if (c.has("data", "csv")) {
    if (s.process) throw ConfigError("[data] csv: give either a CSV file or a [process], not both");
    const fs::path csv = c.existing_path("data", "csv");
    std::shared_ptr<const Schema> schema;
    try {
      schema = std::make_shared<const Schema>(parse_schema(c.text("data", "schema")));
    } catch (const Error& e) {
      throw ConfigError(std::string("[data] schema: ") + e.what());
    }
    s.name = c.text("data", "name", csv.stem().string());
    s.data = load_csv(csv, schema);
    if (c.has("data", "test_csv")) s.test = load_csv(c.existing_path("data", "test_csv"), schema);
    s.test_fraction = c.number("data", "test_fraction", 0.25);
    if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0))
      throw ConfigError("[data] test_fraction: must lie in (0, 1)");
    return s;
  }
  if (!s.process) throw ConfigError("[data] csv: need a CSV file or a [process] section");
  s.name = c.text("data", "name", s.process->id());
  s.test_rows = c.count("data", "test_rows", 1000);
  if (s.test_rows < 1) throw ConfigError("[data] test_rows: must be at least 1");
  return s;
}

GeneratorSpec load_generator(Config& c, const Source& src) {
  GeneratorSpec g;
  const std::string kind = c.text("generator", "kind", "bootstrap");
  if (kind == "bootstrap") g.kind = GeneratorKind::bootstrap;
  else if (kind == "identity") {
    g.kind = GeneratorKind::bootstrap;
    g.identity = true;
  } else if (kind == "gaussian_ppd") g.kind = GeneratorKind::gaussian_ppd;
  else if (kind == "noisy_marginal_dp") g.kind = GeneratorKind::noisy_marginal_dp;
  else if (kind == "truth_process") {
    g.kind = GeneratorKind::truth_process;
    if (!src.process) throw ConfigError("[generator] kind: truth_process needs a [process] section");
    g.process = src.process;
  } else {
    throw ConfigError("[generator] kind: unknown generator '" + kind + "'");
  }
  if (c.has("generator", "n_rows")) g.n_rows = c.count("generator", "n_rows");
  g.epsilon = c.number("generator", "epsilon", 1.0);
  g.delta = c.number("generator", "delta", 1e-6);
  try {
    g.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[generator]: ") + e.what());
  }
  if (g.kind == GeneratorKind::gaussian_ppd && !src.schema().all_numeric())
    throw ConfigError("[generator] kind: gaussian_ppd needs every column numeric");
  if (g.kind == GeneratorKind::noisy_marginal_dp && !src.schema().all_categorical())
    throw ConfigError("[generator] kind: noisy_marginal_dp needs every column categorical");
  return g;
}

EnsembleMode load_mode(Config& c, const GeneratorSpec& g) {
  EnsembleMode mode;
  try {
    mode = parse_ensemble_mode(c.text("generator", "mode", "independent"));
  } catch (const Error& e) {
    throw ConfigError(std::string("[generator] mode: ") + e.what());
  }
  if (mode != EnsembleMode::independent && g.kind != GeneratorKind::noisy_marginal_dp)
    throw ConfigError("[generator] mode: " + std::string(to_string(mode)) +
                      " needs kind = noisy_marginal_dp");
  return mode;
}

std::vector<PredictorSpec> load_predictors(Config& c, Task task) {
  std::vector<PredictorSpec> out;
  for (const auto& s : c.list("predictors", "list")) {
    try {
      out.push_back(parse_predictor(s, task));
      out.back().validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("[predictors] list: ") + e.what());
    }
  }
  return out;
}

std::vector<MetricSpec> load_metrics(Config& c, const std::string& section, Task task) {
  const std::vector<std::string> fallback{task == Task::regression ? "mse" : "brier_binary"};
  std::vector<MetricSpec> out;
  for (const auto& s : c.list(section, "metrics", fallback)) {
    MetricSpec m;
    try {
      m.kind = parse_metric(s);
    } catch (const Error& e) {
      throw ConfigError("[" + section + "] metrics: " + e.what());
    }
    if (!metric_supports(m.kind, task))
      throw ConfigError("[" + section + "] metrics: " + s + " does not fit the task");
    out.push_back(m);
  }
  return out;
}

std::string write_table(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
  return out.str();
}

std::string num(double v) { return format_number(v); }

// ---- subcommands ----
// Each one validates its inputs first (ConfigError) and only then computes.

int cmd_generate(Config& c, Seed seed, Outputs& out) {
  const Source src = load_source(c);
  const GeneratorSpec gen = load_generator(c, src);
  const EnsembleMode mode = load_mode(c, gen);
  const std::size_t m = c.count("experiment", "m");
  if (m < 1) throw ConfigError("[experiment] m: must be at least 1");

  const Dataset real = src.real(seed);
  const auto ens = generate_ensemble(gen, real, m, mode, seed);
  for (std::size_t i = 0; i < ens.datasets.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synthetic_%03zu.csv", i);
    std::ostringstream csv;
    write_csv(csv, ens.datasets[i]);
    out.write(name, csv.str());
  }
  out.write("provenance.json", ens.record.to_json());
  return kOk;
}

int cmd_curve(Config& c, Seed seed, Outputs& out) {
  const Source src = load_source(c);
  const GeneratorSpec gen = load_generator(c, src);
  CurveConfig cfg;
  cfg.mode = load_mode(c, gen);
  cfg.dataset = src.name;
  cfg.m_values = c.counts("experiment", "m_values", cfg.m_values);
  if (cfg.m_values.empty() || cfg.m_values.front() < 1 ||
      !std::is_sorted(cfg.m_values.begin(), cfg.m_values.end(), std::less_equal<>()) ||
      std::adjacent_find(cfg.m_values.begin(), cfg.m_values.end()) != cfg.m_values.end())
    throw ConfigError("[experiment] m_values: must be positive, ascending and unique");
  cfg.repeats = c.count("experiment", "repeats", 1);
  cfg.metrics = load_metrics(c, "experiment", src.task());
  cfg.averaging.clear();
  for (const auto& a : c.list("experiment", "averaging", std::vector<std::string>{"mean"})) {
    try {
      cfg.averaging.push_back(parse_averaging(a));
    } catch (const Error& e) {
      throw ConfigError(std::string("[experiment] averaging: ") + e.what());
    }
  }
  const auto predictors = load_predictors(c, src.task());
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[experiment]: ") + e.what());
  }

  const CurveResult res = mse_curve(gen, src.splits(), predictors, cfg, seed);
  std::ostringstream csv;
  write_curve_csv(csv, res.rows);
  out.write("curve.csv", csv.str());
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : res.summary)
    rows.push_back({p.predictor, p.averaging, p.metric, std::to_string(p.m), num(p.score.value),
                    num(p.score.std_error)});
  out.write("curve_summary.csv",
            write_table({"predictor", "averaging", "metric", "m", "mean", "std_error"}, rows));
  return kOk;
}

int cmd_predict_curve(Config& c, const std::string& input, Outputs& out) {
  const fs::path path = input.empty() ? c.existing_path("predict", "curve") : fs::path(input);
  if (!fs::exists(path)) throw ConfigError("--input: file not found: " + path.string());
  std::vector<std::size_t> targets =
      c.counts("predict", "m_targets", std::vector<std::size_t>{4, 8, 16, 32});
  for (std::size_t m : targets)
    if (m < 1) throw ConfigError("[predict] m_targets: values must be at least 1");

  std::ifstream in(path);
  const auto rows = read_curve_csv(in);
  using Key = std::vector<std::string>;
  std::map<Key, std::map<std::size_t, std::vector<double>>> groups;
  for (const auto& r : rows)
    groups[{r.dataset, r.generator, r.mode, r.predictor, r.averaging, r.metric}][r.m].push_back(
        r.score);

  std::vector<std::vector<std::string>> table;
  for (const auto& [key, by_m] : groups) {
    std::map<std::size_t, Term> measured;
    std::map<std::size_t, double> means;
    for (const auto& [m, scores] : by_m) {
      const double mean = pairwise_mean(scores);
      const double se =
          scores.size() > 1 ? std::sqrt(sample_variance(scores) / static_cast<double>(scores.size()))
                            : 0.0;
      measured[m] = {mean, se};
      means[m] = mean;
    }
    std::optional<RuleOfThumbFit> two, reg;
    if (means.count(1) && means.count(2)) two = fit_rule_two_point(means[1], means[2]);
    if (means.size() >= 2) reg = fit_rule_regression(means);
    std::set<std::size_t> ms(targets.begin(), targets.end());
    for (const auto& [m, t] : measured) ms.insert(m);
    for (std::size_t m : ms) {
      std::vector<std::string> row = key;
      row.push_back(std::to_string(m));
      const auto it = measured.find(m);
      row.push_back(it != measured.end() ? num(it->second.value) : "");
      row.push_back(it != measured.end() ? num(it->second.std_error) : "");
      row.push_back(two ? num(predict_mse(*two, m)) : "");
      row.push_back(reg ? num(predict_mse(*reg, m)) : "");
      table.push_back(std::move(row));
    }
  }
  out.write("predicted_curve.csv",
            write_table({"dataset", "generator", "mode", "predictor", "averaging", "metric", "m",
                         "measured", "measured_se", "two_point", "regression"},
                        table));
  return kOk;
}

int cmd_decompose(Config& c, Seed seed, Outputs& out) {
  const auto process = load_process(c);
  if (!process) throw ConfigError("[process] id: decompose needs a truth process");
  OracleConfig cfg;
  try {
    cfg.mode = parse_oracle_mode(c.text("decompose", "mode", "iid"));
  } catch (const Error& e) {
    throw ConfigError(std::string("[decompose] mode: ") + e.what());
  }
  cfg.rho = c.number("decompose", "rho", 0.0);
  cfg.m = c.count("decompose", "m", 1);
  const McCounts d;
  cfg.mc.real = c.count("decompose", "real", d.real);
  cfg.mc.summary = c.count("decompose", "summary", d.summary);
  cfg.mc.theta = c.count("decompose", "theta", d.theta);
  cfg.mc.syn = c.count("decompose", "syn", d.syn);
  cfg.mc.y = c.count("decompose", "y", d.y);
  cfg.test_points = c.count("decompose", "test_points", cfg.test_points);
  cfg.bootstrap = c.count("decompose", "bootstrap", cfg.bootstrap);
  cfg.flag_threshold = c.number("decompose", "flag_threshold", cfg.flag_threshold);
  if (!(cfg.flag_threshold >= 0.0))
    throw ConfigError("[decompose] flag_threshold: must be non-negative");
  PredictorSpec predictor;
  try {
    predictor = parse_predictor(c.text("decompose", "predictor", "mean"), process->schema()->task());
    predictor.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[decompose] predictor: ") + e.what());
  }

  for (const auto& [key, v] : {std::pair<const char*, std::size_t>{"real", cfg.mc.real},
                                {"theta", cfg.mc.theta}, {"syn", cfg.mc.syn}, {"y", cfg.mc.y}})
    if (v < 2) throw ConfigError(std::string("[decompose] ") + key + ": must be at least 2");
  if (cfg.mode == OracleMode::shared_summary) {
    if (!process->has_summary())
      throw ConfigError("[decompose] mode: process " + process->id() + " has no noisy summary");
    if (cfg.mc.summary < 2) throw ConfigError("[decompose] summary: must be at least 2");
  }
  if (cfg.mode == OracleMode::correlated) {
    if (!process->supports_correlation())
      throw ConfigError("[decompose] mode: process " + process->id() +
                        " has no correlated parameter draws");
    if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) throw ConfigError("[decompose] rho: must lie in [0, 1]");
  }
  if (cfg.m < 1) throw ConfigError("[decompose] m: must be at least 1");
  if (cfg.test_points < 1) throw ConfigError("[decompose] test_points: must be at least 1");
  if (cfg.bootstrap < 2) throw ConfigError("[decompose] bootstrap: must be at least 2");

  const DecompositionReport rep = oracle_decompose(*process, predictor, cfg, seed);
  out.write("decomposition.json", rep.to_json());
  if (rep.flagged) {
    std::cerr << "identity check flagged: gap " << rep.identity_gap.value << " exceeds "
              << cfg.flag_threshold << " x " << rep.identity_gap.std_error << "\n";
    return kFlagged;
  }
  return kOk;
}

int cmd_nested_var(Config& c, Seed seed, Outputs& out) {
  const Source src = load_source(c);
  const GeneratorSpec gen = load_generator(c, src);
  const auto predictors = load_predictors(c, src.task());
  NestedConfig cfg;
  cfg.r_theta = c.count("nested", "r_theta", cfg.r_theta);
  cfg.s_per_theta = c.count("nested", "s_per_theta", cfg.s_per_theta);
  if (c.has("nested", "n_rows")) cfg.n_rows = c.count("nested", "n_rows");
  cfg.bootstrap = c.count("nested", "bootstrap", cfg.bootstrap);
  if (cfg.r_theta < 2 || cfg.s_per_theta < 2)
    throw ConfigError("[nested]: r_theta and s_per_theta must be at least 2");

  const auto [train, test] = src.split(seed);
  std::vector<std::vector<std::string>> points, summary;
  for (const auto& p : predictors) {
    const auto r = estimate_mv_sdv_nested(gen, train, p, test, cfg, derive_seed(seed, "nested"));
    for (std::size_t x = 0; x < r.mv.size(); ++x)
      points.push_back({p.name(), std::to_string(x), num(r.mv[x]), num(r.sdv[x]),
                        num(r.sdv_corrected[x])});
    summary.push_back({p.name(), std::to_string(r.r_theta), std::to_string(r.s_per_theta),
                       num(r.mv_mean.value), num(r.mv_mean.std_error), num(r.sdv_mean.value),
                       num(r.sdv_mean.std_error), num(r.sdv_corrected_mean.value),
                       num(r.sdv_corrected_mean.std_error), num(r.total.value),
                       num(r.total.std_error)});
  }
  out.write("nested_var.csv",
            write_table({"predictor", "test_row", "mv", "sdv", "sdv_corrected"}, points));
  out.write("nested_var_summary.csv",
            write_table({"predictor", "r_theta", "s_per_theta", "mv", "mv_se", "sdv", "sdv_se",
                         "sdv_corrected", "sdv_corrected_se", "mv_plus_sdv", "mv_plus_sdv_se"},
                        summary));
  return kOk;
}

int cmd_forest_curve(Config& c, Seed seed, Outputs& out) {
  const Source src = load_source(c);
  const std::size_t trees = c.count("forest", "trees", 100);
  if (trees < 2) throw ConfigError("[forest] trees: must be at least 2");
  const auto metrics = load_metrics(c, "forest", src.task());

  const auto [train, test] = src.split(seed);
  const Encoder enc = Encoder::fit(train, false);
  const FeatureMatrix ftrain = enc.transform(train);
  const FeatureMatrix ftest = enc.transform(test);
  std::vector<std::vector<std::string>> rows;
  for (const auto& metric : metrics) {
    const auto curve = train_forest_curve(ftrain, ftest, trees, metric, derive_seed(seed, "forest"));
    for (const auto& [t, score] : curve)
      rows.push_back({src.name, std::string(to_string(metric.kind)), std::to_string(t), num(score)});
  }
  out.write("forest_curve.csv", write_table({"dataset", "metric", "trees", "score"}, rows));
  return kOk;
}

std::string manifest(const Options& o, const Config& c, Seed seed, int status,
                     const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["tool"] = "genens-run";
  j["version"] = GENENS_VERSION;
  j["command"] = o.command;
  j["config_hash"] = hex(c.hash());
  j["seed"] = seed;
  j["probability_clamp"] = kProbabilityClamp;
  j["exit_status"] = status;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

int dispatch(const Options& o) {
  Outputs out(o.output);
  try {
    Config c = Config::load(o.config);
    c.check_keys(kKeys, {"process"});
    const Seed seed = o.seed ? *o.seed : static_cast<Seed>(c.count("experiment", "seed", 0));
    if (o.jobs > 0) set_num_threads(o.jobs);

    int status = kOk;
    if (o.command == "generate") status = cmd_generate(c, seed, out);
    else if (o.command == "curve") status = cmd_curve(c, seed, out);
    else if (o.command == "predict-curve") status = cmd_predict_curve(c, o.input, out);
    else if (o.command == "decompose") status = cmd_decompose(c, seed, out);
    else if (o.command == "nested-var") status = cmd_nested_var(c, seed, out);
    else if (o.command == "forest-curve") status = cmd_forest_curve(c, seed, out);
    out.write("manifest.json", manifest(o, c, seed, status, out.names()));
    return status;
  } catch (const ConfigError& e) {
    out.rollback();
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    out.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Generative ensembles over synthetic datasets and their bias-variance decompositions"};
  app.set_version_flag("--version", GENENS_VERSION);
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "write m synthetic CSVs and a provenance record"},
      {"curve", "score ensembles of m = m_values members (long-format CSV)"},
      {"predict-curve", "rule-of-thumb predictions beside a measured curve"},
      {"decompose", "Monte Carlo decomposition on a truth process (JSON)"},
      {"nested-var", "nested model / synthetic-data variance estimates"},
      {"forest-curve", "score of a bagged forest as trees are added"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "sectioned key-value config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "overrides [experiment] seed");
    sub->add_option("--jobs", o.jobs, "OpenMP threads (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--output", o.output, "output directory")->capture_default_str();
    if (name == "predict-curve")
      sub->add_option("--input", o.input, "curve CSV; overrides [predict] curve");
    sub->callback([&o, name = name] { o.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }
  return dispatch(o);
}

}  // namespace genens::cli
