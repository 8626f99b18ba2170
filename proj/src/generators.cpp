#include "genens/generators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "genens/error.hpp"
#include "genens/truth_process.hpp"

namespace genens {
namespace {

constexpr double kBisectionTolerance = 1e-12;

std::string hex_id(Seed value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::vector<std::vector<double>> column_counts(const Dataset& data) {
  const Schema& schema = data.schema();
  if (!schema.all_categorical())
    throw Error("noisy_marginal_dp: every column must be categorical");
  std::vector<std::vector<double>> counts;
  for (const Column& c : schema.columns()) counts.emplace_back(c.levels.size(), 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.cols(); ++c)
      counts[c][static_cast<std::size_t>(data.at(r, c))] += 1.0;
  return counts;
}

void check_privacy(double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw Error("privacy: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("privacy: delta must lie in (0, 1)");
}

PrivateSummary release(const Dataset& data, double rho, double epsilon, double delta, Seed seed) {
  PrivateSummary s;
  s.schema = data.schema_ptr();
  s.noisy_counts = column_counts(data);
  s.n_public = data.rows();
  s.epsilon = epsilon;
  s.delta = delta;
  s.rho = rho;
  s.noise_stddev = gaussian_noise_stddev(rho, s.noisy_counts.size());
  s.id = hex_id(derive_seed(seed, "summary-id"));
  Engine rng = make_engine(seed);
  for (auto& column : s.noisy_counts)
    for (double& c : column) c += s.noise_stddev * standard_normal(rng);
  return s;
}

GaussianParams fit_gaussian(const Dataset& data, Seed seed) {
  if (!data.schema().all_numeric()) throw Error("gaussian_ppd: categorical columns are not supported");
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto d = static_cast<Eigen::Index>(data.cols());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      data.cells().data(), n, d);
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centred = x.rowwise() - mean.transpose();
  const Eigen::MatrixXd scatter = centred.transpose() * centred;

  // Normal-inverse-Wishart with mu0 = sample mean, so the posterior mean is
  // the sample mean and Psi_n = Psi_0 + scatter.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd psi0 = kNiwRidge * identity;
  if (n >= 2) psi0 += scatter / static_cast<double>(n - 1);
  const Eigen::MatrixXd psi_n = psi0 + scatter;
  const double nu_n = static_cast<double>(d + 2 + n);
  const double kappa_n = kNiwKappa0 + static_cast<double>(n);

  // Bartlett: Sigma^-1 ~ Wishart(Psi_n^-1, nu_n) = L A A' L'.
  Engine rng = make_engine(seed);
  const Eigen::MatrixXd psi_inv = psi_n.ldlt().solve(identity);
  const Eigen::MatrixXd l = psi_inv.llt().matrixL();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(std::chi_squared_distribution<double>(nu_n - static_cast<double>(i))(rng));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = standard_normal(rng);
  }
  const Eigen::MatrixXd b = l * a;
  const Eigen::MatrixXd b_inv = b.triangularView<Eigen::Lower>().solve(identity);
  Eigen::MatrixXd sigma = b_inv.transpose() * b_inv;
  sigma = (sigma + sigma.transpose()) / 2.0;

  GaussianParams p;
  p.schema = data.schema_ptr();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    sigma += kNiwRidge * identity;
    llt.compute(sigma);
  }
  const Eigen::MatrixXd sigma_l = llt.matrixL();
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
  p.mean = mean + sigma_l * z / std::sqrt(kappa_n);
  p.cov = sigma;
  p.chol = sigma_l;
  return p;
}

Dataset synthetic(Dataset data, const std::string& generator) {
  Provenance p;
  p.source = Provenance::Source::synthetic;
  p.generator = generator;
  return data.with_provenance(std::move(p));
}

}  // namespace

std::string_view to_string(GeneratorKind kind) noexcept {
  switch (kind) {
    case GeneratorKind::bootstrap: return "bootstrap";
    case GeneratorKind::gaussian_ppd: return "gaussian_ppd";
    case GeneratorKind::noisy_marginal_dp: return "noisy_marginal_dp";
    case GeneratorKind::truth_process: return "truth_process";
  }
  return "unknown";
}

std::string GeneratorSpec::name() const {
  if (kind == GeneratorKind::bootstrap && identity) return "identity";
  if (kind == GeneratorKind::truth_process && process) return "truth_process:" + process->id();
  return std::string(to_string(kind));
}

void GeneratorSpec::validate() const {
  if (n_rows && *n_rows < 1) throw Error("generator: n_rows must be at least 1");
  if (identity && kind != GeneratorKind::bootstrap)
    throw Error("generator: identity applies to bootstrap only");
  if (kind == GeneratorKind::noisy_marginal_dp) check_privacy(epsilon, delta);
  if (kind == GeneratorKind::truth_process && !process)
    throw Error("generator: truth_process needs a process");
}

GeneratorParams fit(const GeneratorSpec& spec, const Dataset& data, Seed seed) {
  spec.validate();
  if (data.rows() == 0) throw Error("generator: empty dataset");
  switch (spec.kind) {
    case GeneratorKind::bootstrap:
      return BootstrapParams{std::make_shared<const Dataset>(data), spec.identity};
    case GeneratorKind::gaussian_ppd:
      return fit_gaussian(data, seed);
    case GeneratorKind::noisy_marginal_dp: {
      const PrivateSummary s = std::isinf(spec.epsilon)
                                   ? exact_summary(data)
                                   : fit_dp_summary(data, spec.epsilon, spec.delta,
                                                    derive_seed(seed, "summary"));
      return project_summary(s);
    }
    case GeneratorKind::truth_process:
      return ProcessParams{spec.process, spec.process->draw_theta(data, seed)};
  }
  throw Error("generator: unknown kind");
}

Dataset sample(const GeneratorParams& params, std::size_t n_rows, Seed seed) {
  if (n_rows < 1) throw Error("generator: n_rows must be at least 1");
  Engine rng = make_engine(seed);
  if (const auto* p = std::get_if<BootstrapParams>(&params)) {
    if (p->identity) return synthetic(*p->data, "identity");
    std::uniform_int_distribution<std::size_t> pick(0, p->data->rows() - 1);
    std::vector<std::size_t> idx(n_rows);
    for (auto& i : idx) i = pick(rng);
    return synthetic(p->data->select_rows(idx), "bootstrap");
  }
  if (const auto* p = std::get_if<GaussianParams>(&params)) {
    const auto d = p->mean.size();
    std::vector<double> cells(n_rows * static_cast<std::size_t>(d));
    Eigen::VectorXd z(d);
    for (std::size_t r = 0; r < n_rows; ++r) {
      for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
      const Eigen::VectorXd x = p->mean + p->chol * z;
      std::copy(x.data(), x.data() + d, cells.begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    return synthetic(Dataset(p->schema, std::move(cells)), "gaussian_ppd");
  }
  if (const auto* p = std::get_if<MarginalParams>(&params)) {
    const std::size_t k = p->probabilities.size();
    std::vector<std::discrete_distribution<std::size_t>> columns;
    for (const auto& probs : p->probabilities) columns.emplace_back(probs.begin(), probs.end());
    std::vector<double> cells(n_rows * k);
    for (std::size_t r = 0; r < n_rows; ++r)
      for (std::size_t c = 0; c < k; ++c) cells[r * k + c] = static_cast<double>(columns[c](rng));
    return synthetic(Dataset(p->schema, std::move(cells)), "noisy_marginal_dp");
  }
  const auto& p = std::get<ProcessParams>(params);
  return synthetic(p.process->sample_synthetic(p.theta, n_rows, seed),
                   "truth_process:" + p.process->id());
}

double zcdp_epsilon(double rho, double delta) {
  check_privacy(1.0, delta);
  if (rho < 0.0) throw Error("privacy: rho must be non-negative");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

double zcdp_rho(double epsilon, double delta) {
  check_privacy(epsilon, delta);
  if (std::isinf(epsilon)) return epsilon;
  double lo = 0.0;
  double hi = epsilon;  // eps(rho) >= rho
  for (int it = 0; it < 400 && hi - lo > kBisectionTolerance * std::max(hi, 1e-300); ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    (zcdp_epsilon(mid, delta) < epsilon ? lo : hi) = mid;
  }
  return lo + (hi - lo) / 2.0;
}

double gaussian_noise_stddev(double rho, std::size_t columns) {
  if (!(rho > 0.0)) throw Error("privacy: rho must be positive");
  if (columns == 0) throw Error("privacy: no columns to release");
  if (std::isinf(rho)) return 0.0;
  return std::sqrt(static_cast<double>(columns) / (2.0 * rho));
}

PrivateSummary fit_dp_summary(const Dataset& data, double epsilon, double delta, Seed seed) {
  check_privacy(epsilon, delta);
  return release(data, zcdp_rho(epsilon, delta), epsilon, delta, seed);
}

PrivateSummary fit_dp_summary_rho(const Dataset& data, double rho, double delta, Seed seed) {
  const double epsilon = zcdp_epsilon(rho, delta);
  return release(data, rho, epsilon, delta, seed);
}

PrivateSummary exact_summary(const Dataset& data) {
  PrivateSummary s;
  s.schema = data.schema_ptr();
  s.noisy_counts = column_counts(data);
  s.n_public = data.rows();
  s.epsilon = std::numeric_limits<double>::infinity();
  s.delta = 0.0;
  s.rho = std::numeric_limits<double>::infinity();
  s.noise_stddev = 0.0;
  s.id = "exact";
  return s;
}

std::vector<double> project_to_simplex(std::span<const double> counts) {
  if (counts.empty()) throw Error("simplex: empty count vector");
  std::vector<double> p(counts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = std::max(counts[i], 0.0);
    total += p[i];
  }
  if (total <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> dirichlet(std::span<const double> alpha, Engine& rng) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = std::gamma_distribution<double>(alpha[i], 1.0)(rng);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

MarginalParams project_summary(const PrivateSummary& summary) {
  MarginalParams p;
  p.schema = summary.schema;
  p.summary_id = summary.id;
  for (const auto& counts : summary.noisy_counts) p.probabilities.push_back(project_to_simplex(counts));
  return p;
}

MarginalParams sample_params_from_summary(const PrivateSummary& summary, Seed seed) {
  MarginalParams p = project_summary(summary);
  Engine rng = make_engine(seed);
  const auto n = static_cast<double>(summary.n_public);
  for (auto& probs : p.probabilities) {
    std::vector<double> alpha(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) alpha[i] = n * probs[i] + kDirichletPrior;
    probs = dirichlet(alpha, rng);
  }
  return p;
}

std::string_view to_string(EnsembleMode mode) noexcept {
  switch (mode) {
    case EnsembleMode::independent: return "independent";
    case EnsembleMode::shared_summary: return "shared_summary";
    case EnsembleMode::split_budget: return "split_budget";
  }
  return "unknown";
}

EnsembleMode parse_ensemble_mode(std::string_view name) {
  for (auto m : {EnsembleMode::independent, EnsembleMode::shared_summary, EnsembleMode::split_budget})
    if (to_string(m) == name) return m;
  throw Error("unknown ensemble mode '" + std::string(name) + "'");
}

std::string EnsembleRecord::to_json() const {
  const auto number = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  nlohmann::ordered_json j;
  j["generator"] = generator;
  j["mode"] = std::string(to_string(mode));
  j["seed"] = seed;
  j["m"] = m;
  j["n_rows"] = n_rows;
  j["epsilon"] = number(epsilon);
  j["delta"] = delta;
  j["rho_total"] = number(rho_total);
  j["replicates"] = nlohmann::ordered_json::array();
  for (const auto& r : replicates) {
    nlohmann::ordered_json e;
    e["index"] = r.index;
    e["fit_seed"] = r.fit_seed;
    e["sample_seed"] = r.sample_seed;
    e["summary_id"] = r.summary_id;
    e["rho"] = number(r.rho);
    j["replicates"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

GeneratedEnsemble generate_ensemble(const GeneratorSpec& spec, const Dataset& data, std::size_t m,
                                    EnsembleMode mode, Seed seed, Exec exec) {
  spec.validate();
  if (m < 1) throw Error("generate_ensemble: m must be at least 1");
  if (data.rows() == 0) throw Error("generate_ensemble: empty dataset");
  const bool dp = spec.kind == GeneratorKind::noisy_marginal_dp;
  if (mode != EnsembleMode::independent && !dp)
    throw Error("generate_ensemble: mode " + std::string(to_string(mode)) +
                " requires the noisy_marginal_dp generator");

  std::size_t n_rows = data.rows();
  if (spec.kind == GeneratorKind::truth_process) n_rows = spec.process->synthetic_rows();
  if (spec.n_rows) n_rows = *spec.n_rows;

  EnsembleRecord record;
  record.generator = spec.name();
  record.mode = mode;
  record.seed = seed;
  record.m = m;
  record.n_rows = n_rows;
  if (dp) {
    record.epsilon = spec.epsilon;
    record.delta = spec.delta;
  }
  const double rho = dp ? zcdp_rho(spec.epsilon, spec.delta) : 0.0;

  std::optional<PrivateSummary> shared;
  if (mode == EnsembleMode::shared_summary)
    shared = std::isinf(spec.epsilon)
                 ? exact_summary(data)
                 : fit_dp_summary(data, spec.epsilon, spec.delta, derive_seed(seed, "summary"));

  record.replicates.resize(m);
  std::vector<std::optional<Dataset>> out(m);
  for_each_index(exec, m, [&](std::size_t i) {
    ReplicateRecord& rec = record.replicates[i];
    rec.index = i;
    rec.fit_seed = derive_seed(seed, "fit", i);
    rec.sample_seed = derive_seed(seed, "sample", i);
    GeneratorParams params;
    switch (mode) {
      case EnsembleMode::independent:
        params = fit(spec, data, rec.fit_seed);
        rec.rho = rho;
        break;
      case EnsembleMode::shared_summary:
        params = sample_params_from_summary(*shared, rec.fit_seed);
        rec.rho = shared->rho;
        break;
      case EnsembleMode::split_budget: {
        const double share = rho / static_cast<double>(m);
        const PrivateSummary s =
            std::isinf(share) ? exact_summary(data)
                              : fit_dp_summary_rho(data, share, spec.delta, rec.fit_seed);
        params = project_summary(s);
        rec.rho = s.rho;
        break;
      }
    }
    if (const auto* mp = std::get_if<MarginalParams>(&params)) rec.summary_id = mp->summary_id;
    Dataset d = sample(params, n_rows, rec.sample_seed);
    Provenance prov = d.provenance();
    prov.generator = record.generator;
    prov.replicate = i;
    out[i] = d.with_provenance(std::move(prov));
  });

  switch (mode) {
    case EnsembleMode::independent: record.rho_total = dp ? rho * static_cast<double>(m) : 0.0; break;
    case EnsembleMode::shared_summary: record.rho_total = shared->rho; break;
    case EnsembleMode::split_budget: {
      std::vector<double> parts;
      for (const auto& r : record.replicates) parts.push_back(r.rho);
      record.rho_total = pairwise_sum(parts);
      break;
    }
  }

  GeneratedEnsemble result;
  result.record = std::move(record);
  for (auto& d : out) result.datasets.push_back(std::move(*d));
  return result;
}

}  // namespace genens
