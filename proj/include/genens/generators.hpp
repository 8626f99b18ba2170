#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "genens/data.hpp"
#include "genens/parallel.hpp"
#include "genens/rng.hpp"

namespace genens {

class TruthProcess;

// A draw of generator parameters for a truth process. `values` holds the
// numeric parameters; `data` is set when the draw is a dataset itself.
struct Theta {
  std::vector<double> values;
  std::shared_ptr<const Dataset> data;
};

enum class GeneratorKind { bootstrap, gaussian_ppd, noisy_marginal_dp, truth_process };

std::string_view to_string(GeneratorKind kind) noexcept;

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::bootstrap;
  std::optional<std::size_t> n_rows;  // synthetic rows; defaults to the real row count
  bool identity = false;              // bootstrap only: hand back the data verbatim
  double epsilon = 1.0;               // noisy_marginal_dp; +inf disables the noise
  double delta = 1e-6;
  std::shared_ptr<const TruthProcess> process;

  std::string name() const;
  void validate() const;
};

struct BootstrapParams {
  std::shared_ptr<const Dataset> data;
  bool identity = false;
};

struct GaussianParams {
  std::shared_ptr<const Schema> schema;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;  // lower factor of cov
};

struct MarginalParams {
  std::shared_ptr<const Schema> schema;
  std::vector<std::vector<double>> probabilities;  // one simplex vector per column
  std::string summary_id;                          // empty unless drawn from a summary
};

struct ProcessParams {
  std::shared_ptr<const TruthProcess> process;
  Theta theta;
};

using GeneratorParams = std::variant<BootstrapParams, GaussianParams, MarginalParams, ProcessParams>;

GeneratorParams fit(const GeneratorSpec& spec, const Dataset& data, Seed seed);
Dataset sample(const GeneratorParams& params, std::size_t n_rows, Seed seed);

// Normal-inverse-Wishart prior constants of gaussian_ppd.
inline constexpr double kNiwKappa0 = 1.0;
inline constexpr double kNiwRidge = 1e-6;

// Dirichlet smoothing per cell when drawing θ from a summary.
inline constexpr double kDirichletPrior = 1.0;

struct PrivateSummary {
  std::shared_ptr<const Schema> schema;
  std::vector<std::vector<double>> noisy_counts;  // may be negative
  std::size_t n_public = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double noise_stddev = 0.0;
  std::string id;
};

// zCDP accounting: eps = rho + 2 sqrt(rho ln(1/delta)).
double zcdp_epsilon(double rho, double delta);
double zcdp_rho(double epsilon, double delta);  // bisection to 1e-12
// Per-column stddev when rho is split evenly over `columns` histograms of
// L2 sensitivity 1.
double gaussian_noise_stddev(double rho, std::size_t columns);

PrivateSummary fit_dp_summary(const Dataset& data, double epsilon, double delta, Seed seed);
// Spends exactly `rho`; epsilon is recorded as the value implied by rho.
PrivateSummary fit_dp_summary_rho(const Dataset& data, double rho, double delta, Seed seed);
// Noise-free counts, i.e. the epsilon = +inf limit.
PrivateSummary exact_summary(const Dataset& data);

// Clip negatives at zero and renormalize; all-zero becomes uniform.
std::vector<double> project_to_simplex(std::span<const double> counts);

// Dirichlet(n_public * p + alpha0) draw per column around the projection p.
MarginalParams sample_params_from_summary(const PrivateSummary& summary, Seed seed);
// The projection itself, without a posterior draw.
MarginalParams project_summary(const PrivateSummary& summary);

std::vector<double> dirichlet(std::span<const double> alpha, Engine& rng);

enum class EnsembleMode { independent, shared_summary, split_budget };

std::string_view to_string(EnsembleMode mode) noexcept;
EnsembleMode parse_ensemble_mode(std::string_view name);

struct ReplicateRecord {
  std::size_t index = 0;
  Seed fit_seed = 0;
  Seed sample_seed = 0;
  std::string summary_id;
  double rho = 0.0;
};

struct EnsembleRecord {
  std::string generator;
  EnsembleMode mode = EnsembleMode::independent;
  Seed seed = 0;
  std::size_t m = 0;
  std::size_t n_rows = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double rho_total = 0.0;
  std::vector<ReplicateRecord> replicates;

  std::string to_json() const;
};

struct GeneratedEnsemble {
  std::vector<Dataset> datasets;
  EnsembleRecord record;
};

GeneratedEnsemble generate_ensemble(const GeneratorSpec& spec, const Dataset& data, std::size_t m,
                                    EnsembleMode mode, Seed seed, Exec exec = Exec::parallel);

}  // namespace genens
