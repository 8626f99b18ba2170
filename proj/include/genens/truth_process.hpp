#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genens/data.hpp"
#include "genens/generators.hpp"
#include "genens/rng.hpp"

namespace genens {

// Fully specified data-generating process with exact ground truth, used to
// verify decompositions by Monte Carlo. For classification processes f(x)
// is P(y = 1 | x) and targets are class indices 0/1.
class TruthProcess {
 public:
  virtual ~TruthProcess() = default;

  virtual std::string id() const = 0;
  virtual const std::shared_ptr<const Schema>& schema() const = 0;
  virtual std::size_t real_rows() const = 0;
  virtual std::size_t synthetic_rows() const = 0;

  virtual Dataset sample_real(std::size_t n, Seed seed) const = 0;
  Dataset sample_real(Seed seed) const { return sample_real(real_rows(), seed); }

  // Exact conditional mean and variance of the target at a row's features.
  virtual double f(std::span<const double> row) const = 0;
  virtual double noise_variance(std::span<const double> row) const = 0;
  virtual double sample_target(std::span<const double> row, Engine& rng) const = 0;

  // θ | D_r.
  virtual Theta draw_theta(const Dataset& real, Seed seed) const = 0;
  // Correlated θ draws: θ = theta_from_latent(D_r, z) with z ~ N(0, I).
  virtual bool supports_correlation() const { return false; }
  virtual std::size_t latent_dim() const { return 0; }
  virtual Theta theta_from_latent(const Dataset& real, std::span<const double> z) const;

  virtual Dataset sample_synthetic(const Theta& theta, std::size_t n, Seed seed) const = 0;
  // Best predictor under the synthetic distribution.
  virtual double f_theta(const Theta& theta, std::span<const double> row) const = 0;

  // Noisy summary level: s̃ | D_r, then θ | s̃.
  virtual bool has_summary() const { return false; }
  virtual PrivateSummary draw_summary(const Dataset& real, Seed seed) const;
  virtual Theta draw_theta_from_summary(const PrivateSummary& summary, Seed seed) const;
};

using ProcessOptions = std::map<std::string, std::string>;

// gaussian_toy: y ~ N(mu, sigma^2) with an irrelevant N(0,1) feature x.
//   options mu, sigma, tau, shift, n_real, n_syn, mode = posterior|perfect|identity
//   posterior: θ ~ N(ybar + shift, tau^2); D_s: n_syn rows with y ~ N(θ, sigma^2)
// linear_toy: x ~ N(0, I_2), y = beta.x + N(0, sigma^2)
//   options beta1, beta2, sigma, prior_sd, n_real, n_syn
//   θ is a draw from the conjugate posterior of beta (known sigma)
// discrete_toy: binary x and y, P(x=1) = px, P(y=1|x) = p0 + (p1 - p0) x
//   options px, p0, p1, n_real, n_syn, epsilon, delta
//   θ: per-column Dirichlet marginals; the summary is a noisy marginal release
std::shared_ptr<const TruthProcess> make_truth_process(std::string_view id,
                                                       const ProcessOptions& options = {});
std::vector<std::string> truth_process_ids();

}  // namespace genens
