#include "genens/truth_process.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "genens/error.hpp"

namespace genens {

Theta TruthProcess::theta_from_latent(const Dataset&, std::span<const double>) const {
  throw Error("truth process '" + id() + "' does not support correlated parameter draws");
}

PrivateSummary TruthProcess::draw_summary(const Dataset&, Seed) const {
  throw Error("truth process '" + id() + "' has no summary sampler");
}

Theta TruthProcess::draw_theta_from_summary(const PrivateSummary&, Seed) const {
  throw Error("truth process '" + id() + "' has no summary sampler");
}

namespace {

class Options {
 public:
  Options(std::string process, const ProcessOptions& options)
      : process_(std::move(process)), options_(options) {}

  double number(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = options_.find(key);
    if (it == options_.end()) return fallback;
    double v = 0.0;
    const std::string& s = it->second;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
      throw Error(process_ + ": option '" + key + "' is not a number: '" + s + "'");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (v < 1.0 || v != std::floor(v))
      throw Error(process_ + ": option '" + key + "' must be a positive integer");
    return static_cast<std::size_t>(v);
  }

  std::string text(const std::string& key, std::string fallback) {
    used_.insert(key);
    const auto it = options_.find(key);
    return it == options_.end() ? fallback : it->second;
  }

  void finish() const {
    for (const auto& [k, v] : options_)
      if (!used_.count(k)) throw Error(process_ + ": unknown option '" + k + "'");
  }

 private:
  std::string process_;
  const ProcessOptions& options_;
  std::set<std::string> used_;
};

double target_mean(const Dataset& d) {
  const auto y = target_values(d);
  return pairwise_mean(y);
}

class GaussianToy final : public TruthProcess {
 public:
  enum class Mode { posterior, perfect, identity };

  explicit GaussianToy(const ProcessOptions& options) {
    Options o("gaussian_toy", options);
    mu_ = o.number("mu", 0.0);
    sigma_ = o.number("sigma", 1.0);
    tau_ = o.number("tau", 0.2);
    shift_ = o.number("shift", 0.0);
    n_real_ = o.count("n_real", 50);
    n_syn_ = o.count("n_syn", 100);
    const std::string mode = o.text("mode", "posterior");
    if (mode == "posterior") mode_ = Mode::posterior;
    else if (mode == "perfect") mode_ = Mode::perfect;
    else if (mode == "identity") mode_ = Mode::identity;
    else throw Error("gaussian_toy: unknown mode '" + mode + "'");
    o.finish();
    if (sigma_ < 0.0 || tau_ < 0.0) throw Error("gaussian_toy: sigma and tau must be non-negative");
    schema_ = std::make_shared<const Schema>(std::vector<Column>{
        Column::numeric("x"), Column::numeric("y", ColumnRole::target)});
  }

  std::string id() const override { return "gaussian_toy"; }
  const std::shared_ptr<const Schema>& schema() const override { return schema_; }
  std::size_t real_rows() const override { return n_real_; }
  std::size_t synthetic_rows() const override { return n_syn_; }

  Dataset sample_real(std::size_t n, Seed seed) const override { return draw(mu_, n, seed); }

  double f(std::span<const double>) const override { return mu_; }
  double noise_variance(std::span<const double>) const override { return sigma_ * sigma_; }
  double sample_target(std::span<const double>, Engine& rng) const override {
    return mu_ + sigma_ * standard_normal(rng);
  }

  Theta draw_theta(const Dataset& real, Seed seed) const override {
    Engine rng = make_engine(seed);
    const double z = mode_ == Mode::posterior ? standard_normal(rng) : 0.0;
    return theta_from_latent(real, std::span<const double>(&z, 1));
  }

  bool supports_correlation() const override { return true; }
  std::size_t latent_dim() const override { return mode_ == Mode::posterior ? 1 : 0; }

  Theta theta_from_latent(const Dataset& real, std::span<const double> z) const override {
    switch (mode_) {
      case Mode::posterior: return Theta{{target_mean(real) + shift_ + tau_ * z[0]}, nullptr};
      case Mode::perfect: return Theta{{mu_ + shift_}, nullptr};
      case Mode::identity:
        return Theta{{target_mean(real)}, std::make_shared<const Dataset>(real)};
    }
    throw Error("gaussian_toy: bad mode");
  }

  Dataset sample_synthetic(const Theta& theta, std::size_t n, Seed seed) const override {
    if (theta.data) return *theta.data;
    return draw(theta.values.at(0), n, seed);
  }

  double f_theta(const Theta& theta, std::span<const double>) const override {
    return theta.values.at(0);
  }

 private:
  Dataset draw(double centre, std::size_t n, Seed seed) const {
    Engine rng = make_engine(seed);
    std::vector<double> cells(2 * n);
    for (std::size_t r = 0; r < n; ++r) {
      cells[2 * r] = standard_normal(rng);
      cells[2 * r + 1] = centre + sigma_ * standard_normal(rng);
    }
    return Dataset(schema_, std::move(cells));
  }

  double mu_, sigma_, tau_, shift_;
  std::size_t n_real_, n_syn_;
  Mode mode_ = Mode::posterior;
  std::shared_ptr<const Schema> schema_;
};

class LinearToy final : public TruthProcess {
 public:
  explicit LinearToy(const ProcessOptions& options) {
    Options o("linear_toy", options);
    beta_ = {o.number("beta1", 1.5), o.number("beta2", -1.0)};
    sigma_ = o.number("sigma", 1.0);
    prior_sd_ = o.number("prior_sd", 10.0);
    n_real_ = o.count("n_real", 100);
    n_syn_ = o.count("n_syn", 100);
    o.finish();
    if (!(sigma_ > 0.0) || !(prior_sd_ > 0.0))
      throw Error("linear_toy: sigma and prior_sd must be positive");
    schema_ = std::make_shared<const Schema>(std::vector<Column>{
        Column::numeric("x1"), Column::numeric("x2"), Column::numeric("y", ColumnRole::target)});
  }

  std::string id() const override { return "linear_toy"; }
  const std::shared_ptr<const Schema>& schema() const override { return schema_; }
  std::size_t real_rows() const override { return n_real_; }
  std::size_t synthetic_rows() const override { return n_syn_; }

  Dataset sample_real(std::size_t n, Seed seed) const override { return draw(beta_, n, seed); }

  double f(std::span<const double> row) const override { return dot(beta_, row); }
  double noise_variance(std::span<const double>) const override { return sigma_ * sigma_; }
  double sample_target(std::span<const double> row, Engine& rng) const override {
    return f(row) + sigma_ * standard_normal(rng);
  }

  Theta draw_theta(const Dataset& real, Seed seed) const override {
    Engine rng = make_engine(seed);
    const double z[2] = {standard_normal(rng), standard_normal(rng)};
    return theta_from_latent(real, z);
  }

  bool supports_correlation() const override { return true; }
  std::size_t latent_dim() const override { return 2; }

  // Conjugate posterior of beta with prior N(0, prior_sd^2 I) and known sigma.
  Theta theta_from_latent(const Dataset& real, std::span<const double> z) const override {
    const auto n = static_cast<Eigen::Index>(real.rows());
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      x(r, 0) = real.at(static_cast<std::size_t>(r), 0);
      x(r, 1) = real.at(static_cast<std::size_t>(r), 1);
      y(r) = real.at(static_cast<std::size_t>(r), 2);
    }
    const double s2 = sigma_ * sigma_;
    const Eigen::Matrix2d precision =
        x.transpose() * x / s2 + Eigen::Matrix2d::Identity() / (prior_sd_ * prior_sd_);
    const Eigen::Matrix2d cov = precision.inverse();
    const Eigen::Vector2d mean = cov * (x.transpose() * y) / s2;
    const Eigen::Matrix2d l = cov.llt().matrixL();
    const Eigen::Vector2d theta = mean + l * Eigen::Vector2d(z[0], z[1]);
    return Theta{{theta(0), theta(1)}, nullptr};
  }

  Dataset sample_synthetic(const Theta& theta, std::size_t n, Seed seed) const override {
    return draw({theta.values.at(0), theta.values.at(1)}, n, seed);
  }

  double f_theta(const Theta& theta, std::span<const double> row) const override {
    return dot({theta.values.at(0), theta.values.at(1)}, row);
  }

 private:
  static double dot(const std::array<double, 2>& b, std::span<const double> row) {
    return b[0] * row[0] + b[1] * row[1];
  }

  Dataset draw(const std::array<double, 2>& b, std::size_t n, Seed seed) const {
    Engine rng = make_engine(seed);
    std::vector<double> cells(3 * n);
    for (std::size_t r = 0; r < n; ++r) {
      double* row = cells.data() + 3 * r;
      row[0] = standard_normal(rng);
      row[1] = standard_normal(rng);
      row[2] = b[0] * row[0] + b[1] * row[1] + sigma_ * standard_normal(rng);
    }
    return Dataset(schema_, std::move(cells));
  }

  std::array<double, 2> beta_;
  double sigma_, prior_sd_;
  std::size_t n_real_, n_syn_;
  std::shared_ptr<const Schema> schema_;
};

class DiscreteToy final : public TruthProcess {
 public:
  explicit DiscreteToy(const ProcessOptions& options) {
    Options o("discrete_toy", options);
    px_ = o.number("px", 0.5);
    p0_ = o.number("p0", 0.3);
    p1_ = o.number("p1", 0.7);
    n_real_ = o.count("n_real", 200);
    n_syn_ = o.count("n_syn", 100);
    epsilon_ = o.number("epsilon", 0.5);
    delta_ = o.number("delta", 1e-5);
    o.finish();
    for (double p : {px_, p0_, p1_})
      if (p < 0.0 || p > 1.0) throw Error("discrete_toy: probabilities must lie in [0, 1]");
    schema_ = std::make_shared<const Schema>(std::vector<Column>{
        Column::categorical("x", {"0", "1"}),
        Column::categorical("y", {"0", "1"}, ColumnRole::target)});
  }

  std::string id() const override { return "discrete_toy"; }
  const std::shared_ptr<const Schema>& schema() const override { return schema_; }
  std::size_t real_rows() const override { return n_real_; }
  std::size_t synthetic_rows() const override { return n_syn_; }

  Dataset sample_real(std::size_t n, Seed seed) const override {
    Engine rng = make_engine(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> cells(2 * n);
    for (std::size_t r = 0; r < n; ++r) {
      cells[2 * r] = u(rng) < px_ ? 1.0 : 0.0;
      cells[2 * r + 1] = u(rng) < f(std::span<const double>(&cells[2 * r], 2)) ? 1.0 : 0.0;
    }
    return Dataset(schema_, std::move(cells));
  }

  double f(std::span<const double> row) const override { return p0_ + (p1_ - p0_) * row[0]; }
  double noise_variance(std::span<const double> row) const override {
    const double p = f(row);
    return p * (1.0 - p);
  }
  double sample_target(std::span<const double> row, Engine& rng) const override {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < f(row) ? 1.0 : 0.0;
  }

  Theta draw_theta(const Dataset& real, Seed seed) const override {
    return flatten(sample_params_from_summary(exact_summary(real), seed));
  }

  Dataset sample_synthetic(const Theta& theta, std::size_t n, Seed seed) const override {
    MarginalParams p;
    p.schema = schema_;
    p.probabilities = {{theta.values.at(0), theta.values.at(1)},
                       {theta.values.at(2), theta.values.at(3)}};
    return sample(p, n, seed);
  }

  double f_theta(const Theta& theta, std::span<const double>) const override {
    return theta.values.at(3);
  }

  bool has_summary() const override { return true; }
  PrivateSummary draw_summary(const Dataset& real, Seed seed) const override {
    return fit_dp_summary(real, epsilon_, delta_, seed);
  }
  Theta draw_theta_from_summary(const PrivateSummary& summary, Seed seed) const override {
    return flatten(sample_params_from_summary(summary, seed));
  }

 private:
  static Theta flatten(const MarginalParams& p) {
    Theta t;
    for (const auto& column : p.probabilities) t.values.insert(t.values.end(), column.begin(), column.end());
    return t;
  }

  double px_, p0_, p1_, epsilon_, delta_;
  std::size_t n_real_, n_syn_;
  std::shared_ptr<const Schema> schema_;
};

}  // namespace

std::shared_ptr<const TruthProcess> make_truth_process(std::string_view id,
                                                       const ProcessOptions& options) {
  if (id == "gaussian_toy") return std::make_shared<const GaussianToy>(options);
  if (id == "linear_toy") return std::make_shared<const LinearToy>(options);
  if (id == "discrete_toy") return std::make_shared<const DiscreteToy>(options);
  throw Error("unknown truth process '" + std::string(id) + "'");
}

std::vector<std::string> truth_process_ids() { return {"discrete_toy", "gaussian_toy", "linear_toy"}; }

}  // namespace genens
