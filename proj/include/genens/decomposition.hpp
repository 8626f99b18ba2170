#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "genens/data.hpp"
#include "genens/ensemble.hpp"
#include "genens/generators.hpp"
#include "genens/metrics.hpp"
#include "genens/parallel.hpp"
#include "genens/predictors.hpp"
#include "genens/truth_process.hpp"

namespace genens {

// ---- rule of thumb: MSE_m = MSE_1 - (1 - 1/m)(MV + SDV) ----

struct RuleOfThumbFit {
  enum class Method { two_point, regression };

  double mse1 = 0.0;
  double mv_plus_sdv = 0.0;
  Method method = Method::two_point;
  // regression only
  double slope = 0.0;
  double intercept = 0.0;
  std::optional<double> slope_std_error;  // needs three or more points
  double r_squared = 1.0;
  std::map<std::size_t, double> points;
};

RuleOfThumbFit fit_rule_two_point(double mse1, double mse2);
// OLS of MSE_m on x_m = 1 - 1/m; mv_plus_sdv = -slope, mse1 = intercept.
RuleOfThumbFit fit_rule_regression(const std::map<std::size_t, double>& points);

double predict_mse(const RuleOfThumbFit& fit, std::size_t m);
// The m -> infinity limit of predict_mse: mse1 - mv_plus_sdv.
double max_benefit(const RuleOfThumbFit& fit);
// Share of the maximal benefit captured by m datasets: (m - 1) / m.
double benefit_fraction(std::size_t m);

// ---- value with a standard error ----

struct Term {
  double value = 0.0;
  double std_error = 0.0;
};

// ---- nested MV / SDV estimation on a fixed dataset ----

struct NestedConfig {
  std::size_t r_theta = 32;
  std::size_t s_per_theta = 5;
  std::optional<std::size_t> n_rows;  // synthetic rows; generator default otherwise
  std::size_t bootstrap = 200;
  Exec exec = Exec::parallel;
};

struct NestedVariance {
  // Per test point. sdv is the plain variance of the θ-level means; the
  // corrected value subtracts the MV / S share those means still carry.
  std::vector<double> mv;
  std::vector<double> sdv;
  std::vector<double> sdv_corrected;
  Term mv_mean;
  Term sdv_mean;
  Term sdv_corrected_mean;
  Term total;  // mv + sdv
  std::size_t r_theta = 0;
  std::size_t s_per_theta = 0;
};

NestedVariance estimate_mv_sdv_nested(const GeneratorSpec& generator, const Dataset& data,
                                      const PredictorSpec& predictor, const Dataset& test,
                                      const NestedConfig& config, Seed seed);

// ---- Monte Carlo oracle on a truth process ----

enum class OracleMode { iid, shared_summary, correlated };

std::string_view to_string(OracleMode mode) noexcept;
OracleMode parse_oracle_mode(std::string_view name);

struct McCounts {
  std::size_t real = 200;     // real datasets
  std::size_t summary = 10;   // noisy summaries per real dataset (shared_summary)
  std::size_t theta = 50;     // parameter draws (pairs in correlated mode)
  std::size_t syn = 20;       // synthetic datasets per parameter draw
  std::size_t y = 10000;      // independent chains for the direct MSE
};

struct OracleConfig {
  OracleMode mode = OracleMode::iid;
  double rho = 0.0;  // correlated mode
  std::size_t m = 1;
  McCounts mc;
  std::size_t test_points = 20;
  std::size_t bootstrap = 200;
  double flag_threshold = 4.0;  // in combined standard errors
  Exec exec = Exec::parallel;
};

struct DecompositionReport {
  std::string process;
  std::string predictor;
  OracleConfig config;
  Seed seed = 0;

  Term mse;  // direct, from independent chains
  Term mv;
  Term sdv;
  Term rdv;
  std::optional<Term> dpvar;
  std::optional<Term> cov;
  Term sdb;
  Term mb;
  Term bias_squared;  // test mean of (SDB + MB)^2
  Term noise;
  Term identity_gap;  // mse minus the sum of the terms
  // MSE minus every other term: the DPVAR the identity implies at this m.
  std::optional<Term> dpvar_implied;
  bool flagged = false;

  std::string to_json() const;
};

DecompositionReport oracle_decompose(const TruthProcess& process, const PredictorSpec& predictor,
                                     const OracleConfig& config, Seed seed);

// Bregman bound Error <= MV + SDV + RDV + Bias + Noise for a dual-averaged
// ensemble of m members with i.i.d. synthetic datasets. Regression processes
// use the squared potential, classification processes the negentropy.
struct BregmanReport {
  std::size_t m = 1;
  Term error;
  Term mv;
  Term sdv;
  Term rdv;
  Term bias;
  Term noise;
  Term bound;     // sum of the five terms
  double slack = 0.0;  // bound - error
  double combined_se = 0.0;
  bool holds = false;  // error <= bound + 3 combined SE
};

BregmanReport oracle_bregman(const TruthProcess& process, const PredictorSpec& predictor,
                             std::size_t m, const McCounts& mc, std::size_t test_points,
                             std::size_t bootstrap, Seed seed, Exec exec = Exec::parallel);

// ---- measured curves ----

// Produces (train, test) for one repeat.
using SplitSource = std::function<std::pair<Dataset, Dataset>(std::size_t repeat, Seed seed)>;

SplitSource fixed_split(Dataset train, Dataset test);
SplitSource random_split(Dataset data, double test_fraction);
// Fresh real and test sets from a truth process on every repeat.
SplitSource process_split(std::shared_ptr<const TruthProcess> process, std::size_t test_rows);

struct CurveConfig {
  std::vector<std::size_t> m_values{1, 2, 4, 8, 16, 32};
  std::size_t repeats = 1;
  std::vector<Averaging> averaging{Averaging::mean};
  std::vector<MetricSpec> metrics{MetricSpec{}};
  EnsembleMode mode = EnsembleMode::independent;
  std::string dataset = "data";
  Exec exec = Exec::parallel;

  void validate() const;
};

struct CurveRow {
  std::string dataset;
  std::string generator;
  std::string mode;
  std::string predictor;
  std::string averaging;
  std::string metric;
  std::size_t m = 0;
  std::size_t repeat = 0;
  double score = 0.0;
  std::optional<double> std_error;
};

struct CurvePoint {
  std::string predictor;
  std::string averaging;
  std::string metric;
  std::size_t m = 0;
  Term score;  // mean over repeats and its standard error
};

struct CurveResult {
  std::vector<CurveRow> rows;
  std::vector<CurvePoint> summary;

  // Per-repeat scores of one (predictor, averaging, metric) cell, indexed
  // [repeat][position in m_values].
  std::vector<std::vector<double>> scores(const std::string& predictor,
                                          const std::string& averaging,
                                          const std::string& metric) const;
};

CurveResult mse_curve(const GeneratorSpec& generator, const SplitSource& source,
                      const std::vector<PredictorSpec>& predictors, const CurveConfig& config,
                      Seed seed);

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curve_csv(std::istream& in);

}  // namespace genens
