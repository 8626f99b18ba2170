#include <cmath>

#include "genens/decomposition.hpp"
#include "genens/error.hpp"

namespace genens {

RuleOfThumbFit fit_rule_two_point(double mse1, double mse2) {
  RuleOfThumbFit fit;
  fit.mse1 = mse1;
  fit.mv_plus_sdv = 2.0 * (mse1 - mse2);
  fit.method = RuleOfThumbFit::Method::two_point;
  fit.slope = -fit.mv_plus_sdv;
  fit.intercept = mse1;
  fit.points = {{1, mse1}, {2, mse2}};
  return fit;
}

RuleOfThumbFit fit_rule_regression(const std::map<std::size_t, double>& points) {
  if (points.size() < 2) throw Error("rule of thumb: need at least two distinct m values");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [m, mse] : points) {
    if (m < 1) throw Error("rule of thumb: m must be at least 1");
    xs.push_back(1.0 - 1.0 / static_cast<double>(m));
    ys.push_back(mse);
  }
  const double xbar = pairwise_mean(xs);
  const double ybar = pairwise_mean(ys);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
    syy += (ys[i] - ybar) * (ys[i] - ybar);
  }

  RuleOfThumbFit fit;
  fit.method = RuleOfThumbFit::Method::regression;
  fit.points = points;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.mse1 = fit.intercept;
  fit.mv_plus_sdv = -fit.slope;

  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  if (xs.size() > 2)
    fit.slope_std_error = std::sqrt(rss / static_cast<double>(xs.size() - 2) / sxx);
  return fit;
}

double predict_mse(const RuleOfThumbFit& fit, std::size_t m) {
  if (m < 1) throw Error("rule of thumb: m must be at least 1");
  if (m == 1) return fit.mse1;
  return fit.mse1 - benefit_fraction(m) * fit.mv_plus_sdv;
}

double max_benefit(const RuleOfThumbFit& fit) { return fit.mse1 - fit.mv_plus_sdv; }

double benefit_fraction(std::size_t m) {
  if (m < 1) throw Error("rule of thumb: m must be at least 1");
  return static_cast<double>(m - 1) / static_cast<double>(m);
}

}  // namespace genens
