#include "genens/bregman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genens/error.hpp"

namespace genens {
namespace {

constexpr double kSimplexTolerance = 1e-9;

void check_dimension(const BregmanSpec& spec, std::size_t n) {
  if (n != spec.dimension)
    throw DomainError("bregman: expected dimension " + std::to_string(spec.dimension) + ", got " +
                      std::to_string(n));
}

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace

Vec to_domain(const BregmanSpec& spec, std::span<const double> v) {
  check_dimension(spec, v.size());
  Vec out(v.begin(), v.end());
  for (double x : out)
    if (!std::isfinite(x)) throw DomainError("bregman: non-finite entry");
  if (spec.kind == BregmanKind::squared) return out;

  double total = 0.0;
  for (double x : out) {
    if (x < -kSimplexTolerance) throw DomainError("bregman: negative probability");
    total += x;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) throw DomainError("bregman: point is not on the simplex");
  total = 0.0;
  for (double& x : out) {
    x = std::max(x, spec.clamp);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

double potential(const BregmanSpec& spec, std::span<const double> v) {
  const Vec x = to_domain(spec, v);
  double f = 0.0;
  for (double t : x) f += spec.kind == BregmanKind::squared ? t * t : t * std::log(t);
  return f;
}

double divergence(const BregmanSpec& spec, std::span<const double> y_in, std::span<const double> g_in) {
  const Vec y = to_domain(spec, y_in);
  const Vec g = to_domain(spec, g_in);
  double d = 0.0;
  if (spec.kind == BregmanKind::squared) {
    for (std::size_t i = 0; i < y.size(); ++i) d += (y[i] - g[i]) * (y[i] - g[i]);
    return d;
  }
  // On the simplex the linear terms cancel and D_F is the KL divergence.
  for (std::size_t i = 0; i < y.size(); ++i) d += y[i] * std::log(y[i] / g[i]);
  return std::max(d, 0.0);
}

Vec dual(const BregmanSpec& spec, std::span<const double> g_in) {
  Vec g = to_domain(spec, g_in);
  for (double& t : g) t = spec.kind == BregmanKind::squared ? 2.0 * t : 1.0 + std::log(t);
  return g;
}

Vec dual_inverse(const BregmanSpec& spec, std::span<const double> u) {
  check_dimension(spec, u.size());
  Vec out(u.begin(), u.end());
  if (spec.kind == BregmanKind::squared) {
    for (double& t : out) t /= 2.0;
    return out;
  }
  const double umax = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& t : out) {
    t = std::exp(t - umax);
    total += t;
  }
  for (double& t : out) t /= total;
  return out;
}

Vec dual_average(const BregmanSpec& spec, std::span<const Vec> predictions,
                 std::span<const double> weights) {
  if (predictions.empty()) throw DomainError("bregman: dual average of an empty list");
  if (weights.size() != predictions.size()) throw DomainError("bregman: weight count mismatch");
  Vec acc(spec.dimension, 0.0);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Vec d = dual(spec, predictions[i]);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += weights[i] * d[j];
    total_weight += weights[i];
  }
  for (double& a : acc) a /= total_weight;
  return dual_inverse(spec, acc);
}

Vec dual_average(const BregmanSpec& spec, std::span<const Vec> predictions) {
  if (predictions.empty()) throw DomainError("bregman: dual average of an empty list");
  return dual_average(spec, predictions, uniform_weights(predictions.size()));
}

CentralStats central_prediction(const BregmanSpec& spec, std::span<const Vec> samples,
                                std::span<const double> weights) {
  CentralStats s;
  s.central = dual_average(spec, samples, weights);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    s.gvar += weights[i] * divergence(spec, s.central, samples[i]);
    total_weight += weights[i];
  }
  s.gvar /= total_weight;
  return s;
}

CentralStats central_prediction(const BregmanSpec& spec, std::span<const Vec> samples) {
  if (samples.empty()) throw DomainError("bregman: central prediction of an empty list");
  return central_prediction(spec, samples, uniform_weights(samples.size()));
}

TotalVarianceCheck check_total_variance(const BregmanSpec& spec,
                                        std::span<const std::vector<Vec>> groups) {
  if (groups.size() < 2) throw DomainError("bregman: need at least two groups");
  std::vector<Vec> pooled;
  std::vector<Vec> centrals;
  std::vector<double> group_weights;
  TotalVarianceCheck out;
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("bregman: empty group");
    const CentralStats cs = central_prediction(spec, g);
    const double w = static_cast<double>(g.size()) / static_cast<double>(total);
    out.within += w * cs.gvar;
    centrals.push_back(cs.central);
    group_weights.push_back(w);
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  out.between = central_prediction(spec, centrals, group_weights).gvar;
  out.lhs = central_prediction(spec, pooled).gvar;
  out.rhs = out.within + out.between;
  out.gap = out.lhs - out.rhs;
  return out;
}

}  // namespace genens
