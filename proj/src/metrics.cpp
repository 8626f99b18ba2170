#include "genens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genens/error.hpp"

namespace genens {

void MetricSpec::validate() const {
  if (!(clamp > 0.0 && clamp <= 1e-3)) throw Error("metric: clamp must lie in (0, 1e-3]");
}

std::string_view to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::mse: return "mse";
    case MetricKind::brier_binary: return "brier_binary";
    case MetricKind::brier_multiclass: return "brier_multiclass";
    case MetricKind::cross_entropy: return "cross_entropy";
    case MetricKind::one_minus_accuracy: return "one_minus_accuracy";
    case MetricKind::one_minus_auc: return "one_minus_auc";
  }
  return "?";
}

MetricKind parse_metric(std::string_view name) {
  for (auto kind : {MetricKind::mse, MetricKind::brier_binary, MetricKind::brier_multiclass,
                    MetricKind::cross_entropy, MetricKind::one_minus_accuracy,
                    MetricKind::one_minus_auc})
    if (to_string(kind) == name) return kind;
  throw Error("unknown metric '" + std::string(name) + "'");
}

bool metric_supports(MetricKind kind, Task task) noexcept {
  return (kind == MetricKind::mse) == (task == Task::regression);
}

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

double point_loss(const MetricSpec& metric, std::span<const double> p, double label) {
  switch (metric.kind) {
    case MetricKind::mse: {
      const double e = p[0] - label;
      return e * e;
    }
    case MetricKind::brier_binary: {
      if (p.size() != 2) throw Error("brier_binary needs exactly two classes");
      const double e = (label == 1.0 ? 1.0 : 0.0) - p[1];
      return e * e;
    }
    case MetricKind::brier_multiclass: {
      double s = 0.0;
      for (std::size_t c = 0; c < p.size(); ++c) {
        const double e = (static_cast<double>(c) == label ? 1.0 : 0.0) - p[c];
        s += e * e;
      }
      return s;
    }
    case MetricKind::cross_entropy:
      return -std::log(std::max(p[static_cast<std::size_t>(label)], metric.clamp));
    case MetricKind::one_minus_accuracy:
      return static_cast<double>(argmax(p)) == label ? 0.0 : 1.0;
    case MetricKind::one_minus_auc:
      break;
  }
  throw Error("one_minus_auc has no per-point loss");
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw Error("auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Rank-sum with average ranks over tied groups.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1.0) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("auc: needs both classes among the labels");
  const double np = static_cast<double>(n_pos);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

Score score_predictions(const Predictions& pred, std::span<const double> labels,
                        const MetricSpec& metric, Exec exec) {
  metric.validate();
  if (pred.rows != labels.size()) throw Error("score: prediction/label count mismatch");
  if (pred.rows == 0) throw Error("score: empty evaluation set");
  if (!metric_supports(metric.kind, pred.task))
    throw Error("metric '" + std::string(to_string(metric.kind)) + "' does not fit the task");

  Score out;
  if (metric.kind == MetricKind::one_minus_auc) {
    if (pred.width != 2) throw Error("auc: binary classification only");
    std::vector<double> positive(pred.rows);
    for (std::size_t i = 0; i < pred.rows; ++i) positive[i] = pred.values[i * 2 + 1];
    out.score = 1.0 - auc(positive, labels);
    return out;
  }

  out.per_point.resize(pred.rows);
  for_each_index(exec, pred.rows,
                 [&](std::size_t i) { out.per_point[i] = point_loss(metric, pred.row(i), labels[i]); });
  out.score = pairwise_mean(out.per_point);
  out.std_error = std::sqrt(sample_variance(out.per_point) / static_cast<double>(pred.rows));
  return out;
}

}  // namespace genens
