#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genens/parallel.hpp"
#include "genens/prediction.hpp"

namespace genens {

enum class MetricKind {
  mse,
  brier_binary,
  brier_multiclass,
  cross_entropy,
  one_minus_accuracy,
  one_minus_auc,
};

inline constexpr double kProbabilityClamp = 1e-12;

struct MetricSpec {
  MetricKind kind = MetricKind::mse;
  double clamp = kProbabilityClamp;  // floor applied before logarithms

  void validate() const;
};

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric(std::string_view name);
bool metric_supports(MetricKind kind, Task task) noexcept;

// Loss of one prediction against one label (regression value or class
// index). Not defined for one_minus_auc, which is a global statistic.
double point_loss(const MetricSpec& metric, std::span<const double> prediction, double label);

struct Score {
  double score = 0.0;
  std::vector<double> per_point;     // empty for AUC
  std::optional<double> std_error;   // sample stddev / sqrt(n); absent for AUC
};

Score score_predictions(const Predictions& predictions, std::span<const double> labels,
                        const MetricSpec& metric, Exec exec = Exec::parallel);

// Mann-Whitney AUC with half credit for ties; class index 1 is positive.
double auc(std::span<const double> positive_scores, std::span<const double> labels);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

}  // namespace genens
