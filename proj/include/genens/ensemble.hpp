#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "genens/metrics.hpp"
#include "genens/predictors.hpp"

namespace genens {

// mean: arithmetic mean of member outputs. dual_log_prob: softmax of the mean
// clamped log-probability, i.e. the dual average under cross entropy.
enum class Averaging { mean, dual_log_prob };

std::string_view to_string(Averaging averaging) noexcept;
Averaging parse_averaging(std::string_view name);

// Combines one prediction per member.
Prediction combine(std::span<const Prediction> members, Averaging averaging,
                   double clamp = kProbabilityClamp);

// Combines the first `count` member blocks (all when count == 0).
Predictions combine(std::span<const Predictions> members, Averaging averaging,
                    double clamp = kProbabilityClamp, std::size_t count = 0);

// The generative ensemble: one fitted model per synthetic dataset.
struct EnsemblePredictor {
  std::vector<FittedModel> members;
  Averaging averaging = Averaging::mean;

  void validate() const;
};

Prediction ensemble_predict(const EnsemblePredictor& ensemble, const Dataset& data,
                            std::size_t row);
Predictions ensemble_predict_all(const EnsemblePredictor& ensemble, const Dataset& data,
                                 Exec exec = Exec::parallel);

// Scores the ensemble on a labelled test set.
Score evaluate(const EnsemblePredictor& ensemble, const Dataset& test, const MetricSpec& metric,
               Exec exec = Exec::parallel);

}  // namespace genens
