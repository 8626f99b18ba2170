#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "genens/data.hpp"
#include "genens/error.hpp"
#include "genens/parallel.hpp"
#include "genens/predictors.hpp"
#include "genens/rng.hpp"

namespace genens::detail {

// Index multisets for a nonparametric bootstrap over n units.
inline std::vector<std::vector<std::size_t>> bootstrap_draws(std::size_t n, std::size_t b,
                                                             Seed seed) {
  std::vector<std::vector<std::size_t>> draws(b);
  for (std::size_t i = 0; i < b; ++i) draws[i] = bootstrap_indices(n, derive_seed(seed, "boot", i));
  return draws;
}

inline double stddev(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

// Scalar prediction per test row: the value, or P(class 1).
inline std::vector<double> scalar_predictions(const FittedModel& model, const Dataset& test) {
  const Predictions p = model.predict(test);
  std::vector<double> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) out[i] = p.scalar(i);
  return out;
}

inline void require_scalar_task(const Schema& schema, const char* who) {
  if (schema.task() == Task::classification && schema.n_classes() != 2)
    throw Error(std::string(who) + ": classification decompositions need a binary target");
}

}  // namespace genens::detail
