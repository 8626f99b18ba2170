#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "genens/data.hpp"

namespace genens {

// A single prediction: a one-element vector for regression, a probability
// vector over the target levels for classification.
using Prediction = std::vector<double>;

// Row-major block of predictions for a whole evaluation set.
struct Predictions {
  Task task = Task::regression;
  std::size_t rows = 0;
  std::size_t width = 1;
  std::vector<double> values;

  static Predictions zeros(Task task, std::size_t rows, std::size_t width) {
    return Predictions{task, rows, width, std::vector<double>(rows * width, 0.0)};
  }

  std::span<const double> row(std::size_t i) const { return {values.data() + i * width, width}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * width, width}; }

  // The scalar the MSE decompositions operate on: the regression value, or
  // the probability of class index 1 for binary classification.
  double scalar(std::size_t i) const {
    return task == Task::regression ? values[i] : values[i * width + 1];
  }
};

}  // namespace genens
