#pragma once

#include <memory>
#include <string>
#include <vector>

#include "genens/data.hpp"
#include "genens/rng.hpp"

namespace genens::test {

inline std::shared_ptr<const Schema> numeric_schema(std::size_t features) {
  std::vector<Column> cols;
  for (std::size_t j = 0; j < features; ++j) cols.push_back(Column::numeric("x" + std::to_string(j)));
  cols.push_back(Column::numeric("y", ColumnRole::target));
  return std::make_shared<const Schema>(std::move(cols));
}

inline std::shared_ptr<const Schema> binary_schema(std::size_t features) {
  std::vector<Column> cols;
  for (std::size_t j = 0; j < features; ++j) cols.push_back(Column::numeric("x" + std::to_string(j)));
  cols.push_back(Column::categorical("y", {"0", "1"}, ColumnRole::target));
  return std::make_shared<const Schema>(std::move(cols));
}

// Rows given as {features..., target}.
inline Dataset table(std::shared_ptr<const Schema> schema, const std::vector<std::vector<double>>& rows) {
  std::vector<double> cells;
  for (const auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
  return Dataset(std::move(schema), std::move(cells));
}

// y = sum of features plus N(0, noise^2), features ~ N(0, 1).
inline Dataset random_regression(std::size_t n, std::size_t d, double noise, Seed seed) {
  Engine rng = make_engine(seed);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r;
    double y = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      r.push_back(standard_normal(rng));
      y += r.back();
    }
    r.push_back(y + noise * standard_normal(rng));
    rows.push_back(r);
  }
  return table(numeric_schema(d), rows);
}

inline Dataset random_binary(std::size_t n, std::size_t d, Seed seed) {
  Engine rng = make_engine(seed);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      r.push_back(standard_normal(rng));
      s += r.back();
    }
    r.push_back(s + 0.5 * standard_normal(rng) > 0.0 ? 1.0 : 0.0);
    rows.push_back(r);
  }
  return table(binary_schema(d), rows);
}

}  // namespace genens::test
