#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genens/rng.hpp"

namespace genens {

enum class ColumnKind { numeric, categorical };
enum class ColumnRole { feature, target };
enum class Task { regression, classification };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  ColumnRole role = ColumnRole::feature;
  std::vector<std::string> levels;  // categorical only

  static Column numeric(std::string name, ColumnRole role = ColumnRole::feature);
  static Column categorical(std::string name, std::vector<std::string> levels,
                            ColumnRole role = ColumnRole::feature);

  bool operator==(const Column&) const = default;
};

// Ordered column list with exactly one target column.
class Schema {
 public:
  explicit Schema(std::vector<Column> columns);

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  std::size_t size() const noexcept { return columns_.size(); }
  std::size_t target_index() const noexcept { return target_; }
  const Column& target() const noexcept { return columns_[target_]; }
  std::optional<std::size_t> find(std::string_view name) const;

  // A categorical target makes the task classification.
  Task task() const noexcept;
  std::size_t n_classes() const noexcept;
  bool all_numeric() const noexcept;
  bool all_categorical() const noexcept;

  std::uint64_t fingerprint() const noexcept;

  bool operator==(const Schema& other) const { return columns_ == other.columns_; }

 private:
  std::vector<Column> columns_;
  std::size_t target_ = 0;
};

// Parses the declarative column list used by configs, e.g.
//   "sex:categorical(M|F|I):feature, length:numeric, rings:numeric:target"
// The role defaults to feature.
Schema parse_schema(std::string_view text);
std::string format_schema(const Schema& schema);

struct Provenance {
  enum class Source { real, synthetic };
  Source source = Source::real;
  std::string generator;
  std::size_t replicate = 0;
};

// Row-major table. Categorical cells store the level index as a double.
class Dataset {
 public:
  Dataset(std::shared_ptr<const Schema> schema, std::vector<double> cells,
          Provenance provenance = {});

  const Schema& schema() const noexcept { return *schema_; }
  const std::shared_ptr<const Schema>& schema_ptr() const noexcept { return schema_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return schema_->size(); }
  double at(std::size_t r, std::size_t c) const { return cells_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {cells_.data() + r * cols(), cols()};
  }
  const std::vector<double>& cells() const noexcept { return cells_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  Dataset with_provenance(Provenance provenance) const;
  Dataset select_rows(std::span<const std::size_t> indices) const;

 private:
  std::shared_ptr<const Schema> schema_;
  std::vector<double> cells_;
  std::size_t rows_ = 0;
  Provenance provenance_;
};

Dataset read_csv(std::istream& in, std::shared_ptr<const Schema> schema);
Dataset load_csv(const std::filesystem::path& path, std::shared_ptr<const Schema> schema);
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::filesystem::path& path, const Dataset& data);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

// Uniform permutation split; |test| = round(test_fraction * n). Row order
// inside each part follows the original data.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             Seed seed);

struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; zero marks a constant column
};

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // rows x cols, row-major
  std::vector<double> y;  // regression value or class index
  Task task = Task::regression;
  std::size_t n_classes = 0;
  std::optional<Scaler> scaler;
  std::uint64_t fingerprint = 0;

  std::span<const double> row(std::size_t i) const { return {x.data() + i * cols, cols}; }
};

// One-hot encodes categorical features and optionally standardizes every
// encoded column with statistics fitted on the training rows only.
class Encoder {
 public:
  static Encoder fit(const Dataset& train, bool standardize);

  FeatureMatrix transform(const Dataset& data) const;

  std::size_t width() const noexcept { return width_; }
  const std::optional<Scaler>& scaler() const noexcept { return scaler_; }
  std::uint64_t fingerprint() const noexcept;

 private:
  std::shared_ptr<const Schema> schema_;
  std::size_t width_ = 0;
  std::optional<Scaler> scaler_;

  void encode_row(std::span<const double> cells, double* out) const;
};

FeatureMatrix encode(const Dataset& train, const Dataset& apply_to, bool standardize);

// Target column as regression values or class indices.
std::vector<double> target_values(const Dataset& data);

}  // namespace genens
