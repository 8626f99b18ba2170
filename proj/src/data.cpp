#include "genens/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "genens/error.hpp"
#include "genens/parallel.hpp"

namespace genens {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Column Column::numeric(std::string name, ColumnRole role) {
  return Column{std::move(name), ColumnKind::numeric, role, {}};
}

Column Column::categorical(std::string name, std::vector<std::string> levels, ColumnRole role) {
  return Column{std::move(name), ColumnKind::categorical, role, std::move(levels)};
}

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::size_t targets = 0;
  std::set<std::string> names;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& c = columns_[i];
    if (c.name.empty()) throw Error("schema: column " + std::to_string(i) + " has no name");
    if (!names.insert(c.name).second) throw Error("schema: duplicate column '" + c.name + "'");
    if (c.role == ColumnRole::target) {
      ++targets;
      target_ = i;
    }
    if (c.kind == ColumnKind::categorical) {
      if (c.levels.empty()) throw Error("schema: categorical column '" + c.name + "' has no levels");
      std::set<std::string> seen;
      for (const auto& level : c.levels) {
        if (level.empty()) throw Error("schema: empty level in column '" + c.name + "'");
        if (!seen.insert(level).second)
          throw Error("schema: duplicate level '" + level + "' in column '" + c.name + "'");
      }
    } else if (!c.levels.empty()) {
      throw Error("schema: numeric column '" + c.name + "' cannot have levels");
    }
  }
  if (targets != 1)
    throw Error("schema: expected exactly one target column, found " + std::to_string(targets));
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

Task Schema::task() const noexcept {
  return target().kind == ColumnKind::categorical ? Task::classification : Task::regression;
}

std::size_t Schema::n_classes() const noexcept {
  return task() == Task::classification ? target().levels.size() : 0;
}

bool Schema::all_numeric() const noexcept {
  return std::all_of(columns_.begin(), columns_.end(),
                     [](const Column& c) { return c.kind == ColumnKind::numeric; });
}

bool Schema::all_categorical() const noexcept {
  return std::all_of(columns_.begin(), columns_.end(),
                     [](const Column& c) { return c.kind == ColumnKind::categorical; });
}

std::uint64_t Schema::fingerprint() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Column& c : columns_) {
    h = fnv1a(h, c.name);
    h = fnv1a(h, c.kind == ColumnKind::numeric ? "#n" : "#c");
    h = fnv1a(h, c.role == ColumnRole::target ? "#t" : "#f");
    for (const auto& level : c.levels) h = fnv1a(fnv1a(h, level), "|");
  }
  return h;
}

Schema parse_schema(std::string_view text) {
  std::vector<Column> columns;
  for (std::string_view item : split(text, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    // Levels may not contain ':' so splitting on it is safe once the level
    // list is cut out.
    std::string_view levels_text;
    std::string rest(item);
    if (const auto open = item.find('('); open != std::string_view::npos) {
      const auto close = item.find(')', open);
      if (close == std::string_view::npos) throw Error("schema: unclosed '(' in '" + rest + "'");
      levels_text = item.substr(open + 1, close - open - 1);
      rest = std::string(item.substr(0, open)) + std::string(item.substr(close + 1));
    }
    const auto parts = split(rest, ':');
    if (parts.size() < 2 || parts.size() > 3)
      throw Error("schema: expected name:kind[:role] in '" + std::string(item) + "'");
    Column c;
    c.name = std::string(trim(parts[0]));
    const auto kind = trim(parts[1]);
    if (kind == "numeric") {
      c.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::categorical;
      for (auto level : split(levels_text, '|')) c.levels.emplace_back(trim(level));
    } else {
      throw Error("schema: unknown column kind '" + std::string(kind) + "'");
    }
    if (parts.size() == 3) {
      const auto role = trim(parts[2]);
      if (role == "target") c.role = ColumnRole::target;
      else if (role == "feature") c.role = ColumnRole::feature;
      else throw Error("schema: unknown column role '" + std::string(role) + "'");
    }
    columns.push_back(std::move(c));
  }
  return Schema(std::move(columns));
}

std::string format_schema(const Schema& schema) {
  std::string out;
  for (const Column& c : schema.columns()) {
    if (!out.empty()) out += ", ";
    out += c.name;
    if (c.kind == ColumnKind::numeric) {
      out += ":numeric";
    } else {
      out += ":categorical(";
      for (std::size_t i = 0; i < c.levels.size(); ++i) out += (i ? "|" : "") + c.levels[i];
      out += ")";
    }
    out += c.role == ColumnRole::target ? ":target" : ":feature";
  }
  return out;
}

Dataset::Dataset(std::shared_ptr<const Schema> schema, std::vector<double> cells,
                 Provenance provenance)
    : schema_(std::move(schema)), cells_(std::move(cells)), provenance_(std::move(provenance)) {
  if (!schema_) throw Error("dataset: null schema");
  const std::size_t c = schema_->size();
  if (cells_.size() % c != 0) throw Error("dataset: cell count is not a multiple of column count");
  rows_ = cells_.size() / c;
  for (std::size_t j = 0; j < c; ++j) {
    const Column& col = schema_->column(j);
    for (std::size_t r = 0; r < rows_; ++r) {
      const double v = cells_[r * c + j];
      if (col.kind == ColumnKind::categorical) {
        if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(col.levels.size()))
          throw Error("dataset: invalid level index in column '" + col.name + "'");
      } else if (!std::isfinite(v)) {
        throw Error("dataset: non-finite value in column '" + col.name + "'");
      }
    }
  }
}

Dataset Dataset::with_provenance(Provenance provenance) const {
  Dataset copy = *this;
  copy.provenance_ = std::move(provenance);
  return copy;
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  const std::size_t c = cols();
  std::vector<double> cells;
  cells.reserve(indices.size() * c);
  for (std::size_t i : indices) {
    if (i >= rows_) throw Error("dataset: row index out of range");
    const auto r = row(i);
    cells.insert(cells.end(), r.begin(), r.end());
  }
  return Dataset(schema_, std::move(cells), provenance_);
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Dataset read_csv(std::istream& in, std::shared_ptr<const Schema> schema) {
  if (!schema) throw Error("csv: null schema");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw Error("csv: empty file");

  const auto header = split(trim(line), ',');
  if (header.size() != schema->size())
    throw Error("csv: header has " + std::to_string(header.size()) + " columns, schema has " +
                std::to_string(schema->size()));
  for (std::size_t j = 0; j < header.size(); ++j)
    if (trim(header[j]) != schema->column(j).name)
      throw Error("csv: header column " + std::to_string(j + 1) + " is '" +
                  std::string(trim(header[j])) + "', schema expects '" +
                  schema->column(j).name + "'");

  std::vector<double> cells;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split(trim(line), ',');
    if (fields.size() != schema->size())
      throw ParseError(row, "*", "expected " + std::to_string(schema->size()) + " fields, got " +
                                     std::to_string(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const Column& col = schema->column(j);
      const auto field = trim(fields[j]);
      if (col.kind == ColumnKind::categorical) {
        const auto it = std::find(col.levels.begin(), col.levels.end(), field);
        if (it == col.levels.end())
          throw ParseError(row, col.name, "unknown level '" + std::string(field) + "'");
        cells.push_back(static_cast<double>(it - col.levels.begin()));
      } else {
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() ||
            !std::isfinite(v))
          throw ParseError(row, col.name, "not a finite number: '" + std::string(field) + "'");
        cells.push_back(v);
      }
    }
  }
  if (row == 0) throw Error("csv: no data rows");
  return Dataset(std::move(schema), std::move(cells));
}

Dataset load_csv(const std::filesystem::path& path, std::shared_ptr<const Schema> schema) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open '" + path.string() + "'");
  return read_csv(in, std::move(schema));
}

void write_csv(std::ostream& out, const Dataset& data) {
  const Schema& schema = data.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) out << (j ? "," : "") << schema.column(j).name;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (j) out << ',';
      const Column& col = schema.column(j);
      const double v = data.at(r, j);
      if (col.kind == ColumnKind::categorical) out << col.levels[static_cast<std::size_t>(v)];
      else out << format_number(v);
    }
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("csv: cannot write '" + path.string() + "'");
  write_csv(out, data);
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction, Seed seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error("split: test fraction must lie in (0, 1)");
  const std::size_t n = data.rows();
  if (n < 2) throw Error("split: need at least two rows");
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test == n) throw Error("split: fraction leaves one side empty");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Engine rng = make_engine(derive_seed(seed, "split"));
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {data.select_rows(train), data.select_rows(test)};
}

Encoder Encoder::fit(const Dataset& train, bool standardize) {
  Encoder enc;
  enc.schema_ = train.schema_ptr();
  for (const Column& c : train.schema().columns()) {
    if (c.role == ColumnRole::target) continue;
    enc.width_ += c.kind == ColumnKind::numeric ? 1 : c.levels.size();
  }
  if (!standardize) return enc;
  if (train.rows() == 0) throw Error("encode: cannot standardize on an empty training set");

  const std::size_t n = train.rows();
  const std::size_t d = enc.width_;
  std::vector<double> encoded(n * d);
  for (std::size_t r = 0; r < n; ++r) enc.encode_row(train.row(r), encoded.data() + r * d);

  Scaler s{std::vector<double>(d), std::vector<double>(d)};
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    bool constant = true;
    for (std::size_t r = 0; r < n; ++r) {
      column[r] = encoded[r * d + j];
      constant = constant && column[r] == column[0];
    }
    if (constant) {
      s.mean[j] = column[0];
      s.stddev[j] = 0.0;
      continue;
    }
    const double mean = pairwise_mean(column);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    s.mean[j] = mean;
    s.stddev[j] = std::sqrt(ss / static_cast<double>(n));
  }
  enc.scaler_ = std::move(s);
  return enc;
}

void Encoder::encode_row(std::span<const double> cells, double* out) const {
  std::size_t k = 0;
  for (std::size_t j = 0; j < schema_->size(); ++j) {
    const Column& c = schema_->column(j);
    if (c.role == ColumnRole::target) continue;
    if (c.kind == ColumnKind::numeric) {
      out[k++] = cells[j];
    } else {
      const auto level = static_cast<std::size_t>(cells[j]);
      for (std::size_t l = 0; l < c.levels.size(); ++l) out[k++] = l == level ? 1.0 : 0.0;
    }
  }
}

FeatureMatrix Encoder::transform(const Dataset& data) const {
  if (!(data.schema() == *schema_)) throw Error("encode: schema mismatch");
  FeatureMatrix fm;
  fm.rows = data.rows();
  fm.cols = width_;
  fm.task = schema_->task();
  fm.n_classes = schema_->n_classes();
  fm.scaler = scaler_;
  fm.fingerprint = fingerprint();
  fm.x.resize(fm.rows * fm.cols);
  for (std::size_t r = 0; r < fm.rows; ++r) {
    double* out = fm.x.data() + r * fm.cols;
    encode_row(data.row(r), out);
    if (scaler_) {
      for (std::size_t j = 0; j < fm.cols; ++j)
        out[j] = scaler_->stddev[j] > 0.0 ? (out[j] - scaler_->mean[j]) / scaler_->stddev[j] : 0.0;
    }
  }
  fm.y = target_values(data);
  return fm;
}

std::uint64_t Encoder::fingerprint() const noexcept {
  return mix64(schema_->fingerprint() ^ (width_ * 0x9e3779b97f4a7c15ULL));
}

FeatureMatrix encode(const Dataset& train, const Dataset& apply_to, bool standardize) {
  return Encoder::fit(train, standardize).transform(apply_to);
}

std::vector<double> target_values(const Dataset& data) {
  const std::size_t t = data.schema().target_index();
  std::vector<double> y(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) y[r] = data.at(r, t);
  return y;
}

}  // namespace genens
