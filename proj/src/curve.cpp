#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "genens/decomposition.hpp"
#include "genens/error.hpp"

namespace genens {

SplitSource fixed_split(Dataset train, Dataset test) {
  return [train = std::move(train), test = std::move(test)](std::size_t, Seed) {
    return std::make_pair(train, test);
  };
}

SplitSource random_split(Dataset data, double test_fraction) {
  return [data = std::move(data), test_fraction](std::size_t, Seed seed) {
    return train_test_split(data, test_fraction, seed);
  };
}

SplitSource process_split(std::shared_ptr<const TruthProcess> process, std::size_t test_rows) {
  if (!process) throw Error("process_split: no process");
  return [process = std::move(process), test_rows](std::size_t, Seed seed) {
    return std::make_pair(process->sample_real(derive_seed(seed, "real")),
                          process->sample_real(test_rows, derive_seed(seed, "test")));
  };
}

void CurveConfig::validate() const {
  if (m_values.empty()) throw Error("curve: m_values is empty");
  for (std::size_t i = 0; i < m_values.size(); ++i) {
    if (m_values[i] < 1) throw Error("curve: m values must be at least 1");
    if (i > 0 && m_values[i] <= m_values[i - 1])
      throw Error("curve: m_values must be sorted ascending without duplicates");
  }
  if (repeats < 1) throw Error("curve: repeats must be at least 1");
  if (averaging.empty()) throw Error("curve: no averaging modes");
  if (metrics.empty()) throw Error("curve: no metrics");
  for (const auto& m : metrics) m.validate();
  if (dataset.find_first_of(",\n\"") != std::string::npos)
    throw Error("curve: dataset name may not contain commas, quotes or newlines");
}

CurveResult mse_curve(const GeneratorSpec& generator, const SplitSource& source,
                      const std::vector<PredictorSpec>& predictors, const CurveConfig& config,
                      Seed seed) {
  config.validate();
  generator.validate();
  if (predictors.empty()) throw Error("curve: no predictors");
  for (const auto& p : predictors) {
    p.validate();
    for (const auto& metric : config.metrics)
      if (!metric_supports(metric.kind, p.task))
        throw Error("curve: metric " + std::string(to_string(metric.kind)) +
                    " does not apply to predictor " + p.name());
    for (Averaging a : config.averaging)
      if (a == Averaging::dual_log_prob && p.task != Task::classification)
        throw Error("curve: dual_log_prob averaging needs a classification task");
  }
  const std::size_t max_m = config.m_values.back();

  std::vector<std::vector<CurveRow>> per_repeat(config.repeats);
  for_each_index(config.exec, config.repeats, [&](std::size_t r) {
    const auto [train, test] = source(r, derive_seed(seed, "split", r));
    const auto ensemble = generate_ensemble(generator, train, max_m, config.mode,
                                            derive_seed(seed, "generate", r), Exec::serial);
    const std::vector<double> labels = target_values(test);
    const Seed train_seed = derive_seed(seed, "train", r);
    auto& rows = per_repeat[r];
    for (const auto& p : predictors) {
      std::vector<Predictions> members;
      members.reserve(max_m);
      for (std::size_t i = 0; i < max_m; ++i)
        members.push_back(fit_model(p, ensemble.datasets[i], derive_seed(train_seed, "member", i))
                              .predict(test));
      for (Averaging a : config.averaging) {
        for (std::size_t m : config.m_values) {
          const Predictions combined = combine(members, a, kProbabilityClamp, m);
          for (const auto& metric : config.metrics) {
            const Score s = score_predictions(combined, labels, metric, Exec::serial);
            rows.push_back(CurveRow{config.dataset, generator.name(),
                                    std::string(to_string(config.mode)), p.name(),
                                    std::string(to_string(a)), std::string(to_string(metric.kind)),
                                    m, r, s.score, s.std_error});
          }
        }
      }
    }
  });

  CurveResult result;
  for (auto& rows : per_repeat)
    for (auto& row : rows) result.rows.push_back(std::move(row));

  using Key = std::tuple<std::string, std::string, std::string, std::size_t>;
  std::map<Key, std::vector<const CurveRow*>> cells;
  std::vector<Key> order;
  for (const auto& row : result.rows) {
    Key k{row.predictor, row.averaging, row.metric, row.m};
    auto [it, inserted] = cells.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&row);
  }
  for (const auto& k : order) {
    const auto& rows = cells[k];
    std::vector<double> scores;
    for (const auto* row : rows) scores.push_back(row->score);
    CurvePoint pt;
    std::tie(pt.predictor, pt.averaging, pt.metric, pt.m) = k;
    pt.score.value = pairwise_mean(scores);
    if (scores.size() >= 2)
      pt.score.std_error = std::sqrt(sample_variance(scores) / static_cast<double>(scores.size()));
    else
      pt.score.std_error = rows.front()->std_error.value_or(0.0);
    result.summary.push_back(pt);
  }
  return result;
}

std::vector<std::vector<double>> CurveResult::scores(const std::string& predictor,
                                                     const std::string& averaging,
                                                     const std::string& metric) const {
  std::map<std::size_t, std::map<std::size_t, double>> by_repeat;
  for (const auto& row : rows)
    if (row.predictor == predictor && row.averaging == averaging && row.metric == metric)
      by_repeat[row.repeat][row.m] = row.score;
  std::vector<std::vector<double>> out;
  for (const auto& [repeat, by_m] : by_repeat) {
    std::vector<double> v;
    for (const auto& [m, s] : by_m) v.push_back(s);
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

constexpr const char* kCurveHeader =
    "dataset,generator,mode,predictor,averaging,metric,m,repeat,score,std_error";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_field(const std::string& text, std::size_t row, const char* column) {
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ParseError(row, column, "cannot parse '" + text + "'");
  return v;
}

}  // namespace

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << kCurveHeader << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.generator << ',' << r.mode << ',' << r.predictor << ','
        << r.averaging << ',' << r.metric << ',' << r.m << ',' << r.repeat << ','
        << format_number(r.score) << ',';
    if (r.std_error) out << format_number(*r.std_error);
    out << '\n';
  }
}

std::vector<CurveRow> read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("curve csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader) throw Error("curve csv: unexpected header '" + line + "'");
  std::vector<CurveRow> rows;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw ParseError(n, "*", "expected 10 fields");
    CurveRow r{f[0], f[1], f[2], f[3], f[4], f[5],
               parse_field<std::size_t>(f[6], n, "m"), parse_field<std::size_t>(f[7], n, "repeat"),
               parse_field<double>(f[8], n, "score"), std::nullopt};
    if (!f[9].empty()) r.std_error = parse_field<double>(f[9], n, "std_error");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace genens
