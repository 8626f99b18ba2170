#include "genens/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "genens/error.hpp"

namespace genens {
namespace {

void combine_into(std::size_t m, std::size_t width, Averaging averaging, double clamp,
                  const auto& member_row, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (averaging == Averaging::mean) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = member_row(i);
      for (std::size_t c = 0; c < width; ++c) out[c] += row[c];
    }
    for (double& v : out) v /= static_cast<double>(m);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = member_row(i);
    for (std::size_t c = 0; c < width; ++c) out[c] += std::log(std::max(row[c], clamp));
  }
  double zmax = -INFINITY;
  for (double& v : out) {
    v /= static_cast<double>(m);
    zmax = std::max(zmax, v);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - zmax);
    total += v;
  }
  for (double& v : out) v /= total;
}

}  // namespace

std::string_view to_string(Averaging averaging) noexcept {
  return averaging == Averaging::mean ? "mean" : "dual_log_prob";
}

Averaging parse_averaging(std::string_view name) {
  if (name == "mean") return Averaging::mean;
  if (name == "dual_log_prob") return Averaging::dual_log_prob;
  throw Error("unknown averaging '" + std::string(name) + "'");
}

Prediction combine(std::span<const Prediction> members, Averaging averaging, double clamp) {
  if (members.empty()) throw Error("combine: no members");
  const std::size_t width = members[0].size();
  for (const auto& p : members)
    if (p.size() != width) throw Error("combine: members disagree on output width");
  Prediction out(width);
  combine_into(members.size(), width, averaging, clamp,
               [&](std::size_t i) { return std::span<const double>(members[i]); }, out);
  return out;
}

Predictions combine(std::span<const Predictions> members, Averaging averaging, double clamp,
                    std::size_t count) {
  if (members.empty()) throw Error("combine: no members");
  const std::size_t m = count == 0 ? members.size() : count;
  if (m > members.size()) throw Error("combine: count exceeds member count");
  const Predictions& first = members[0];
  if (averaging == Averaging::dual_log_prob && first.task == Task::regression)
    throw Error("combine: dual_log_prob averaging needs class probabilities");
  for (std::size_t i = 0; i < m; ++i)
    if (members[i].rows != first.rows || members[i].width != first.width)
      throw Error("combine: members disagree on shape");

  Predictions out = Predictions::zeros(first.task, first.rows, first.width);
  for (std::size_t r = 0; r < first.rows; ++r)
    combine_into(m, first.width, averaging, clamp,
                 [&](std::size_t i) { return members[i].row(r); }, out.row(r));
  return out;
}

void EnsemblePredictor::validate() const {
  if (members.empty()) throw Error("ensemble: needs at least one member");
  const auto& ref = members.front().model();
  for (const auto& m : members) {
    if (m.model().task() != ref.task() || m.model().fingerprint() != ref.fingerprint())
      throw Error("ensemble: members disagree on task or schema");
  }
  if (averaging == Averaging::dual_log_prob && ref.task() == Task::regression)
    throw Error("ensemble: dual_log_prob averaging is only defined for classification");
}

Predictions ensemble_predict_all(const EnsemblePredictor& ensemble, const Dataset& data, Exec exec) {
  ensemble.validate();
  std::vector<Predictions> per_member(ensemble.members.size());
  for_each_index(exec, per_member.size(),
                 [&](std::size_t i) { per_member[i] = ensemble.members[i].predict(data); });
  return combine(per_member, ensemble.averaging);
}

Prediction ensemble_predict(const EnsemblePredictor& ensemble, const Dataset& data,
                            std::size_t row) {
  const std::size_t r[] = {row};
  const Dataset single = data.select_rows(r);
  const Predictions p = ensemble_predict_all(ensemble, single, Exec::serial);
  return Prediction(p.values.begin(), p.values.end());
}

Score evaluate(const EnsemblePredictor& ensemble, const Dataset& test, const MetricSpec& metric,
               Exec exec) {
  const Predictions p = ensemble_predict_all(ensemble, test, exec);
  return score_predictions(p, target_values(test), metric, exec);
}

}  // namespace genens
