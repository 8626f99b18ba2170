#include "genens/decomposition.hpp"
#include "genens/error.hpp"
#include "mc_support.hpp"

namespace genens {
namespace {

struct ThetaSummary {
  std::vector<double> mean;      // per test point, over the S datasets
  std::vector<double> variance;  // unbiased, over the S datasets
};

struct NestedMeans {
  double mv = 0.0;
  double sdv = 0.0;
  double sdv_corrected = 0.0;
};

NestedMeans aggregate(const std::vector<ThetaSummary>& groups, std::span<const std::size_t> pick,
                      std::size_t s, std::vector<double>* mv_out, std::vector<double>* sdv_out,
                      std::vector<double>* sdvc_out) {
  const std::size_t points = groups.front().mean.size();
  std::vector<double> mv(points);
  std::vector<double> sdv(points);
  std::vector<double> sdvc(points);
  std::vector<double> buf(pick.size());
  for (std::size_t x = 0; x < points; ++x) {
    for (std::size_t j = 0; j < pick.size(); ++j) buf[j] = groups[pick[j]].variance[x];
    mv[x] = pairwise_mean(buf);
    for (std::size_t j = 0; j < pick.size(); ++j) buf[j] = groups[pick[j]].mean[x];
    sdv[x] = sample_variance(buf);
    sdvc[x] = sdv[x] - mv[x] / static_cast<double>(s);
  }
  NestedMeans out{pairwise_mean(mv), pairwise_mean(sdv), pairwise_mean(sdvc)};
  if (mv_out) *mv_out = std::move(mv);
  if (sdv_out) *sdv_out = std::move(sdv);
  if (sdvc_out) *sdvc_out = std::move(sdvc);
  return out;
}

}  // namespace

NestedVariance estimate_mv_sdv_nested(const GeneratorSpec& generator, const Dataset& data,
                                      const PredictorSpec& predictor, const Dataset& test,
                                      const NestedConfig& config, Seed seed) {
  if (config.r_theta < 2 || config.s_per_theta < 2)
    throw Error("nested variance: r_theta and s_per_theta must be at least 2");
  if (test.rows() == 0) throw Error("nested variance: empty test set");
  detail::require_scalar_task(data.schema(), "nested variance");
  generator.validate();
  predictor.validate();

  std::size_t n_rows = data.rows();
  if (generator.kind == GeneratorKind::truth_process) n_rows = generator.process->synthetic_rows();
  if (generator.n_rows) n_rows = *generator.n_rows;
  if (config.n_rows) n_rows = *config.n_rows;

  const std::size_t s = config.s_per_theta;
  std::vector<ThetaSummary> groups(config.r_theta);
  for_each_index(config.exec, config.r_theta, [&](std::size_t i) {
    const Seed theta_seed = derive_seed(seed, "theta", i);
    const GeneratorParams params = fit(generator, data, theta_seed);
    std::vector<std::vector<double>> preds(s);
    for (std::size_t k = 0; k < s; ++k) {
      const Dataset syn = sample(params, n_rows, derive_seed(theta_seed, "syn", k));
      const FittedModel model = fit_model(predictor, syn, derive_seed(theta_seed, "train", k));
      preds[k] = detail::scalar_predictions(model, test);
    }
    ThetaSummary& g = groups[i];
    g.mean.resize(test.rows());
    g.variance.resize(test.rows());
    std::vector<double> buf(s);
    for (std::size_t x = 0; x < test.rows(); ++x) {
      for (std::size_t k = 0; k < s; ++k) buf[k] = preds[k][x];
      g.mean[x] = pairwise_mean(buf);
      g.variance[x] = sample_variance(buf);
    }
  });

  NestedVariance out;
  out.r_theta = config.r_theta;
  out.s_per_theta = s;
  std::vector<std::size_t> all(config.r_theta);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const NestedMeans point = aggregate(groups, all, s, &out.mv, &out.sdv, &out.sdv_corrected);

  std::vector<double> bmv;
  std::vector<double> bsdv;
  std::vector<double> bsdvc;
  std::vector<double> btotal;
  for (const auto& pick : detail::bootstrap_draws(config.r_theta, config.bootstrap,
                                                  derive_seed(seed, "bootstrap"))) {
    const NestedMeans b = aggregate(groups, pick, s, nullptr, nullptr, nullptr);
    bmv.push_back(b.mv);
    bsdv.push_back(b.sdv);
    bsdvc.push_back(b.sdv_corrected);
    btotal.push_back(b.mv + b.sdv);
  }
  out.mv_mean = {point.mv, detail::stddev(bmv)};
  out.sdv_mean = {point.sdv, detail::stddev(bsdv)};
  out.sdv_corrected_mean = {point.sdv_corrected, detail::stddev(bsdvc)};
  out.total = {point.mv + point.sdv, detail::stddev(btotal)};
  return out;
}

}  // namespace genens
