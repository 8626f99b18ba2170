#include <cmath>

#include "genens/bregman.hpp"
#include "genens/decomposition.hpp"
#include "genens/error.hpp"
#include "json.hpp"
#include "mc_support.hpp"

namespace genens {
namespace {

// Per-real-dataset sufficient statistics, one entry per test point.
struct RealLevel {
  std::vector<double> mv;     // mean within-θ variance over synthetic datasets
  std::vector<double> sdv;    // variance over θ of θ-level means, MV/K removed
  std::vector<double> cov;    // covariance of paired θ-level means
  std::vector<double> dpvar;  // variance over summaries, θ-level share removed
  std::vector<double> u;      // mean prediction given D_r
  std::vector<double> e;      // estimated sampling variance of u
  std::vector<double> fth;    // mean of f_θ
};

struct Terms {
  double mv = 0.0, sdv = 0.0, cov = 0.0, dpvar = 0.0, rdv = 0.0;
  double sdb = 0.0, mb = 0.0, bias2 = 0.0;
};

void validate(const TruthProcess& process, const OracleConfig& c) {
  if (c.m < 1) throw Error("oracle: m must be at least 1");
  if (c.mc.real < 2 || c.mc.theta < 2 || c.mc.syn < 2 || c.mc.y < 2)
    throw Error("oracle: Monte Carlo counts must be at least 2 at every level");
  if (c.mode == OracleMode::shared_summary) {
    if (!process.has_summary())
      throw Error("oracle: process '" + process.id() + "' has no summary sampler");
    if (c.mc.summary < 2) throw Error("oracle: need at least 2 summaries per real dataset");
  }
  if (c.mode == OracleMode::correlated) {
    if (!process.supports_correlation())
      throw Error("oracle: process '" + process.id() + "' does not support correlated draws");
    if (!(c.rho >= 0.0 && c.rho <= 1.0)) throw Error("oracle: rho must lie in [0, 1]");
  }
  if (c.test_points < 1) throw Error("oracle: need at least one test point");
  if (c.bootstrap < 2) throw Error("oracle: need at least 2 bootstrap replicates");
}

// Draws `count` parameter vectors for one node of the tree. Correlated draws
// share a common latent component with weight sqrt(rho).
std::vector<Theta> draw_thetas(const TruthProcess& process, const OracleConfig& c,
                               const Dataset& real, const PrivateSummary* summary,
                               std::size_t count, Seed seed) {
  std::vector<Theta> out;
  out.reserve(count);
  if (c.mode == OracleMode::correlated) {
    const std::size_t d = process.latent_dim();
    Engine rng = make_engine(seed);
    std::vector<double> common(d);
    for (double& v : common) v = standard_normal(rng);
    const double a = std::sqrt(c.rho);
    const double b = std::sqrt(1.0 - c.rho);
    std::vector<double> z(d);
    for (std::size_t g = 0; g < count; ++g) {
      for (std::size_t j = 0; j < d; ++j) z[j] = a * common[j] + b * standard_normal(rng);
      out.push_back(process.theta_from_latent(real, z));
    }
    return out;
  }
  for (std::size_t g = 0; g < count; ++g) {
    const Seed s = derive_seed(seed, "theta", g);
    out.push_back(summary ? process.draw_theta_from_summary(*summary, s)
                          : process.draw_theta(real, s));
  }
  return out;
}

std::vector<double> predict_scalar(const TruthProcess& process, const PredictorSpec& predictor,
                                   const Theta& theta, const Dataset& test, Seed seed) {
  const Dataset syn = process.sample_synthetic(theta, process.synthetic_rows(), derive_seed(seed, "syn"));
  const FittedModel model = fit_model(predictor, syn, derive_seed(seed, "train"));
  return detail::scalar_predictions(model, test);
}

RealLevel simulate_real(const TruthProcess& process, const PredictorSpec& predictor,
                        const OracleConfig& c, const Dataset& test, Seed seed) {
  const Dataset real = process.sample_real(derive_seed(seed, "real"));
  const bool shared = c.mode == OracleMode::shared_summary;
  const std::size_t ns = shared ? c.mc.summary : 1;
  const std::size_t nt = c.mc.theta;
  const std::size_t ng = c.mode == OracleMode::correlated ? 2 : 1;
  const std::size_t nk = c.mc.syn;
  const std::size_t nx = test.rows();

  RealLevel out;
  out.mv.assign(nx, 0.0);
  out.sdv.assign(nx, 0.0);
  out.cov.assign(nx, 0.0);
  out.dpvar.assign(nx, 0.0);
  out.u.assign(nx, 0.0);
  out.e.assign(nx, 0.0);
  out.fth.assign(nx, 0.0);

  // a[s][x]: mean prediction given summary s; w[s][x]: its estimated variance.
  std::vector<std::vector<double>> a(ns, std::vector<double>(nx));
  std::vector<std::vector<double>> w(ns, std::vector<double>(nx));
  std::vector<double> mv_acc(nx, 0.0), sdv_acc(nx, 0.0), cov_acc(nx, 0.0), fth_acc(nx, 0.0);
  std::vector<double> buf(nk);

  for (std::size_t s = 0; s < ns; ++s) {
    const Seed s_seed = derive_seed(seed, "summary", s);
    std::optional<PrivateSummary> summary;
    if (shared) summary = process.draw_summary(real, s_seed);

    // mu[g][t][x] and v[g][t][x]
    std::vector<std::vector<std::vector<double>>> mu(ng, std::vector<std::vector<double>>(nt));
    std::vector<std::vector<std::vector<double>>> var(ng, std::vector<std::vector<double>>(nt));
    for (std::size_t t = 0; t < nt; ++t) {
      const Seed t_seed = derive_seed(s_seed, "group", t);
      const auto thetas = draw_thetas(process, c, real, summary ? &*summary : nullptr, ng, t_seed);
      for (std::size_t g = 0; g < ng; ++g) {
        std::vector<std::vector<double>> preds(nk);
        for (std::size_t k = 0; k < nk; ++k)
          preds[k] = predict_scalar(process, predictor, thetas[g], test,
                                    derive_seed(t_seed, "member", g * nk + k));
        mu[g][t].resize(nx);
        var[g][t].resize(nx);
        for (std::size_t x = 0; x < nx; ++x) {
          for (std::size_t k = 0; k < nk; ++k) buf[k] = preds[k][x];
          mu[g][t][x] = pairwise_mean(buf);
          var[g][t][x] = sample_variance(buf);
          fth_acc[x] += process.f_theta(thetas[g], test.row(x));
        }
      }
    }

    std::vector<double> col(nt);
    std::vector<double> col2(nt);
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t g = 0; g < ng; ++g) {
        for (std::size_t t = 0; t < nt; ++t) col[t] = var[g][t][x];
        const double mean_var = pairwise_mean(col);
        mv_acc[x] += mean_var;
        for (std::size_t t = 0; t < nt; ++t) col[t] = mu[g][t][x];
        sdv_acc[x] += sample_variance(col) - mean_var / static_cast<double>(nk);
      }
      if (ng == 2) {
        for (std::size_t t = 0; t < nt; ++t) {
          col[t] = mu[0][t][x];
          col2[t] = mu[1][t][x];
        }
        cov_acc[x] += sample_covariance(col, col2);
      }
      for (std::size_t t = 0; t < nt; ++t) {
        double q = 0.0;
        for (std::size_t g = 0; g < ng; ++g) q += mu[g][t][x];
        col[t] = q / static_cast<double>(ng);
      }
      a[s][x] = pairwise_mean(col);
      w[s][x] = sample_variance(col) / static_cast<double>(nt);
    }
  }

  std::vector<double> sa(ns), sw(ns);
  for (std::size_t x = 0; x < nx; ++x) {
    out.mv[x] = mv_acc[x] / static_cast<double>(ns * ng);
    out.sdv[x] = sdv_acc[x] / static_cast<double>(ns * ng);
    out.cov[x] = cov_acc[x] / static_cast<double>(ns);
    out.fth[x] = fth_acc[x] / static_cast<double>(ns * nt * ng);
    for (std::size_t s = 0; s < ns; ++s) {
      sa[s] = a[s][x];
      sw[s] = w[s][x];
    }
    out.u[x] = pairwise_mean(sa);
    if (ns >= 2) {
      const double between = sample_variance(sa);
      out.dpvar[x] = between - pairwise_mean(sw);
      out.e[x] = between / static_cast<double>(ns);
    } else {
      out.e[x] = sw[0];
    }
  }
  return out;
}

Terms aggregate(const std::vector<RealLevel>& levels, std::span<const std::size_t> pick,
                std::span<const double> f) {
  const std::size_t nx = f.size();
  const double n = static_cast<double>(pick.size());
  std::vector<double> mv(nx), sdv(nx), cov(nx), dpvar(nx), rdv(nx), sdb(nx), mb(nx), bias2(nx);
  std::vector<double> col(pick.size());
  const auto mean_of = [&](auto member, std::size_t x) {
    for (std::size_t j = 0; j < pick.size(); ++j) col[j] = (levels[pick[j]].*member)[x];
    return pairwise_mean(col);
  };
  for (std::size_t x = 0; x < nx; ++x) {
    mv[x] = mean_of(&RealLevel::mv, x);
    sdv[x] = mean_of(&RealLevel::sdv, x);
    cov[x] = mean_of(&RealLevel::cov, x);
    dpvar[x] = mean_of(&RealLevel::dpvar, x);
    const double e = mean_of(&RealLevel::e, x);
    const double fth = mean_of(&RealLevel::fth, x);
    const double u = mean_of(&RealLevel::u, x);
    // col now holds u_r; its spread is the real-data variance.
    const double var_u = sample_variance(col);
    rdv[x] = var_u - e;
    sdb[x] = f[x] - fth;
    mb[x] = fth - u;
    const double b = f[x] - u;
    bias2[x] = b * b - var_u / n;
  }
  Terms t;
  t.mv = pairwise_mean(mv);
  t.sdv = pairwise_mean(sdv);
  t.cov = pairwise_mean(cov);
  t.dpvar = pairwise_mean(dpvar);
  t.rdv = pairwise_mean(rdv);
  t.sdb = pairwise_mean(sdb);
  t.mb = pairwise_mean(mb);
  t.bias2 = pairwise_mean(bias2);
  return t;
}

double reducible_sum(const Terms& t, const OracleConfig& c, bool with_dpvar) {
  const double m = static_cast<double>(c.m);
  double s = t.mv / m + t.sdv / m + t.rdv + t.bias2;
  if (c.mode == OracleMode::correlated) s += (1.0 - 1.0 / m) * t.cov;
  if (with_dpvar && c.mode == OracleMode::shared_summary) s += t.dpvar;
  return s;
}

// Independent chains D_r -> (s) -> θ_1:m -> D_s^1:m -> y, scored directly.
Term direct_mse(const TruthProcess& process, const PredictorSpec& predictor, const OracleConfig& c,
                const Dataset& test, Seed seed) {
  std::vector<double> loss(c.mc.y);
  const std::size_t nx = test.rows();
  for_each_index(c.exec, c.mc.y, [&](std::size_t q) {
    const Seed q_seed = derive_seed(seed, "chain", q);
    const Dataset real = process.sample_real(derive_seed(q_seed, "real"));
    std::optional<PrivateSummary> summary;
    if (c.mode == OracleMode::shared_summary)
      summary = process.draw_summary(real, derive_seed(q_seed, "summary"));
    const auto thetas = draw_thetas(process, c, real, summary ? &*summary : nullptr, c.m,
                                    derive_seed(q_seed, "group"));
    std::vector<double> ensemble(nx, 0.0);
    for (std::size_t i = 0; i < c.m; ++i) {
      const auto p = predict_scalar(process, predictor, thetas[i], test,
                                    derive_seed(q_seed, "member", i));
      for (std::size_t x = 0; x < nx; ++x) ensemble[x] += p[x];
    }
    Engine rng = make_engine(derive_seed(q_seed, "y"));
    std::vector<double> l(nx);
    for (std::size_t x = 0; x < nx; ++x) {
      const double g = ensemble[x] / static_cast<double>(c.m);
      const double y = process.sample_target(test.row(x), rng);
      l[x] = (y - g) * (y - g);
    }
    loss[q] = pairwise_mean(l);
  });
  return {pairwise_mean(loss), detail::stddev(loss) / std::sqrt(static_cast<double>(loss.size()))};
}

nlohmann::ordered_json term_json(const Term& t) {
  return nlohmann::ordered_json{{"value", t.value}, {"std_error", t.std_error}};
}

}  // namespace

std::string_view to_string(OracleMode mode) noexcept {
  switch (mode) {
    case OracleMode::iid: return "iid";
    case OracleMode::shared_summary: return "shared_summary";
    case OracleMode::correlated: return "correlated";
  }
  return "unknown";
}

OracleMode parse_oracle_mode(std::string_view name) {
  for (auto m : {OracleMode::iid, OracleMode::shared_summary, OracleMode::correlated})
    if (to_string(m) == name) return m;
  throw Error("unknown oracle mode '" + std::string(name) + "'");
}

DecompositionReport oracle_decompose(const TruthProcess& process, const PredictorSpec& predictor,
                                     const OracleConfig& config, Seed seed) {
  validate(process, config);
  predictor.validate();
  detail::require_scalar_task(*process.schema(), "oracle");

  const Dataset test = process.sample_real(config.test_points, derive_seed(seed, "test"));
  std::vector<double> f(test.rows());
  std::vector<double> noise(test.rows());
  for (std::size_t x = 0; x < test.rows(); ++x) {
    f[x] = process.f(test.row(x));
    noise[x] = process.noise_variance(test.row(x));
  }

  std::vector<RealLevel> levels(config.mc.real);
  for_each_index(config.exec, config.mc.real, [&](std::size_t r) {
    levels[r] = simulate_real(process, predictor, config, test, derive_seed(seed, "nested", r));
  });

  DecompositionReport rep;
  rep.process = process.id();
  rep.predictor = predictor.name();
  rep.config = config;
  rep.seed = seed;
  rep.mse = direct_mse(process, predictor, config, test, derive_seed(seed, "direct"));

  std::vector<std::size_t> all(levels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Terms point = aggregate(levels, all, f);
  const double noise_mean = pairwise_mean(noise);

  std::vector<double> b_mv, b_sdv, b_cov, b_dp, b_rdv, b_sdb, b_mb, b_bias, b_sum, b_rest;
  for (const auto& pick : detail::bootstrap_draws(levels.size(), config.bootstrap,
                                                  derive_seed(seed, "bootstrap"))) {
    const Terms t = aggregate(levels, pick, f);
    b_mv.push_back(t.mv);
    b_sdv.push_back(t.sdv);
    b_cov.push_back(t.cov);
    b_dp.push_back(t.dpvar);
    b_rdv.push_back(t.rdv);
    b_sdb.push_back(t.sdb);
    b_mb.push_back(t.mb);
    b_bias.push_back(t.bias2);
    b_sum.push_back(reducible_sum(t, config, true));
    b_rest.push_back(reducible_sum(t, config, false));
  }
  rep.mv = {point.mv, detail::stddev(b_mv)};
  rep.sdv = {point.sdv, detail::stddev(b_sdv)};
  rep.rdv = {point.rdv, detail::stddev(b_rdv)};
  rep.sdb = {point.sdb, detail::stddev(b_sdb)};
  rep.mb = {point.mb, detail::stddev(b_mb)};
  rep.bias_squared = {point.bias2, detail::stddev(b_bias)};
  rep.noise = {noise_mean, 0.0};
  if (config.mode == OracleMode::correlated) rep.cov = Term{point.cov, detail::stddev(b_cov)};

  const double sum = reducible_sum(point, config, true) + noise_mean;
  const double se_sum = detail::stddev(b_sum);
  rep.identity_gap = {rep.mse.value - sum, std::hypot(rep.mse.std_error, se_sum)};
  rep.flagged = std::abs(rep.identity_gap.value) > config.flag_threshold * rep.identity_gap.std_error;

  if (config.mode == OracleMode::shared_summary) {
    rep.dpvar = Term{point.dpvar, detail::stddev(b_dp)};
    const double rest = reducible_sum(point, config, false) + noise_mean;
    rep.dpvar_implied = Term{rep.mse.value - rest, std::hypot(rep.mse.std_error, detail::stddev(b_rest))};
  }
  return rep;
}

std::string DecompositionReport::to_json() const {
  nlohmann::ordered_json j;
  j["process"] = process;
  j["predictor"] = predictor;
  j["mode"] = std::string(genens::to_string(config.mode));
  if (config.mode == OracleMode::correlated) j["rho"] = config.rho;
  j["m"] = config.m;
  j["seed"] = seed;
  j["mc"] = {{"real", config.mc.real},   {"summary", config.mc.summary}, {"theta", config.mc.theta},
             {"syn", config.mc.syn},     {"y", config.mc.y}};
  j["test_points"] = config.test_points;
  j["bootstrap"] = config.bootstrap;
  nlohmann::ordered_json terms;
  terms["mse"] = term_json(mse);
  terms["mv"] = term_json(mv);
  terms["sdv"] = term_json(sdv);
  terms["rdv"] = term_json(rdv);
  if (dpvar) terms["dpvar"] = term_json(*dpvar);
  if (cov) terms["cov"] = term_json(*cov);
  terms["sdb"] = term_json(sdb);
  terms["mb"] = term_json(mb);
  terms["bias_squared"] = term_json(bias_squared);
  terms["noise"] = term_json(noise);
  j["terms"] = terms;
  if (dpvar_implied) j["dpvar_implied"] = term_json(*dpvar_implied);
  j["identity_gap"] = term_json(identity_gap);
  j["flag_threshold"] = config.flag_threshold;
  j["flagged"] = flagged;
  return j.dump(2) + "\n";
}

// ---- Bregman bound ----

namespace {

std::vector<Vec> prediction_vectors(const FittedModel& model, const Dataset& test) {
  const Predictions p = model.predict(test);
  std::vector<Vec> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) {
    const auto r = p.row(i);
    out[i].assign(r.begin(), r.end());
  }
  return out;
}

struct BregmanLevel {
  std::vector<double> mv;
  std::vector<double> sdv;
  std::vector<Vec> central;  // per test point
};

struct BregmanTerms {
  double mv = 0.0, sdv = 0.0, rdv = 0.0, bias = 0.0;
};

BregmanTerms aggregate_bregman(const BregmanSpec& spec, const std::vector<BregmanLevel>& levels,
                               std::span<const std::size_t> pick, const std::vector<Vec>& ey) {
  const std::size_t nx = ey.size();
  std::vector<double> mv(nx), sdv(nx), rdv(nx), bias(nx);
  std::vector<double> col(pick.size());
  std::vector<Vec> centrals(pick.size());
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t j = 0; j < pick.size(); ++j) col[j] = levels[pick[j]].mv[x];
    mv[x] = pairwise_mean(col);
    for (std::size_t j = 0; j < pick.size(); ++j) col[j] = levels[pick[j]].sdv[x];
    sdv[x] = pairwise_mean(col);
    for (std::size_t j = 0; j < pick.size(); ++j) centrals[j] = levels[pick[j]].central[x];
    const CentralStats cs = central_prediction(spec, centrals);
    rdv[x] = cs.gvar;
    bias[x] = divergence(spec, ey[x], cs.central);
  }
  return {pairwise_mean(mv), pairwise_mean(sdv), pairwise_mean(rdv), pairwise_mean(bias)};
}

}  // namespace

BregmanReport oracle_bregman(const TruthProcess& process, const PredictorSpec& predictor,
                             std::size_t m, const McCounts& mc, std::size_t test_points,
                             std::size_t bootstrap, Seed seed, Exec exec) {
  if (m < 1) throw Error("bregman oracle: m must be at least 1");
  if (mc.real < 2 || mc.theta < 2 || mc.syn < 2 || mc.y < 2)
    throw Error("bregman oracle: Monte Carlo counts must be at least 2 at every level");
  predictor.validate();
  const Schema& schema = *process.schema();
  detail::require_scalar_task(schema, "bregman oracle");
  const bool classification = schema.task() == Task::classification;
  const BregmanSpec spec{classification ? BregmanKind::negentropy : BregmanKind::squared,
                         classification ? schema.n_classes() : 1, kProbabilityClamp};

  const Dataset test = process.sample_real(test_points, derive_seed(seed, "test"));
  const std::size_t nx = test.rows();
  std::vector<Vec> ey(nx);
  std::vector<double> noise(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    const double f = process.f(test.row(x));
    if (classification) {
      ey[x] = {1.0 - f, f};
      const Vec e0{1.0, 0.0};
      const Vec e1{0.0, 1.0};
      noise[x] = (1.0 - f) * divergence(spec, e0, ey[x]) + f * divergence(spec, e1, ey[x]);
    } else {
      ey[x] = {f};
      noise[x] = process.noise_variance(test.row(x));
    }
  }

  std::vector<BregmanLevel> levels(mc.real);
  for_each_index(exec, mc.real, [&](std::size_t r) {
    const Seed r_seed = derive_seed(seed, "nested", r);
    const Dataset real = process.sample_real(derive_seed(r_seed, "real"));
    // g[t][k][x]
    std::vector<std::vector<std::vector<Vec>>> g(mc.theta, std::vector<std::vector<Vec>>(mc.syn));
    for (std::size_t t = 0; t < mc.theta; ++t) {
      const Seed t_seed = derive_seed(r_seed, "theta", t);
      const Theta theta = process.draw_theta(real, t_seed);
      for (std::size_t k = 0; k < mc.syn; ++k) {
        const Seed k_seed = derive_seed(t_seed, "member", k);
        const Dataset syn = process.sample_synthetic(theta, process.synthetic_rows(),
                                                     derive_seed(k_seed, "syn"));
        g[t][k] = prediction_vectors(fit_model(predictor, syn, derive_seed(k_seed, "train")), test);
      }
    }
    BregmanLevel& lv = levels[r];
    lv.mv.resize(nx);
    lv.sdv.resize(nx);
    lv.central.resize(nx);
    std::vector<Vec> members(mc.syn);
    std::vector<Vec> theta_centrals(mc.theta);
    std::vector<double> gv(mc.theta);
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t t = 0; t < mc.theta; ++t) {
        for (std::size_t k = 0; k < mc.syn; ++k) members[k] = g[t][k][x];
        const CentralStats cs = central_prediction(spec, members);
        theta_centrals[t] = cs.central;
        gv[t] = cs.gvar;
      }
      lv.mv[x] = pairwise_mean(gv);
      const CentralStats between = central_prediction(spec, theta_centrals);
      lv.sdv[x] = between.gvar;
      lv.central[x] = between.central;
    }
  });

  std::vector<double> loss(mc.y);
  for_each_index(exec, mc.y, [&](std::size_t q) {
    const Seed q_seed = derive_seed(seed, "chain", q);
    const Dataset real = process.sample_real(derive_seed(q_seed, "real"));
    std::vector<std::vector<Vec>> members(m);
    for (std::size_t i = 0; i < m; ++i) {
      const Seed i_seed = derive_seed(q_seed, "member", i);
      const Theta theta = process.draw_theta(real, derive_seed(i_seed, "theta"));
      const Dataset syn = process.sample_synthetic(theta, process.synthetic_rows(),
                                                   derive_seed(i_seed, "syn"));
      members[i] = prediction_vectors(fit_model(predictor, syn, derive_seed(i_seed, "train")), test);
    }
    Engine rng = make_engine(derive_seed(q_seed, "y"));
    std::vector<double> l(nx);
    std::vector<Vec> at(m);
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t i = 0; i < m; ++i) at[i] = members[i][x];
      const Vec ens = dual_average(spec, at);
      const double y = process.sample_target(test.row(x), rng);
      Vec yv;
      if (classification) {
        yv.assign(spec.dimension, 0.0);
        yv[static_cast<std::size_t>(y)] = 1.0;
      } else {
        yv = {y};
      }
      l[x] = divergence(spec, yv, ens);
    }
    loss[q] = pairwise_mean(l);
  });

  BregmanReport rep;
  rep.m = m;
  rep.error = {pairwise_mean(loss), detail::stddev(loss) / std::sqrt(static_cast<double>(mc.y))};
  std::vector<std::size_t> all(levels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const BregmanTerms point = aggregate_bregman(spec, levels, all, ey);
  const double noise_mean = pairwise_mean(noise);

  std::vector<double> b_mv, b_sdv, b_rdv, b_bias, b_sum;
  for (const auto& pick : detail::bootstrap_draws(levels.size(), bootstrap,
                                                  derive_seed(seed, "bootstrap"))) {
    const BregmanTerms t = aggregate_bregman(spec, levels, pick, ey);
    b_mv.push_back(t.mv);
    b_sdv.push_back(t.sdv);
    b_rdv.push_back(t.rdv);
    b_bias.push_back(t.bias);
    b_sum.push_back(t.mv + t.sdv + t.rdv + t.bias);
  }
  rep.mv = {point.mv, detail::stddev(b_mv)};
  rep.sdv = {point.sdv, detail::stddev(b_sdv)};
  rep.rdv = {point.rdv, detail::stddev(b_rdv)};
  rep.bias = {point.bias, detail::stddev(b_bias)};
  rep.noise = {noise_mean, 0.0};
  rep.bound = {point.mv + point.sdv + point.rdv + point.bias + noise_mean, detail::stddev(b_sum)};
  rep.slack = rep.bound.value - rep.error.value;
  rep.combined_se = std::hypot(rep.error.std_error, rep.bound.std_error);
  rep.holds = rep.error.value <= rep.bound.value + 3.0 * rep.combined_se;
  return rep;
}

}  // namespace genens
