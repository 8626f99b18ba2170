#include <cmath>

#include "doctest.h"
#include "genens/ensemble.hpp"
#include "genens/error.hpp"
#include "genens/metrics.hpp"
#include "support.hpp"

using namespace genens;

namespace {

double brute_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double credit = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1.0 && y[j] == 0.0) {
        pairs += 1.0;
        credit += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return credit / pairs;
}

Predictions binary_block(const std::vector<double>& p1) {
  Predictions p = Predictions::zeros(Task::classification, p1.size(), 2);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    p.values[2 * i] = 1.0 - p1[i];
    p.values[2 * i + 1] = p1[i];
  }
  return p;
}

}  // namespace

TEST_CASE("metric examples") {
  Predictions r = Predictions::zeros(Task::regression, 2, 1);
  r.values = {3, 1};
  const std::vector<double> ones{1, 1};
  const Score s = score_predictions(r, ones, MetricSpec{MetricKind::mse});
  CHECK(s.score == 2.0);
  CHECK(s.per_point == std::vector<double>{4, 0});
  REQUIRE(s.std_error);
  CHECK(*s.std_error == doctest::Approx(2.0));

  const std::vector<double> p{0.25, 0.75};
  CHECK(point_loss(MetricSpec{MetricKind::brier_binary}, p, 1) == 0.0625);
  CHECK(point_loss(MetricSpec{MetricKind::brier_multiclass}, p, 1) == 0.125);
  const std::vector<double> half{0.5, 0.5};
  CHECK(point_loss(MetricSpec{MetricKind::cross_entropy}, half, 0) == doctest::Approx(0.693147180559945));
  const std::vector<double> hard{1.0, 0.0};
  CHECK(point_loss(MetricSpec{MetricKind::cross_entropy}, hard, 1) == doctest::Approx(-std::log(1e-12)));
  CHECK(point_loss(MetricSpec{MetricKind::one_minus_accuracy}, half, 0) == 0.0);
  CHECK(point_loss(MetricSpec{MetricKind::one_minus_accuracy}, half, 1) == 1.0);

  CHECK_THROWS_AS((MetricSpec{MetricKind::mse, 0.0}.validate()), Error);
  CHECK_THROWS_AS((MetricSpec{MetricKind::mse, 1e-2}.validate()), Error);
  CHECK_THROWS_AS(score_predictions(r, ones, MetricSpec{MetricKind::brier_binary}), Error);
  CHECK(parse_metric(to_string(MetricKind::one_minus_auc)) == MetricKind::one_minus_auc);
}

TEST_CASE("brier multiclass is twice brier binary") {
  Engine rng = make_engine(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double q = u(rng);
    const std::vector<double> p{1.0 - q, q};
    const double y = i % 2;
    const double b = point_loss(MetricSpec{MetricKind::brier_binary}, p, y);
    const double mc = point_loss(MetricSpec{MetricKind::brier_multiclass}, p, y);
    CHECK(std::abs(mc - 2.0 * b) <= 1e-12);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
    CHECK(mc <= 2.0);
  }
}

TEST_CASE("auc against all pairs") {
  CHECK(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<double>{0, 0, 1, 1}) == 1.0);
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<double>{0, 0, 1, 1}) == 0.0);
  CHECK(auc(std::vector<double>(6, 0.3), std::vector<double>{0, 1, 0, 1, 1, 0}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), Error);

  Engine rng = make_engine(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(40);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = static_cast<double>(rng() % 7) / 7.0;  // plenty of ties
      y[i] = static_cast<double>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(auc(s, y) == doctest::Approx(brute_auc(s, y)).epsilon(1e-14));
    const Score sc = score_predictions(binary_block(s), y, MetricSpec{MetricKind::one_minus_auc});
    CHECK(sc.score == doctest::Approx(1.0 - brute_auc(s, y)).epsilon(1e-14));
    CHECK(sc.per_point.empty());
    CHECK(!sc.std_error);
  }
}

TEST_CASE("argmax ties go low") {
  CHECK(argmax(std::vector<double>{0.3, 0.3, 0.4}) == 2);
  CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
}

TEST_CASE("combining members") {
  const std::vector<Prediction> a{{0.8, 0.2}, {0.6, 0.4}};
  const Prediction mean = combine(a, Averaging::mean);
  CHECK(mean[0] == doctest::Approx(0.7));
  CHECK(mean[1] == doctest::Approx(0.3));

  const std::vector<Prediction> b{{0.9, 0.1}, {0.5, 0.5}};
  const Prediction dual = combine(b, Averaging::dual_log_prob);
  CHECK(dual[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(dual[1] == doctest::Approx(0.25).epsilon(1e-14));

  for (auto avg : {Averaging::mean, Averaging::dual_log_prob}) {
    const std::vector<Prediction> single{{0.35, 0.65}};
    const Prediction out = combine(single, avg);
    CHECK(out[0] == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(0.65).epsilon(1e-14));
  }

  // Normalized elementwise geometric mean on random three-class members.
  Engine rng = make_engine(23);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<Prediction> ms(4, Prediction(3));
    for (auto& p : ms) {
      double s = 0.0;
      for (double& v : p) s += v = u(rng);
      for (double& v : p) v /= s;
    }
    Prediction g(3, 1.0);
    for (const auto& p : ms)
      for (int c = 0; c < 3; ++c) g[c] *= std::pow(p[c], 0.25);
    const double z = g[0] + g[1] + g[2];
    const Prediction out = combine(ms, Averaging::dual_log_prob);
    for (int c = 0; c < 3; ++c) CHECK(out[c] == doctest::Approx(g[c] / z).epsilon(1e-12));
  }
}

TEST_CASE("ensemble losses never exceed the mean member loss") {
  Engine rng = make_engine(29);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const std::size_t n = 30;
  const std::size_t m = 5;
  std::vector<double> labels(n);
  for (auto& y : labels) y = static_cast<double>(rng() % 2);
  std::vector<Predictions> members;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> p1(n);
    for (auto& v : p1) v = u(rng);
    members.push_back(binary_block(p1));
  }
  for (auto kind : {MetricKind::brier_binary, MetricKind::brier_multiclass, MetricKind::cross_entropy}) {
    const MetricSpec metric{kind};
    double member_mean = 0.0;
    for (const auto& p : members) member_mean += score_predictions(p, labels, metric).score / m;
    CHECK(score_predictions(combine(members, Averaging::mean), labels, metric).score <= member_mean);
    if (kind == MetricKind::cross_entropy)
      CHECK(score_predictions(combine(members, Averaging::dual_log_prob), labels, metric).score <= member_mean);
  }

  // Prefix combination uses the first members only.
  const Predictions two = combine(members, Averaging::mean, kProbabilityClamp, 2);
  const std::vector<Predictions> first(members.begin(), members.begin() + 2);
  CHECK(two.values == combine(first, Averaging::mean).values);
}

TEST_CASE("ensemble predictor") {
  const Dataset d = test::random_regression(40, 2, 1.0, 3);
  EnsemblePredictor ens;
  ens.members.push_back(fit_model(parse_predictor("ridge:1", Task::regression), d, 0));
  ens.members.push_back(fit_model(parse_predictor("knn:3", Task::regression), d, 0));
  const Predictions all = ensemble_predict_all(ens, d);
  const Prediction row5 = ensemble_predict(ens, d, 5);
  CHECK(all.values[5] == row5[0]);
  const double expect = (ens.members[0].predict(d).values[5] + ens.members[1].predict(d).values[5]) / 2.0;
  CHECK(row5[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(evaluate(ens, d, MetricSpec{}).score == score_predictions(all, target_values(d), MetricSpec{}).score);

  ens.averaging = Averaging::dual_log_prob;
  CHECK_THROWS_AS(ens.validate(), Error);
  CHECK_THROWS_AS(EnsemblePredictor{}.validate(), Error);

  EnsemblePredictor mixed;
  mixed.members.push_back(fit_model(parse_predictor("cart", Task::regression), d, 0));
  const Dataset c = test::random_binary(20, 2, 4);
  mixed.members.push_back(fit_model(parse_predictor("cart", Task::classification), c, 0));
  CHECK_THROWS_AS(mixed.validate(), Error);
}
