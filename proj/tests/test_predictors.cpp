#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "doctest.h"
#include "genens/error.hpp"
#include "genens/predictors.hpp"
#include "support.hpp"

using namespace genens;

namespace {

FeatureMatrix raw(const Dataset& d) { return encode(d, d, false); }

double mean_squared_training_error(const TrainedModel& model, const FeatureMatrix& fm) {
  double s = 0.0;
  for (std::size_t i = 0; i < fm.rows; ++i) {
    const double e = model.predict(fm.row(i))[0] - fm.y[i];
    s += e * e;
  }
  return s / static_cast<double>(fm.rows);
}

// Softmax objective written out independently of the solver.
double softmax_objective(const FeatureMatrix& fm, const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                         double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < fm.rows; ++i) {
    Eigen::VectorXd z = b;
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (std::size_t j = 0; j < fm.cols; ++j) z(c) += w(static_cast<Eigen::Index>(j), c) * fm.x[i * fm.cols + j];
    double norm = 0.0;
    for (Eigen::Index c = 0; c < z.size(); ++c) norm += std::exp(z(c));
    loss += std::log(norm) - z(static_cast<Eigen::Index>(fm.y[i]));
  }
  const double n = static_cast<double>(fm.rows);
  return loss / n + lambda / (2.0 * n) * w.squaredNorm();
}

}  // namespace

TEST_CASE("predictor parsing") {
  CHECK(parse_predictor("knn:5", Task::regression).name() == "knn:5");
  CHECK(parse_predictor("cart", Task::classification).name() == "cart");
  CHECK(parse_predictor("ridge:0.5", Task::regression).name() == "ridge:0.5");
  CHECK(parse_predictor("bagged:7", Task::regression).name() == "bagged:7");
  CHECK_THROWS_AS(parse_predictor("knn:0", Task::regression), Error);
  CHECK_THROWS_AS(parse_predictor("ridge:-1", Task::regression), Error);
  CHECK_THROWS_AS(parse_predictor("logistic", Task::regression), Error);
  CHECK_THROWS_AS(parse_predictor("ridge", Task::classification), Error);
  CHECK_THROWS_AS(parse_predictor("svm", Task::regression), Error);
}

TEST_CASE("knn") {
  const auto schema = test::numeric_schema(1);
  const Dataset d = test::table(schema, {{0, 10}, {1, 20}, {3, 30}, {5, 40}});
  const FeatureMatrix fm = raw(d);
  const TrainedModel one = train(parse_predictor("knn:1", Task::regression), fm, 0);
  for (std::size_t i = 0; i < fm.rows; ++i) CHECK(one.predict(fm.row(i))[0] == fm.y[i]);

  // x = 2 is equidistant from rows 1 and 2: the lower index wins.
  const double q[] = {2.0};
  CHECK(one.predict(q)[0] == 20.0);
  const TrainedModel two = train(parse_predictor("knn:2", Task::regression), fm, 0);
  CHECK(two.predict(q)[0] == 25.0);
  const double q4[] = {4.0};
  CHECK(one.predict(q4)[0] == 30.0);

  // Five neighbours labelled {1,1,1,0,0}.
  const auto bs = test::binary_schema(1);
  const Dataset c = test::table(bs, {{0, 1}, {0.1, 1}, {0.2, 1}, {0.3, 0}, {0.4, 0}, {9, 0}, {10, 0}});
  const TrainedModel five = train(parse_predictor("knn:5", Task::classification), raw(c), 0);
  const double q0[] = {0.2};
  const Prediction p = five.predict(q0);
  CHECK(p[0] == doctest::Approx(0.4));
  CHECK(p[1] == doctest::Approx(0.6));

  const double wrong[] = {1.0, 2.0};
  CHECK_THROWS_AS(one.predict(wrong), Error);
}

TEST_CASE("cart interpolates unique rows and splits at midpoints") {
  const Dataset reg = test::random_regression(200, 3, 1.0, 11);
  const FeatureMatrix fm = raw(reg);
  const TrainedModel tree = train(parse_predictor("cart", Task::regression), fm, 0);
  CHECK(mean_squared_training_error(tree, fm) == 0.0);

  const Dataset cls = test::random_binary(150, 2, 12);
  const FeatureMatrix fc = raw(cls);
  const TrainedModel ct = train(parse_predictor("cart", Task::classification), fc, 0);
  for (std::size_t i = 0; i < fc.rows; ++i) {
    const Prediction p = ct.predict(fc.row(i));
    CHECK(p[static_cast<std::size_t>(fc.y[i])] == 1.0);
  }

  // Single informative split at the midpoint of 1 and 2 on feature 0, even
  // though feature 1 separates equally well (lowest feature wins ties).
  const auto schema = test::numeric_schema(2);
  const Dataset two = test::table(schema, {{0, 0, 0}, {1, 1, 0}, {2, 2, 5}, {3, 3, 5}});
  const DecisionTree t = DecisionTree::grow(raw(two), std::vector<std::size_t>{0, 1, 2, 3});
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.nodes()[0].feature == 0);
  CHECK(t.nodes()[0].threshold == 1.5);
  CHECK(t.leaves() == 2);
  CHECK(t.depth() == 1);

  // Constant target: no improving split, a single leaf.
  const Dataset flat = test::table(test::numeric_schema(1), {{0, 2}, {1, 2}, {2, 2}});
  CHECK(DecisionTree::grow(raw(flat), std::vector<std::size_t>{0, 1, 2}).leaves() == 1);
}

TEST_CASE("ridge and linear match the normal equations") {
  const Dataset line = test::table(test::numeric_schema(1), {{1, 2}, {2, 4}, {3, 6}});
  const TrainedModel r0 = train(parse_predictor("ridge:0", Task::regression), raw(line), 0);
  const auto& s0 = std::get<TrainedModel::AffineState>(r0.state());
  CHECK(s0.coef(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(s0.intercept) < 1e-9);

  const Dataset d = test::random_regression(60, 3, 0.5, 21);
  const FeatureMatrix fm = raw(d);
  for (double lambda : {0.0, 0.3, 5.0}) {
    PredictorSpec spec{Ridge{lambda}, Task::regression};
    const TrainedModel model = train(spec, fm, 0);
    const auto& s = std::get<TrainedModel::AffineState>(model.state());
    // Augmented system with an unpenalized intercept.
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(60, 4);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) {
      for (int j = 0; j < 3; ++j) a(i, j + 1) = fm.x[static_cast<std::size_t>(i * 3 + j)];
      y(i) = fm.y[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd g = a.transpose() * a;
    for (int j = 1; j < 4; ++j) g(j, j) += lambda;
    const Eigen::VectorXd beta = g.fullPivLu().solve(a.transpose() * y);
    CHECK(s.intercept == doctest::Approx(beta(0)).epsilon(1e-9));
    for (int j = 0; j < 3; ++j) CHECK(s.coef(j) == doctest::Approx(beta(j + 1)).epsilon(1e-9));
  }
  const TrainedModel lin = train(parse_predictor("linear", Task::regression), fm, 0);
  const TrainedModel r00 = train(parse_predictor("ridge:0", Task::regression), fm, 0);
  CHECK(std::get<TrainedModel::AffineState>(lin.state())
            .coef.isApprox(std::get<TrainedModel::AffineState>(r00.state()).coef, 1e-12));
}

TEST_CASE("logistic regression reaches a stationary point") {
  const Dataset d = test::random_binary(80, 2, 31);
  const FeatureMatrix fm = encode(d, d, true);
  const TrainedModel model = train(parse_predictor("logistic:1", Task::classification), fm, 0);
  const auto& s = std::get<TrainedModel::SoftmaxState>(model.state());
  CHECK(s.gradient_norm <= 1e-6);

  // Central finite differences of an independent objective vanish.
  const double h = 1e-5;
  Eigen::MatrixXd w = s.weights;
  Eigen::VectorXd b = s.bias;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    Eigen::MatrixXd wp = w, wm = w;
    wp.data()[k] += h;
    wm.data()[k] -= h;
    worst = std::max(worst, std::abs(softmax_objective(fm, wp, b, 1.0) - softmax_objective(fm, wm, b, 1.0)) / (2 * h));
  }
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    Eigen::VectorXd bp = b, bm = b;
    bp(k) += h;
    bm(k) -= h;
    worst = std::max(worst, std::abs(softmax_objective(fm, w, bp, 1.0) - softmax_objective(fm, w, bm, 1.0)) / (2 * h));
  }
  CHECK(worst < 1e-5);

  for (std::size_t i = 0; i < fm.rows; ++i) {
    const Prediction p = model.predict(fm.row(i));
    CHECK(p[0] >= 0.0);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Separable data: perfect training accuracy with finite weights.
  const Dataset sep = test::table(test::binary_schema(1), {{-3, 0}, {-2, 0}, {-1, 0}, {1, 1}, {2, 1}, {3, 1}});
  const FeatureMatrix fs = encode(sep, sep, true);
  const TrainedModel ms = train(parse_predictor("logistic:1", Task::classification), fs, 0);
  for (std::size_t i = 0; i < fs.rows; ++i) CHECK(argmax(ms.predict(fs.row(i))) == static_cast<std::size_t>(fs.y[i]));
  CHECK(std::get<TrainedModel::SoftmaxState>(ms.state()).weights.allFinite());

  // One observed class: constant probability model, not an error.
  const Dataset one = test::table(test::binary_schema(1), {{0, 1}, {1, 1}});
  const TrainedModel m1 = train(parse_predictor("logistic", Task::classification), encode(one, one, true), 0);
  const double q[] = {0.3};
  CHECK(m1.predict(q)[1] > 0.5);
}

TEST_CASE("bagged trees") {
  const Dataset d = test::random_regression(50, 2, 1.0, 41);
  const FeatureMatrix fm = raw(d);
  PredictorSpec one{BaggedTrees{1, 9}, Task::regression};
  const TrainedModel bag = train(one, fm, 5);
  const DecisionTree single = DecisionTree::grow(fm, bootstrap_indices(fm.rows, forest_tree_seed(5, 9, 0)));
  for (std::size_t i = 0; i < fm.rows; ++i) {
    double v = 0.0;
    single.predict_into(fm.row(i), std::span<double>(&v, 1));
    CHECK(bag.predict(fm.row(i))[0] == v);
  }

  PredictorSpec many{BaggedTrees{16, 0}, Task::regression};
  const auto a = train(many, fm, 3, Exec::serial).predict_all(fm, Exec::serial);
  const auto b = train(many, fm, 3, Exec::parallel).predict_all(fm, Exec::parallel);
  CHECK(a.values == b.values);
  const auto c = train(many, fm, 4, Exec::serial).predict_all(fm, Exec::serial);
  CHECK(a.values != c.values);
}

TEST_CASE("forest curve") {
  const Dataset d = test::random_regression(60, 2, 1.0, 51);
  const Dataset t = test::random_regression(40, 2, 1.0, 52);
  const Encoder enc = Encoder::fit(d, false);
  const FeatureMatrix tr = enc.transform(d);
  const FeatureMatrix te = enc.transform(t);
  const MetricSpec mse{};
  const auto curve = train_forest_curve(tr, te, 12, mse, 8, Exec::parallel);
  CHECK(curve.size() == 12);
  CHECK(curve == train_forest_curve(tr, te, 12, mse, 8, Exec::serial));

  const DecisionTree first = DecisionTree::grow(tr, bootstrap_indices(tr.rows, forest_tree_seed(8, 0, 0)));
  Predictions p = Predictions::zeros(Task::regression, te.rows, 1);
  for (std::size_t i = 0; i < te.rows; ++i) first.predict_into(te.row(i), p.row(i));
  CHECK(curve.at(1) == score_predictions(p, te.y, mse).score);

  const Dataset single = test::table(test::numeric_schema(2), {{0.5, 0.5, 3.0}});
  const Encoder e1 = Encoder::fit(single, false);
  const auto flat = train_forest_curve(e1.transform(single), e1.transform(t), 5, mse, 1);
  for (const auto& [k, v] : flat) CHECK(v == flat.at(1));
  CHECK_THROWS_AS(train_forest_curve(tr, te, 1, mse, 1), Error);
}

TEST_CASE("target mean and determinism") {
  const Dataset d = test::random_regression(30, 2, 1.0, 61);
  const FittedModel m = fit_model(parse_predictor("mean", Task::regression), d, 0);
  const auto y = target_values(d);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 30.0;
  CHECK(m.predict(d).values[7] == doctest::Approx(mean).epsilon(1e-12));

  for (const char* name : {"knn:5", "cart", "ridge:1", "bagged:5"}) {
    const PredictorSpec spec = parse_predictor(name, Task::regression);
    CHECK(fit_model(spec, d, 3).predict(d).values == fit_model(spec, d, 3).predict(d).values);
  }

  const Dataset c = test::random_binary(40, 3, 62);
  for (const char* name : {"knn:5", "cart", "logistic", "bagged:5", "mean"}) {
    const Predictions p = fit_model(parse_predictor(name, Task::classification), c, 2).predict(c);
    for (std::size_t i = 0; i < p.rows; ++i) {
      CHECK(p.row(i)[0] >= 0.0);
      CHECK(p.row(i)[1] >= 0.0);
      CHECK(std::abs(p.row(i)[0] + p.row(i)[1] - 1.0) <= 1e-9);
    }
  }
}
