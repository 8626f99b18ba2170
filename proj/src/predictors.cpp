#include "genens/predictors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "genens/error.hpp"

namespace genens {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("predictor: bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("predictor: bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

// ---- kNN -----------------------------------------------------------------

void knn_predict(const TrainedModel::KnnState& s, Task task, std::size_t n_classes,
                 std::span<const double> x, std::span<double> out) {
  const std::size_t d = x.size();
  std::vector<std::pair<double, std::size_t>> dist(s.rows);
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double* row = s.x.data() + i * d;
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double e = row[j] - x[j];
      acc += e * e;
    }
    dist[i] = {acc, i};
  }
  const std::size_t k = std::min(s.k, s.rows);
  // Pair ordering breaks distance ties by the lower row index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  if (task == Task::regression) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += s.y[dist[i].second];
    out[0] = sum / static_cast<double>(k);
  } else {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) out[static_cast<std::size_t>(s.y[dist[i].second])] += 1.0;
    for (std::size_t c = 0; c < n_classes; ++c) out[c] /= static_cast<double>(k);
  }
}

// ---- ridge / least squares -------------------------------------------------

TrainedModel::AffineState fit_affine(const FeatureMatrix& data, double lambda) {
  const auto n = static_cast<Eigen::Index>(data.rows);
  const auto d = static_cast<Eigen::Index>(data.cols);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      data.x.data(), n, d);
  Eigen::Map<const Eigen::VectorXd> y(data.y.data(), n);

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  TrainedModel::AffineState s;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  const Eigen::VectorXd rhs = xc.transpose() * yc;
  if (lambda > 0.0) {
    gram.diagonal().array() += lambda;
    s.coef = gram.ldlt().solve(rhs);
  } else {
    // Minimum-norm solution when the design is rank deficient.
    s.coef = xc.completeOrthogonalDecomposition().solve(yc);
  }
  s.intercept = y_mean - x_mean.dot(s.coef);
  return s;
}

// ---- multinomial logistic regression ---------------------------------------

struct SoftmaxObjective {
  const FeatureMatrix& data;
  double lambda;
  std::size_t classes;

  // Mean negative log-likelihood plus lambda/(2n) * ||W||^2; gradient into
  // (gw, gb) when requested.
  double operator()(const Eigen::MatrixXd& w, const Eigen::VectorXd& b, Eigen::MatrixXd* gw,
                    Eigen::VectorXd* gb) const {
    const std::size_t n = data.rows;
    const auto d = static_cast<Eigen::Index>(data.cols);
    const auto k = static_cast<Eigen::Index>(classes);
    double loss = 0.0;
    if (gw) gw->setZero(d, k);
    if (gb) gb->setZero(k);
    Eigen::VectorXd z(k);
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Map<const Eigen::VectorXd> xi(data.x.data() + i * data.cols, d);
      z = w.transpose() * xi + b;
      const double zmax = z.maxCoeff();
      const double lse = zmax + std::log((z.array() - zmax).exp().sum());
      const auto yi = static_cast<Eigen::Index>(data.y[i]);
      loss += lse - z(yi);
      if (gw) {
        Eigen::VectorXd p = (z.array() - lse).exp();
        p(yi) -= 1.0;
        gw->noalias() += xi * p.transpose();
        *gb += p;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss = loss * inv_n + 0.5 * lambda * inv_n * w.squaredNorm();
    if (gw) {
      *gw = *gw * inv_n + lambda * inv_n * w;
      *gb *= inv_n;
    }
    return loss;
  }
};

TrainedModel::SoftmaxState fit_softmax(const FeatureMatrix& data, const Logistic& opt) {
  const auto d = static_cast<Eigen::Index>(data.cols);
  const auto k = static_cast<Eigen::Index>(data.n_classes);
  SoftmaxObjective objective{data, opt.lambda, data.n_classes};

  TrainedModel::SoftmaxState s;
  s.weights = Eigen::MatrixXd::Zero(d, k);
  s.bias = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd gw;
  Eigen::VectorXd gb;
  double f = objective(s.weights, s.bias, &gw, &gb);
  double step = 1.0;
  constexpr double kArmijo = 1e-4;
  for (s.iterations = 0; s.iterations < opt.max_iter; ++s.iterations) {
    const double gnorm2 = gw.squaredNorm() + gb.squaredNorm();
    s.gradient_norm = std::sqrt(gnorm2);
    if (s.gradient_norm < opt.tol) break;
    // Backtracking line search, restarted from twice the last accepted step.
    step = std::min(step * 2.0, 1e6);
    while (true) {
      const Eigen::MatrixXd w_new = s.weights - step * gw;
      const Eigen::VectorXd b_new = s.bias - step * gb;
      const double f_new = objective(w_new, b_new, nullptr, nullptr);
      if (f_new <= f - kArmijo * step * gnorm2 || step < 1e-16) {
        s.weights = w_new;
        s.bias = b_new;
        f = objective(s.weights, s.bias, &gw, &gb);
        break;
      }
      step *= 0.5;
    }
  }
  s.gradient_norm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
  return s;
}

std::vector<double> class_frequencies(const FeatureMatrix& data) {
  std::vector<double> freq(data.n_classes, 0.0);
  for (double y : data.y) freq[static_cast<std::size_t>(y)] += 1.0;
  for (double& f : freq) f /= static_cast<double>(data.rows);
  return freq;
}

}  // namespace

// ---- spec ------------------------------------------------------------------

std::string PredictorSpec::name() const {
  return std::visit(Overloaded{
                        [](const Knn& k) { return "knn:" + std::to_string(k.k); },
                        [](const Cart&) { return std::string("cart"); },
                        [](const Ridge& r) { return "ridge:" + format_number(r.lambda); },
                        [](const Linear&) { return std::string("linear"); },
                        [](const Logistic& l) { return "logistic:" + format_number(l.lambda); },
                        [](const BaggedTrees& b) { return "bagged:" + std::to_string(b.trees); },
                        [](const TargetMean&) { return std::string("mean"); },
                    },
                    kind);
}

bool PredictorSpec::default_standardize() const noexcept {
  return !(std::holds_alternative<Cart>(kind) || std::holds_alternative<BaggedTrees>(kind) ||
           std::holds_alternative<TargetMean>(kind));
}

void PredictorSpec::validate() const {
  std::visit(Overloaded{
                 [](const Knn& k) {
                   if (k.k < 1) throw Error("knn: k must be at least 1");
                 },
                 [](const Cart&) {},
                 [this](const Ridge& r) {
                   if (!(r.lambda >= 0.0)) throw Error("ridge: lambda must be non-negative");
                   if (task != Task::regression) throw Error("ridge: regression only");
                 },
                 [this](const Linear&) {
                   if (task != Task::regression) throw Error("linear: regression only");
                 },
                 [this](const Logistic& l) {
                   if (!(l.lambda >= 0.0)) throw Error("logistic: lambda must be non-negative");
                   if (l.max_iter < 1 || !(l.tol > 0.0)) throw Error("logistic: bad solver limits");
                   if (task != Task::classification) throw Error("logistic: classification only");
                 },
                 [](const BaggedTrees& b) {
                   if (b.trees < 1) throw Error("bagged: need at least one tree");
                 },
                 [](const TargetMean&) {},
             },
             kind);
}

PredictorSpec parse_predictor(std::string_view text, Task task) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  PredictorSpec spec;
  spec.task = task;
  if (head == "knn") spec.kind = Knn{arg.empty() ? 1 : parse_count(arg, "k")};
  else if (head == "cart") spec.kind = Cart{};
  else if (head == "ridge") spec.kind = Ridge{arg.empty() ? 1.0 : parse_double(arg, "lambda")};
  else if (head == "linear") spec.kind = Linear{};
  else if (head == "logistic") {
    Logistic l;
    if (!arg.empty()) l.lambda = parse_double(arg, "lambda");
    spec.kind = l;
  } else if (head == "bagged") spec.kind = BaggedTrees{arg.empty() ? 100 : parse_count(arg, "trees"), 0};
  else if (head == "mean") spec.kind = TargetMean{};
  else throw Error("unknown predictor '" + std::string(text) + "'");
  spec.validate();
  return spec;
}

// ---- model -----------------------------------------------------------------

TrainedModel::TrainedModel(PredictorSpec spec, std::size_t input_dim, std::size_t n_classes,
                           std::uint64_t fingerprint, State state)
    : spec_(std::move(spec)),
      input_dim_(input_dim),
      out_width_(spec_.task == Task::classification ? n_classes : 1),
      fingerprint_(fingerprint),
      state_(std::move(state)) {}

void TrainedModel::predict_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != input_dim_)
    throw Error("predict: feature row has " + std::to_string(x.size()) + " entries, model expects " +
                std::to_string(input_dim_));
  std::visit(
      Overloaded{
          [&](const KnnState& s) { knn_predict(s, task(), out_width_, x, out); },
          [&](const DecisionTree& t) { t.predict_into(x, out); },
          [&](const AffineState& s) {
            double v = s.intercept;
            for (std::size_t j = 0; j < input_dim_; ++j) v += s.coef(static_cast<Eigen::Index>(j)) * x[j];
            out[0] = v;
          },
          [&](const SoftmaxState& s) {
            Eigen::Map<const Eigen::VectorXd> xi(x.data(), static_cast<Eigen::Index>(x.size()));
            const Eigen::VectorXd z = s.weights.transpose() * xi + s.bias;
            const double zmax = z.maxCoeff();
            const Eigen::ArrayXd e = (z.array() - zmax).exp();
            const double total = e.sum();
            for (std::size_t c = 0; c < out_width_; ++c) out[c] = e(static_cast<Eigen::Index>(c)) / total;
          },
          [&](const ForestState& s) {
            std::fill(out.begin(), out.end(), 0.0);
            std::vector<double> tmp(out_width_);
            for (const auto& tree : s.trees) {
              tree.predict_into(x, tmp);
              for (std::size_t c = 0; c < out_width_; ++c) out[c] += tmp[c];
            }
            for (double& v : out) v /= static_cast<double>(s.trees.size());
          },
          [&](const ConstantState& s) { std::copy(s.value.begin(), s.value.end(), out.begin()); },
      },
      state_);
}

Prediction TrainedModel::predict(std::span<const double> x) const {
  Prediction out(out_width_);
  predict_into(x, out);
  return out;
}

Predictions TrainedModel::predict_all(const FeatureMatrix& data, Exec exec) const {
  if (data.fingerprint != fingerprint_) throw Error("predict: schema fingerprint mismatch");
  Predictions out = Predictions::zeros(task(), data.rows, out_width_);
  for_each_index(exec, data.rows, [&](std::size_t i) { predict_into(data.row(i), out.row(i)); });
  return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Seed seed) {
  Engine rng = make_engine(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Seed forest_tree_seed(Seed train_seed, Seed spec_seed, std::size_t t) noexcept {
  return derive_seed(mix64(train_seed ^ spec_seed), "bag", t);
}

TrainedModel train(const PredictorSpec& spec, const FeatureMatrix& data, Seed seed, Exec exec) {
  spec.validate();
  if (data.rows == 0) throw Error("train: empty training data");
  if (data.task != spec.task) throw Error("train: predictor task does not match the data");

  const std::size_t classes = data.n_classes;
  auto make = [&](TrainedModel::State state) {
    return TrainedModel(spec, data.cols, classes, data.fingerprint, std::move(state));
  };
  std::vector<std::size_t> all(data.rows);
  std::iota(all.begin(), all.end(), 0);

  return std::visit(
      Overloaded{
          [&](const Knn& k) {
            return make(TrainedModel::KnnState{k.k, data.rows, data.x, data.y});
          },
          [&](const Cart&) { return make(DecisionTree::grow(data, all)); },
          [&](const Ridge& r) { return make(fit_affine(data, r.lambda)); },
          [&](const Linear&) { return make(fit_affine(data, 0.0)); },
          [&](const Logistic& l) {
            const auto freq = class_frequencies(data);
            const auto observed = std::count_if(freq.begin(), freq.end(), [](double f) { return f > 0.0; });
            if (observed < 2) return make(TrainedModel::ConstantState{freq});
            return make(fit_softmax(data, l));
          },
          [&](const BaggedTrees& b) {
            TrainedModel::ForestState forest;
            forest.trees.resize(b.trees);
            for_each_index(exec, b.trees, [&](std::size_t t) {
              const auto rows = bootstrap_indices(data.rows, forest_tree_seed(seed, b.seed, t));
              forest.trees[t] = DecisionTree::grow(data, rows);
            });
            return make(std::move(forest));
          },
          [&](const TargetMean&) {
            if (spec.task == Task::classification)
              return make(TrainedModel::ConstantState{class_frequencies(data)});
            return make(TrainedModel::ConstantState{{pairwise_mean(data.y)}});
          },
      },
      spec.kind);
}

Predictions FittedModel::predict(const Dataset& data, Exec exec) const {
  return model_.predict_all(encoder_.transform(data), exec);
}

FittedModel fit_model(const PredictorSpec& spec, const Dataset& train_data, Seed seed,
                      std::optional<bool> standardize, Exec exec) {
  Encoder encoder = Encoder::fit(train_data, standardize.value_or(spec.default_standardize()));
  TrainedModel model = train(spec, encoder.transform(train_data), seed, exec);
  return FittedModel(std::move(encoder), std::move(model));
}

std::map<std::size_t, double> train_forest_curve(const FeatureMatrix& train_data,
                                                 const FeatureMatrix& test, std::size_t t_max,
                                                 const MetricSpec& metric, Seed seed, Exec exec) {
  if (t_max < 2) throw Error("forest curve: t_max must be at least 2");
  if (train_data.rows == 0 || test.rows == 0) throw Error("forest curve: empty data");
  if (train_data.fingerprint != test.fingerprint) throw Error("forest curve: schema mismatch");
  const std::size_t width = train_data.task == Task::classification ? train_data.n_classes : 1;

  // Per-tree test predictions, filled in parallel; the running mean below is
  // accumulated in tree order so the curve does not depend on scheduling.
  std::vector<Predictions> per_tree(t_max);
  for_each_index(exec, t_max, [&](std::size_t t) {
    const auto rows = bootstrap_indices(train_data.rows, forest_tree_seed(seed, 0, t));
    const DecisionTree tree = DecisionTree::grow(train_data, rows);
    Predictions p = Predictions::zeros(train_data.task, test.rows, width);
    for (std::size_t i = 0; i < test.rows; ++i) tree.predict_into(test.row(i), p.row(i));
    per_tree[t] = std::move(p);
  });

  std::map<std::size_t, double> curve;
  Predictions sum = Predictions::zeros(train_data.task, test.rows, width);
  for (std::size_t t = 0; t < t_max; ++t) {
    for (std::size_t k = 0; k < sum.values.size(); ++k) sum.values[k] += per_tree[t].values[k];
    Predictions mean = sum;
    for (double& v : mean.values) v /= static_cast<double>(t + 1);
    curve[t + 1] = score_predictions(mean, test.y, metric, Exec::serial).score;
  }
  return curve;
}

}  // namespace genens
