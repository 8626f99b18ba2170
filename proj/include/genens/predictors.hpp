#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "genens/data.hpp"
#include "genens/metrics.hpp"
#include "genens/parallel.hpp"
#include "genens/prediction.hpp"
#include "genens/rng.hpp"

namespace genens {

struct Knn {
  std::size_t k = 1;
};
struct Cart {};
struct Ridge {
  double lambda = 1.0;
};
struct Linear {};
struct Logistic {
  double lambda = 1.0;
  std::size_t max_iter = 1000;
  double tol = 1e-6;
};
struct BaggedTrees {
  std::size_t trees = 100;
  Seed seed = 0;
};
// Ignores the features: training-target mean, or class frequencies.
struct TargetMean {};

using PredictorKind = std::variant<Knn, Cart, Ridge, Linear, Logistic, BaggedTrees, TargetMean>;

struct PredictorSpec {
  PredictorKind kind = Cart{};
  Task task = Task::regression;

  std::string name() const;
  // Trees and the constant model see raw features, everything else is
  // standardized.
  bool default_standardize() const noexcept;
  void validate() const;
};

// "knn:5", "cart", "ridge:1.0", "linear", "logistic", "logistic:0.5",
// "bagged:100", "mean".
PredictorSpec parse_predictor(std::string_view text, Task task);

// Axis-aligned binary tree grown to purity. Internal nodes send x[feature] <=
// threshold to the left child.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t value = 0;  // offset into values()
  };

  // Grows on the given rows of `data`; repeated indices act as weights.
  static DecisionTree grow(const FeatureMatrix& data, std::span<const std::size_t> rows);

  void predict_into(std::span<const double> x, std::span<double> out) const;

  std::size_t output_width() const noexcept { return width_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  std::size_t leaves() const;

 private:
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::size_t width_ = 1;
};

class TrainedModel {
 public:
  struct KnnState {
    std::size_t k = 1;
    std::size_t rows = 0;
    std::vector<double> x;
    std::vector<double> y;
  };
  struct AffineState {
    Eigen::VectorXd coef;
    double intercept = 0.0;
  };
  struct SoftmaxState {
    Eigen::MatrixXd weights;  // features x classes
    Eigen::VectorXd bias;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
  };
  struct ConstantState {
    std::vector<double> value;
  };
  struct ForestState {
    std::vector<DecisionTree> trees;
  };
  using State = std::variant<KnnState, DecisionTree, AffineState, SoftmaxState, ForestState,
                             ConstantState>;

  TrainedModel(PredictorSpec spec, std::size_t input_dim, std::size_t n_classes,
               std::uint64_t fingerprint, State state);

  const PredictorSpec& spec() const noexcept { return spec_; }
  Task task() const noexcept { return spec_.task; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_width() const noexcept { return out_width_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  const State& state() const noexcept { return state_; }

  Prediction predict(std::span<const double> x) const;
  void predict_into(std::span<const double> x, std::span<double> out) const;
  Predictions predict_all(const FeatureMatrix& data, Exec exec = Exec::serial) const;

 private:
  PredictorSpec spec_;
  std::size_t input_dim_;
  std::size_t out_width_;
  std::uint64_t fingerprint_;
  State state_;
};

TrainedModel train(const PredictorSpec& spec, const FeatureMatrix& data, Seed seed,
                   Exec exec = Exec::serial);

// Row indices of a bootstrap replicate of size n.
std::vector<std::size_t> bootstrap_indices(std::size_t n, Seed seed);

// Seed of tree `t` inside a bagged forest trained with `train_seed`.
Seed forest_tree_seed(Seed train_seed, Seed spec_seed, std::size_t t) noexcept;

// Encoder plus model: predicts straight from raw dataset rows.
class FittedModel {
 public:
  FittedModel(Encoder encoder, TrainedModel model)
      : encoder_(std::move(encoder)), model_(std::move(model)) {}

  const Encoder& encoder() const noexcept { return encoder_; }
  const TrainedModel& model() const noexcept { return model_; }

  Predictions predict(const Dataset& data, Exec exec = Exec::serial) const;

 private:
  Encoder encoder_;
  TrainedModel model_;
};

FittedModel fit_model(const PredictorSpec& spec, const Dataset& train, Seed seed,
                      std::optional<bool> standardize = std::nullopt, Exec exec = Exec::serial);

// Trains t_max bootstrap trees once and scores the mean of the first T trees
// for every T in [1, t_max].
std::map<std::size_t, double> train_forest_curve(const FeatureMatrix& train,
                                                 const FeatureMatrix& test, std::size_t t_max,
                                                 const MetricSpec& metric, Seed seed,
                                                 Exec exec = Exec::parallel);

}  // namespace genens
