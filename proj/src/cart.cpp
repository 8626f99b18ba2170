#include <algorithm>
#include <numeric>
#include <optional>

#include "genens/error.hpp"
#include "genens/predictors.hpp"

namespace genens {
namespace {

constexpr double kRelativeGain = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double proxy = 0.0;
};

// Midpoint strictly below `hi` so that `lo <= t < hi`.
double midpoint(double lo, double hi) {
  const double t = lo + (hi - lo) / 2.0;
  return t < hi ? t : lo;
}

class Grower {
 public:
  Grower(const FeatureMatrix& data) : data_(data) {
    width_ = data.task == Task::classification ? data.n_classes : 1;
  }

  DecisionTree::Node make_leaf(std::span<const std::size_t> rows, std::vector<double>& values) {
    DecisionTree::Node node;
    node.value = static_cast<std::uint32_t>(values.size());
    const double n = static_cast<double>(rows.size());
    if (data_.task == Task::regression) {
      double s = 0.0;
      for (std::size_t r : rows) s += data_.y[r];
      values.push_back(s / n);
    } else {
      std::vector<double> freq(width_, 0.0);
      for (std::size_t r : rows) freq[static_cast<std::size_t>(data_.y[r])] += 1.0;
      for (double& f : freq) f /= n;
      values.insert(values.end(), freq.begin(), freq.end());
    }
    return node;
  }

  bool pure(std::span<const std::size_t> rows) const {
    const double first = data_.y[rows[0]];
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return data_.y[r] == first; });
  }

  // Best split by child-weighted MSE (regression) or Gini (classification).
  // Both reduce to maximizing a proxy; ties keep the earliest candidate,
  // i.e. the lowest feature and then the lowest threshold.
  std::optional<Split> best_split(std::span<const std::size_t> rows) {
    const std::size_t n = rows.size();
    order_.assign(rows.begin(), rows.end());
    double parent_proxy = 0.0;
    double tolerance = 0.0;
    double node_mean = 0.0;
    double centred_total = 0.0;
    std::vector<double> total(width_, 0.0);
    if (data_.task == Task::regression) {
      for (std::size_t r : rows) node_mean += data_.y[r];
      node_mean /= static_cast<double>(n);
      double sse = 0.0;
      for (std::size_t r : rows) {
        const double e = data_.y[r] - node_mean;
        sse += e * e;
        centred_total += e;
      }
      parent_proxy = centred_total * centred_total / static_cast<double>(n);
      tolerance = kRelativeGain * sse;
    } else {
      for (std::size_t r : rows) total[static_cast<std::size_t>(data_.y[r])] += 1.0;
      for (double c : total) parent_proxy += c * c;
      parent_proxy /= static_cast<double>(n);
      tolerance = kRelativeGain * static_cast<double>(n);
    }

    std::optional<Split> best;
    std::vector<double> left(width_);
    for (std::size_t f = 0; f < data_.cols; ++f) {
      const auto value = [&](std::size_t r) { return data_.x[r * data_.cols + f]; };
      std::stable_sort(order_.begin(), order_.end(),
                       [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
      if (value(order_.front()) == value(order_.back())) continue;

      std::fill(left.begin(), left.end(), 0.0);
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t r = order_[i];
        double proxy = 0.0;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        if (data_.task == Task::regression) {
          left_sum += data_.y[r] - node_mean;
          const double right_sum = centred_total - left_sum;
          proxy = left_sum * left_sum / nl + right_sum * right_sum / nr;
        } else {
          left[static_cast<std::size_t>(data_.y[r])] += 1.0;
          double pl = 0.0;
          double pr = 0.0;
          for (std::size_t c = 0; c < width_; ++c) {
            pl += left[c] * left[c];
            const double rc = total[c] - left[c];
            pr += rc * rc;
          }
          proxy = pl / nl + pr / nr;
        }
        const double lo = value(r);
        const double hi = value(order_[i + 1]);
        if (lo == hi) continue;
        if (proxy - parent_proxy > tolerance && (!best || proxy > best->proxy))
          best = Split{static_cast<int>(f), midpoint(lo, hi), proxy};
      }
    }
    return best;
  }

 private:
  const FeatureMatrix& data_;
  std::size_t width_;
  std::vector<std::size_t> order_;
};

}  // namespace

DecisionTree DecisionTree::grow(const FeatureMatrix& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error("cart: empty training set");
  DecisionTree tree;
  tree.width_ = data.task == Task::classification ? data.n_classes : 1;
  Grower grower(data);

  struct Pending {
    std::uint32_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  tree.nodes_.push_back(grower.make_leaf(rows, tree.values_));
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end())});

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    if (grower.pure(job.rows)) continue;
    const auto split = grower.best_split(job.rows);
    if (!split) continue;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    const auto f = static_cast<std::size_t>(split->feature);
    for (std::size_t r : job.rows)
      (data.x[r * data.cols + f] <= split->threshold ? left : right).push_back(r);

    const auto l = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.push_back(grower.make_leaf(left, tree.values_));
    const auto rr = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.push_back(grower.make_leaf(right, tree.values_));
    Node& parent = tree.nodes_[job.node];
    parent.feature = split->feature;
    parent.threshold = split->threshold;
    parent.left = l;
    parent.right = rr;
    stack.push_back({rr, std::move(right)});
    stack.push_back({l, std::move(left)});
  }
  return tree;
}

void DecisionTree::predict_into(std::span<const double> x, std::span<double> out) const {
  std::uint32_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  std::copy_n(values_.begin() + nodes_[i].value, width_, out.begin());
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes_[i].feature >= 0) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

}  // namespace genens
