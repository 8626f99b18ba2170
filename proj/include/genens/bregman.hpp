#pragma once

#include <span>
#include <vector>

#include "genens/metrics.hpp"

namespace genens {

// squared:    F(t) = sum t_i^2, any finite vector.
// negentropy: F(t) = sum t_i ln t_i on the probability simplex. Inputs are
//             clamped at `clamp` and renormalized before use.
enum class BregmanKind { squared, negentropy };

struct BregmanSpec {
  BregmanKind kind = BregmanKind::squared;
  std::size_t dimension = 1;
  double clamp = kProbabilityClamp;
};

using Vec = std::vector<double>;

// Validates domain membership and applies the simplex clamp.
Vec to_domain(const BregmanSpec& spec, std::span<const double> v);

double potential(const BregmanSpec& spec, std::span<const double> v);

// D_F(y, g) = F(y) - F(g) - grad F(g) . (y - g)
double divergence(const BregmanSpec& spec, std::span<const double> y, std::span<const double> g);

// g* = grad F(g) and its inverse. For negentropy the inverse is the softmax,
// which fixes the additive constant by projecting onto the simplex.
Vec dual(const BregmanSpec& spec, std::span<const double> g);
Vec dual_inverse(const BregmanSpec& spec, std::span<const double> u);

// (1/m sum g_i*)*
Vec dual_average(const BregmanSpec& spec, std::span<const Vec> predictions);
Vec dual_average(const BregmanSpec& spec, std::span<const Vec> predictions,
                 std::span<const double> weights);

// Central prediction (dual mean) and generalized variance E D(central, g).
struct CentralStats {
  Vec central;
  double gvar = 0.0;
};

CentralStats central_prediction(const BregmanSpec& spec, std::span<const Vec> samples);
CentralStats central_prediction(const BregmanSpec& spec, std::span<const Vec> samples,
                                std::span<const double> weights);

// Generalized law of total variance on an empirical measure where each group
// carries weight proportional to its size:
//   lhs = V(pooled),  rhs = E_groups[V within] + V(group centrals).
struct TotalVarianceCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double within = 0.0;
  double between = 0.0;
};

TotalVarianceCheck check_total_variance(const BregmanSpec& spec,
                                        std::span<const std::vector<Vec>> groups);

}  // namespace genens
