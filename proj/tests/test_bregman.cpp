#include <cmath>
#include <numeric>

#include "doctest.h"
#include "genens/bregman.hpp"
#include "genens/error.hpp"
#include "genens/rng.hpp"

using namespace genens;

namespace {

const BregmanSpec kSquared1{BregmanKind::squared, 1};
const BregmanSpec kSquared3{BregmanKind::squared, 3};
const BregmanSpec kEntropy2{BregmanKind::negentropy, 2};
const BregmanSpec kEntropy3{BregmanKind::negentropy, 3};

Vec random_simplex(Engine& rng, std::size_t d) {
  std::exponential_distribution<double> e(1.0);
  Vec v(d);
  double s = 0.0;
  for (double& x : v) s += x = e(rng) + 1e-3;
  for (double& x : v) x /= s;
  return v;
}

Vec random_vector(Engine& rng, std::size_t d) {
  Vec v(d);
  for (double& x : v) x = 3.0 * standard_normal(rng);
  return v;
}

Vec random_point(const BregmanSpec& spec, Engine& rng) {
  return spec.kind == BregmanKind::squared ? random_vector(rng, spec.dimension)
                                           : random_simplex(rng, spec.dimension);
}

double kl(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

}  // namespace

TEST_CASE("divergence examples") {
  CHECK(divergence(kSquared1, Vec{3}, Vec{1}) == 4.0);
  CHECK(divergence(kEntropy2, Vec{0.5, 0.5}, Vec{0.5, 0.5}) == 0.0);
  CHECK(std::abs(divergence(kEntropy2, Vec{1.0, 0.0}, Vec{0.5, 0.5}) - std::log(2.0)) < 1e-10);
  CHECK_THROWS_AS(divergence(kEntropy2, Vec{0.7, 0.7}, Vec{0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(divergence(kEntropy2, Vec{-0.1, 1.1}, Vec{0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(divergence(kSquared1, Vec{1, 2}, Vec{1}), Error);
}

TEST_CASE("dual map examples") {
  CHECK(dual(kSquared1, Vec{3})[0] == 6.0);
  CHECK(dual_inverse(kSquared1, Vec{6})[0] == 3.0);
  const Vec back = dual_inverse(kEntropy2, dual(kEntropy2, Vec{0.2, 0.8}));
  CHECK(std::abs(back[0] - 0.2) < 1e-10);
  CHECK(std::abs(back[1] - 0.8) < 1e-10);

  const std::vector<Vec> pair{{0.9, 0.1}, {0.5, 0.5}};
  const Vec avg = dual_average(kEntropy2, pair);
  CHECK(avg[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(avg[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(dual_average(kSquared1, std::vector<Vec>{{1}, {3}})[0] == 2.0);
  const Vec sym = dual_average(kEntropy2, std::vector<Vec>{{0.8, 0.2}, {0.2, 0.8}});
  CHECK(sym[0] == doctest::Approx(0.5).epsilon(1e-14));
  const Vec one = dual_average(kEntropy3, std::vector<Vec>{{0.1, 0.3, 0.6}});
  CHECK(one[2] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK_THROWS_AS(dual_average(kSquared1, std::vector<Vec>{}), Error);

  // Weighted average with equal weights matches the plain one.
  const Vec w = dual_average(kEntropy2, pair, std::vector<double>{2.0, 2.0});
  CHECK(w[0] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("central prediction examples") {
  const CentralStats same = central_prediction(kEntropy3, std::vector<Vec>(4, Vec{0.2, 0.3, 0.5}));
  CHECK(same.central[1] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(same.gvar == doctest::Approx(0.0).epsilon(1e-14));

  const CentralStats sq = central_prediction(kSquared1, std::vector<Vec>{{0}, {2}});
  CHECK(sq.central[0] == 1.0);
  CHECK(sq.gvar == 1.0);

  const std::vector<Vec> pair{{0.9, 0.1}, {0.5, 0.5}};
  const CentralStats ent = central_prediction(kEntropy2, pair);
  const Vec c{0.75, 0.25};
  CHECK(ent.central[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(ent.gvar == doctest::Approx((kl(c, pair[0]) + kl(c, pair[1])) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(central_prediction(kSquared1, std::vector<Vec>{}), Error);
}

TEST_CASE("central prediction is the argmin of the expected divergence") {
  Engine rng = make_engine(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(random_simplex(rng, 2));
    const CentralStats cs = central_prediction(kEntropy2, samples);
    double best = 0.0;
    double best_value = INFINITY;
    for (int k = 1; k < 100000; ++k) {
      const double z = k / 100000.0;
      double v = 0.0;
      for (const auto& g : samples) v += divergence(kEntropy2, Vec{z, 1.0 - z}, g);
      if (v < best_value) {
        best_value = v;
        best = z;
      }
    }
    CHECK(std::abs(best - cs.central[0]) <= 1e-5);
    CHECK(best_value / 6.0 >= cs.gvar - 1e-12);
  }

  std::vector<Vec> xs;
  for (int i = 0; i < 7; ++i) xs.push_back(random_vector(rng, 1));
  const CentralStats cs = central_prediction(kSquared1, xs);
  double best = 0.0;
  double best_value = INFINITY;
  for (int k = -100000; k <= 100000; ++k) {
    const double z = k / 10000.0;
    double v = 0.0;
    for (const auto& g : xs) v += (z - g[0]) * (z - g[0]);
    if (v < best_value) {
      best_value = v;
      best = z;
    }
  }
  CHECK(std::abs(best - cs.central[0]) <= 1e-4);
}

TEST_CASE("divergence is non-negative and vanishes only on the diagonal") {
  Engine rng = make_engine(81);
  for (const auto& spec : {kSquared3, kEntropy3}) {
    for (int i = 0; i < 500; ++i) {
      const Vec y = random_point(spec, rng);
      const Vec g = random_point(spec, rng);
      CHECK(divergence(spec, y, g) > 0.0);
      CHECK(std::abs(divergence(spec, y, y)) <= 1e-15);
    }
  }
}

TEST_CASE("dual round trip across the interior") {
  Engine rng = make_engine(82);
  for (const auto& spec : {kSquared3, kEntropy3}) {
    for (int i = 0; i < 500; ++i) {
      const Vec g = random_point(spec, rng);
      const Vec back = dual_inverse(spec, dual(spec, g));
      for (std::size_t k = 0; k < g.size(); ++k) CHECK(std::abs(back[k] - g[k]) <= 1e-10);
    }
  }
}

TEST_CASE("law of total variance") {
  Engine rng = make_engine(83);
  for (const auto& spec : {kSquared3, kEntropy3}) {
    for (int t = 0; t < 50; ++t) {
      std::vector<std::vector<Vec>> groups(2);
      for (auto& g : groups)
        for (int i = 0; i < 5; ++i) g.push_back(random_point(spec, rng));
      const auto r = check_total_variance(spec, groups);
      CHECK(std::abs(r.gap) <= 1e-9);
      CHECK(r.lhs == doctest::Approx(r.within + r.between));
    }

    std::vector<std::vector<Vec>> singles;
    for (int i = 0; i < 4; ++i) singles.push_back({random_point(spec, rng)});
    const auto s = check_total_variance(spec, singles);
    CHECK(std::abs(s.within) <= 1e-15);
    CHECK(s.lhs == doctest::Approx(s.between).epsilon(1e-12));

    const Vec p = random_point(spec, rng);
    const auto z = check_total_variance(spec, std::vector<std::vector<Vec>>{{p, p}, {p}});
    CHECK(std::abs(z.lhs) <= 1e-14);
    CHECK(std::abs(z.rhs) <= 1e-14);
  }
}

TEST_CASE("dual-averaged replicates keep the centre and shrink the variance") {
  Engine rng = make_engine(84);
  for (const auto& spec : {kSquared3, kEntropy3}) {
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 12;
      const std::size_t m = 3;
      std::vector<Vec> members;
      for (std::size_t i = 0; i < n; ++i) members.push_back(random_point(spec, rng));

      // Cyclic windows use every member exactly m times.
      std::vector<Vec> windows;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<Vec> w;
        for (std::size_t k = 0; k < m; ++k) w.push_back(members[(i + k) % n]);
        windows.push_back(dual_average(spec, w));
      }
      const CentralStats all = central_prediction(spec, members);
      const CentralStats win = central_prediction(spec, windows);
      for (std::size_t k = 0; k < spec.dimension; ++k) CHECK(win.central[k] == doctest::Approx(all.central[k]).epsilon(1e-12));

      // Disjoint groups of m.
      std::vector<Vec> averaged;
      for (std::size_t i = 0; i < n; i += m)
        averaged.push_back(dual_average(spec, std::span<const Vec>(members.data() + i, m)));
      CHECK(central_prediction(spec, averaged).gvar <= all.gvar + 1e-15);
    }
  }
}
