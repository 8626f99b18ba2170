#include "genens/parallel.hpp"
#include "genens/rng.hpp"

#include <algorithm>

namespace genens {

Seed mix64(Seed x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Seed derive_seed(Seed parent, std::string_view label, std::uint64_t index) noexcept {
  // FNV-1a over the label, then mixed with parent and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(parent ^ h) + mix64(index + 0x632be59bd9b4e019ULL));
}

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

// Two-pass estimators on values shifted by the first element, so constant
// inputs give exactly zero.
double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  std::vector<double> d(values.begin(), values.end());
  for (double& v : d) v -= values[0];
  const double mean = pairwise_mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n - 1);
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  std::vector<double> da(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<double> db(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n));
  for (double& v : da) v -= a[0];
  for (double& v : db) v -= b[0];
  const double ma = pairwise_mean(da);
  const double mb = pairwise_mean(db);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (da[i] - ma) * (db[i] - mb);
  return s / static_cast<double>(n - 1);
}

}  // namespace genens
