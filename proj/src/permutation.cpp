#include "metal/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "metal/error.hpp"

namespace metal::stats {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::bounded(std::uint64_t bound) {
  using u128 = unsigned __int128;
  std::uint64_t x = next();
  u128 m = static_cast<u128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

SplitMix64 permutation_stream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t base = SplitMix64(seed).next();
  return SplitMix64(SplitMix64(base ^ (index * 0xd1b54a32d192ed03ULL)).next());
}

bool at_least(double permuted, double observed) {
  if (std::isinf(observed)) return std::isinf(permuted);
  return permuted >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

namespace {

// Labels remapped to 0..k-1.
struct Groups {
  std::vector<int> labels;
  int k = 0;
};

Groups normalize(std::span<const int> groups) {
  std::vector<int> distinct(groups.begin(), groups.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  Groups g;
  g.k = static_cast<int>(distinct.size());
  for (int label : groups)
    g.labels.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), label) - distinct.begin()));
  return g;
}

double f_statistic(std::span<const double> values, std::span<const int> labels, int k) {
  const std::size_t n = values.size();
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum[labels[i]] += values[i];
    ++count[labels[i]];
    total += values[i];
  }
  const double grand = total / static_cast<double>(n);
  std::vector<double> mean(k);
  double ssb = 0;
  for (int g = 0; g < k; ++g) {
    mean[g] = sum[g] / static_cast<double>(count[g]);
    ssb += static_cast<double>(count[g]) * (mean[g] - grand) * (mean[g] - grand);
  }
  double ssw = 0, sst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = values[i] - mean[labels[i]];
    ssw += d * d;
    sst += (values[i] - grand) * (values[i] - grand);
  }
  if (sst == 0) return 0.0;
  if (ssw <= 1e-14 * sst) return std::numeric_limits<double>::infinity();
  return (ssb / static_cast<double>(k - 1)) / (ssw / static_cast<double>(n - k));
}

void check_anova(std::span<const double> values, std::span<const int> groups, const Groups& g) {
  if (values.size() != groups.size())
    throw Error(ErrorCode::Validation, "groups", "values and groups differ in length");
  if (g.k < 2) throw Error(ErrorCode::DegenerateGroups, "groups", "need at least two groups");
  std::vector<std::size_t> count(g.k, 0);
  for (int l : g.labels) ++count[l];
  for (std::size_t c : count)
    if (c < 2) throw Error(ErrorCode::DegenerateGroups, "groups", "every group needs at least two trials");
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

TestResult anova_run(std::span<const double> values, std::span<const int> groups,
                     std::size_t permutations, std::uint64_t seed, bool parallel) {
  if (permutations < 1) throw Error(ErrorCode::Validation, "permutations", "M must be >= 1");
  Groups g = normalize(groups);
  check_anova(values, groups, g);
  TestResult r;
  r.permutations = permutations;
  r.seed = seed;
  if (all_equal(values)) {
    r.zero_variance = true;
    return r;
  }
  r.statistic = f_statistic(values, g.labels, g.k);

  const long m = static_cast<long>(permutations);
  long extreme = 0;
#pragma omp parallel if (parallel)
  {
    std::vector<int> labels(g.labels.size());
#pragma omp for reduction(+ : extreme) schedule(static)
    for (long i = 0; i < m; ++i) {
      std::copy(g.labels.begin(), g.labels.end(), labels.begin());
      auto rng = permutation_stream(seed, static_cast<std::uint64_t>(i));
      shuffle(std::span<int>(labels), rng);
      if (at_least(f_statistic(values, labels, g.k), r.statistic)) ++extreme;
    }
  }
  r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + m);
  return r;
}

double correlation(std::span<const double> x, std::span<const double> y) { return pearson(x, y); }

struct Prepared {
  std::vector<double> x, y;
};

Prepared prepare(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
  if (x.size() != y.size()) throw Error(ErrorCode::Validation, "y", "vectors differ in length");
  if (x.size() < 3) throw Error(ErrorCode::Validation, "n", "need at least three paired observations");
  if (all_equal(x)) throw Error(ErrorCode::ZeroVariance, "x", "feature values have zero variance");
  if (all_equal(y)) throw Error(ErrorCode::ZeroVariance, "y", "recall scores have zero variance");
  if (method == CorrelationMethod::Rank) return {ranks(x), ranks(y)};
  return {{x.begin(), x.end()}, {y.begin(), y.end()}};
}

TestResult correlation_run(std::span<const double> x, std::span<const double> y, CorrelationMethod method,
                           std::size_t permutations, std::uint64_t seed, bool parallel) {
  if (permutations < 1) throw Error(ErrorCode::Validation, "permutations", "M must be >= 1");
  Prepared p = prepare(x, y, method);
  TestResult r;
  r.permutations = permutations;
  r.seed = seed;
  r.statistic = correlation(p.x, p.y);
  const double observed = std::abs(r.statistic);

  const long m = static_cast<long>(permutations);
  long extreme = 0;
#pragma omp parallel if (parallel)
  {
    std::vector<double> shuffled(p.y.size());
#pragma omp for reduction(+ : extreme) schedule(static)
    for (long i = 0; i < m; ++i) {
      std::copy(p.y.begin(), p.y.end(), shuffled.begin());
      auto rng = permutation_stream(seed, static_cast<std::uint64_t>(i));
      shuffle(std::span<double>(shuffled), rng);
      if (at_least(std::abs(correlation(p.x, shuffled)), observed)) ++extreme;
    }
  }
  r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + m);
  return r;
}

}  // namespace

double anova_f(std::span<const double> values, std::span<const int> groups) {
  Groups g = normalize(groups);
  if (g.k < 2) return 0.0;
  return f_statistic(values, g.labels, g.k);
}

TestResult permutation_anova(std::span<const double> values, std::span<const int> groups,
                             std::size_t permutations, std::uint64_t seed) {
  return anova_run(values, groups, permutations, seed, true);
}

TestResult permutation_anova_serial(std::span<const double> values, std::span<const int> groups,
                                    std::size_t permutations, std::uint64_t seed) {
  return anova_run(values, groups, permutations, seed, false);
}

TestResult exact_anova(std::span<const double> values, std::span<const int> groups) {
  Groups g = normalize(groups);
  check_anova(values, groups, g);
  TestResult r;
  r.exact = true;
  if (all_equal(values)) {
    r.zero_variance = true;
    return r;
  }
  r.statistic = f_statistic(values, g.labels, g.k);
  std::vector<int> labels = g.labels;
  std::sort(labels.begin(), labels.end());
  std::size_t total = 0, extreme = 0;
  do {
    if (++total > 50'000'000)
      throw Error(ErrorCode::LimitExceeded, "n", "too many assignments for exact enumeration");
    if (at_least(f_statistic(values, labels, g.k), r.statistic)) ++extreme;
  } while (std::next_permutation(labels.begin(), labels.end()));
  r.permutations = total;
  r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) out[order[t]] = avg;
    i = j + 1;
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  auto rx = ranks(x), ry = ranks(y);
  return pearson(rx, ry);
}

TestResult correlation_test(std::span<const double> x, std::span<const double> y, CorrelationMethod method,
                            std::size_t permutations, std::uint64_t seed) {
  return correlation_run(x, y, method, permutations, seed, true);
}

TestResult correlation_test_serial(std::span<const double> x, std::span<const double> y,
                                   CorrelationMethod method, std::size_t permutations, std::uint64_t seed) {
  return correlation_run(x, y, method, permutations, seed, false);
}

TestResult exact_correlation(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
  if (x.size() > 10) throw Error(ErrorCode::LimitExceeded, "n", "exact enumeration limited to n <= 10");
  Prepared p = prepare(x, y, method);
  TestResult r;
  r.exact = true;
  r.statistic = correlation(p.x, p.y);
  const double observed = std::abs(r.statistic);
  std::vector<std::size_t> idx(p.y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> permuted(p.y.size());
  std::size_t total = 0, extreme = 0;
  do {
    for (std::size_t i = 0; i < idx.size(); ++i) permuted[i] = p.y[idx[i]];
    ++total;
    if (at_least(std::abs(correlation(p.x, permuted)), observed)) ++extreme;
  } while (std::next_permutation(idx.begin(), idx.end()));
  r.permutations = total;
  r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  return r;
}

}  // namespace metal::stats
