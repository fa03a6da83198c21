#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "metal/error.hpp"
#include "metal/permutation.hpp"
#include "oracles.hpp"

using namespace metal;
using namespace metal::stats;

namespace {

// p by brute-force enumeration of y orderings with the closed-form rho.
double enumerated_rho_p(const std::vector<double>& x, std::vector<double> y) {
  const double observed = std::abs(oracle::rho_oracle(x, y));
  std::sort(y.begin(), y.end());
  std::size_t total = 0, hits = 0;
  do {
    ++total;
    if (std::abs(oracle::rho_oracle(x, y)) >= observed - 1e-12) ++hits;
  } while (std::next_permutation(y.begin(), y.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("SplitMix64 streams are reproducible and distinct") {
  auto a = permutation_stream(42, 0), b = permutation_stream(42, 0), c = permutation_stream(42, 1);
  auto x = a.next();
  CHECK(x == b.next());
  CHECK(x != c.next());
  for (int i = 0; i < 1000; ++i) CHECK(a.bounded(7) < 7);
}

TEST_CASE("F matches the textbook formula") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    std::vector<int> g;
    for (int i = 0; i < 12; ++i) {
      g.push_back(i % 3);
      v.push_back(noise(rng) + (i % 3));
    }
    CHECK(anova_f(v, g) == doctest::Approx(oracle::f_oracle(v, g)).epsilon(1e-12));
  }
  std::vector<double> separated = {1, 1, 1, 5, 5, 5};
  std::vector<int> groups = {0, 0, 0, 1, 1, 1};
  CHECK(std::isinf(anova_f(separated, groups)));
  CHECK(at_least(INFINITY, INFINITY));
  CHECK_FALSE(at_least(1e300, INFINITY));
}

TEST_CASE("exact ANOVA: perfect separation of 3+3 gives 2/20") {
  std::vector<double> v = {1, 2, 3, 10, 11, 12};
  std::vector<int> g = {0, 0, 0, 1, 1, 1};
  auto r = exact_anova(v, g);
  CHECK(r.permutations == 20);
  CHECK(r.p_value == 2.0 / 20.0);
}

TEST_CASE("exact rank correlation: monotone n=6 gives 2/720") {
  std::vector<double> x = {1, 2, 3, 4, 5, 6}, y = {10, 20, 30, 40, 50, 60};
  auto r = exact_correlation(x, y, CorrelationMethod::Rank);
  CHECK(r.statistic == 1.0);
  CHECK(r.permutations == 720);
  CHECK(r.p_value == 2.0 / 720.0);
}

TEST_CASE("exact correlation matches brute-force enumeration") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(6), y(6);
    std::iota(x.begin(), x.end(), 1.0);
    std::iota(y.begin(), y.end(), 1.0);
    std::shuffle(y.begin(), y.end(), rng);
    CHECK(spearman(x, y) == doctest::Approx(oracle::rho_oracle(x, y)).epsilon(1e-12));
    CHECK(exact_correlation(x, y, CorrelationMethod::Rank).p_value == doctest::Approx(enumerated_rho_p(x, y)).epsilon(1e-15));
  }
}

TEST_CASE("sampled p is within 3 standard errors of exact p") {
  std::vector<double> x = {1, 2, 3, 4, 5, 6, 7}, y = {2, 1, 4, 3, 7, 5, 6};
  const double exact = exact_correlation(x, y, CorrelationMethod::Rank).p_value;
  const std::size_t m = 10'000;
  auto sampled = correlation_test(x, y, CorrelationMethod::Rank, m, 17);
  CHECK(std::abs(sampled.p_value - exact) <= 3 * std::sqrt(exact * (1 - exact) / m));

  std::vector<double> v = {3.1, 2.2, 4.0, 5.5, 6.1, 4.9, 7.3, 6.6};
  std::vector<int> g = {0, 0, 0, 0, 1, 1, 1, 1};
  const double exact_f = exact_anova(v, g).p_value;
  auto sampled_f = permutation_anova(v, g, m, 17);
  CHECK(std::abs(sampled_f.p_value - exact_f) <= 3 * std::sqrt(exact_f * (1 - exact_f) / m));
}

TEST_CASE("monotone n=20 data is significant") {
  std::vector<double> x(20), y(20);
  for (int i = 0; i < 20; ++i) {
    x[i] = i;
    y[i] = 3.0 * i + std::sin(i);
  }
  auto r = correlation_test(x, y, CorrelationMethod::Rank, 10'000, 1);
  CHECK(r.p_value <= 0.001);
  CHECK(r.permutations == 10'000);
  CHECK(r.seed == 1);
}

TEST_CASE("parallel and serial kernels agree bit for bit") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise;
  std::vector<double> v, w;
  std::vector<int> g;
  for (int i = 0; i < 30; ++i) {
    v.push_back(noise(rng));
    w.push_back(noise(rng) + 0.3 * v.back());
    g.push_back(i % 3);
  }
  auto a = permutation_anova(v, g, 2000, 99), b = permutation_anova_serial(v, g, 2000, 99);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == b.statistic);
  for (auto method : {CorrelationMethod::Rank, CorrelationMethod::Linear}) {
    auto c = correlation_test(v, w, method, 2000, 5), d = correlation_test_serial(v, w, method, 2000, 5);
    CHECK(c.p_value == d.p_value);
  }
  CHECK(permutation_anova(v, g, 2000, 99).p_value == a.p_value);  // same seed, same p
}

TEST_CASE("degenerate inputs") {
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Storage;
  };
  std::vector<double> v = {1, 2, 3, 4};
  std::vector<int> one_group = {0, 0, 0, 0}, singleton = {0, 0, 0, 1};
  CHECK(code([&] { permutation_anova(v, one_group, 10, 1); }) == ErrorCode::DegenerateGroups);
  CHECK(code([&] { permutation_anova(v, singleton, 10, 1); }) == ErrorCode::DegenerateGroups);

  std::vector<double> flat = {2, 2, 2, 2};
  std::vector<int> g = {0, 0, 1, 1};
  auto r = permutation_anova(flat, g, 10, 1);
  CHECK(r.zero_variance);
  CHECK(r.p_value == 1.0);
  CHECK(r.statistic == 0.0);

  CHECK(code([&] { correlation_test(v, flat, CorrelationMethod::Rank, 10, 1); }) == ErrorCode::ZeroVariance);
  std::vector<double> two = {1, 2};
  CHECK(code([&] { correlation_test(two, two, CorrelationMethod::Rank, 10, 1); }) == ErrorCode::Validation);
}

TEST_CASE("ranks average ties") {
  std::vector<double> v = {10, 20, 20, 30};
  CHECK(ranks(v) == std::vector<double>{1, 2.5, 2.5, 4});
}
