#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace metal::stats {

/// SplitMix64: small, fast, and splittable by seeding each stream with a
/// hash of (seed, stream index).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next();
  /// Uniform in [0, bound) by multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

/// Independent generator for permutation `index` under `seed`.
SplitMix64 permutation_stream(std::uint64_t seed, std::uint64_t index);

/// Fisher-Yates shuffle driven by `rng`.
template <class T>
void shuffle(std::span<T> v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(v[i - 1], v[j]);
  }
}

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t permutations = 0;  // M, or the number of enumerated assignments
  std::uint64_t seed = 0;
  bool zero_variance = false;
  bool exact = false;
};

/// One-way ANOVA F = (SSB / (k-1)) / (SSW / (N-k)). Zero within-group and
/// positive between-group variance gives +inf; zero total variance gives 0.
double anova_f(std::span<const double> values, std::span<const int> groups);

/// Permuted statistic counts as extreme when it reaches the observed one
/// within 1e-12 relative.
bool at_least(double permuted, double observed);

/// Monte-Carlo permutation ANOVA, p = (1 + #{F* >= F}) / (1 + M).
/// Requires >= 2 groups each with >= 2 values (DegenerateGroups). All-equal
/// values return F = 0, p = 1 with `zero_variance` set.
TestResult permutation_anova(std::span<const double> values, std::span<const int> groups,
                             std::size_t permutations, std::uint64_t seed);
TestResult permutation_anova_serial(std::span<const double> values, std::span<const int> groups,
                                    std::size_t permutations, std::uint64_t seed);
/// Exhaustive over all distinct label assignments: p = #{F* >= F} / #assignments.
TestResult exact_anova(std::span<const double> values, std::span<const int> groups);

enum class CorrelationMethod { Rank, Linear };

double pearson(std::span<const double> x, std::span<const double> y);
/// Average ranks for ties, 1-based.
std::vector<double> ranks(std::span<const double> v);
double spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided permutation test permuting `y`: p = (1 + #{|r*| >= |r|}) / (1 + M).
/// Requires n >= 3; throws ZeroVariance when either vector is constant.
TestResult correlation_test(std::span<const double> x, std::span<const double> y,
                            CorrelationMethod method, std::size_t permutations, std::uint64_t seed);
TestResult correlation_test_serial(std::span<const double> x, std::span<const double> y,
                                   CorrelationMethod method, std::size_t permutations,
                                   std::uint64_t seed);
/// Exhaustive over all n! orderings of `y` (n <= 10).
TestResult exact_correlation(std::span<const double> x, std::span<const double> y,
                             CorrelationMethod method);

}  // namespace metal::stats
