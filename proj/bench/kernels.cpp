// Parallel kernels against their serial reference runs.
#include <benchmark/benchmark.h>

#include <random>

#include "metal/miner.hpp"
#include "metal/permutation.hpp"
#include "metal/sequence_db.hpp"

namespace {

using namespace metal;

struct Workload {
  mining::SequenceDB db;
  mining::LearnerContexts contexts;
};

// Learners spread over a handful of demographic labels, each with a few
// sessions drawn from a catalogue of resources sharing subject/type tags.
Workload synthetic(std::size_t learners, std::size_t resources, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Workload w;
  const char* subjects[] = {"Mathematics", "History", "Physics", "French"};
  const char* types[] = {"video", "exercise", "reading"};
  for (std::size_t r = 0; r < resources; ++r) {
    auto id = "R-" + std::to_string(r);
    w.db.attributes[id] = {std::string("subject=") + subjects[rng() % 4],
                           std::string("resource-type=") + types[rng() % 3]};
  }
  for (std::size_t l = 0; l < learners; ++l) {
    auto id = "L" + std::to_string(l);
    w.contexts[id] = {"age=" + std::to_string(13 + rng() % 3), rng() % 2 ? "sex=F" : "sex=M",
                      "class=C" + std::to_string(rng() % 4)};
    auto& sessions = w.db.sessions[id];
    for (std::size_t s = 0, n = 1 + rng() % 3; s < n; ++s) {
      mining::Session session;
      for (std::size_t e = 0, m = 2 + rng() % 4; e < m; ++e)
        session.push_back({"R-" + std::to_string(rng() % resources),
                           Instant{Millis{static_cast<long long>(s * 86'400'000 + e * 60'000)}},
                           id + "-" + std::to_string(s) + "-" + std::to_string(e)});
      sessions.push_back(std::move(session));
    }
  }
  return w;
}

const Workload& workload() {
  static const Workload w = synthetic(120, 30, 7);
  return w;
}

mining::MiningParams params() {
  mining::MiningParams p;
  p.min_group = 10;
  p.min_support = 0.2;
  p.max_length = 3;
  p.max_context = 3;
  return p;
}

void BM_MineParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mining::mine_patterns(workload().db, workload().contexts, params()));
}
void BM_MineSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(mining::mine_patterns_serial(workload().db, workload().contexts, params()));
}

struct Groups {
  std::vector<double> values;
  std::vector<int> groups;
};

const Groups& groups() {
  static const Groups g = [] {
    Groups g;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
      g.groups.push_back(i % 3);
      g.values.push_back(0.3 * (i % 3) + noise(rng));
    }
    return g;
  }();
  return g;
}

void BM_AnovaParallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(stats::permutation_anova(groups().values, groups().groups, state.range(0), 1));
}
void BM_AnovaSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(stats::permutation_anova_serial(groups().values, groups().groups, state.range(0), 1));
}

void BM_SpearmanParallel(benchmark::State& state) {
  const auto& g = groups();
  std::vector<double> x(g.values.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        stats::correlation_test(x, g.values, stats::CorrelationMethod::Rank, state.range(0), 1));
}
void BM_SpearmanSerial(benchmark::State& state) {
  const auto& g = groups();
  std::vector<double> x(g.values.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        stats::correlation_test_serial(x, g.values, stats::CorrelationMethod::Rank, state.range(0), 1));
}

}  // namespace

BENCHMARK(BM_MineParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MineSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnovaParallel)->Arg(10'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnovaSerial)->Arg(10'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpearmanParallel)->Arg(10'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpearmanSerial)->Arg(10'000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
