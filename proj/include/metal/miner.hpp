#pragma once

#include <cstddef>
#include <vector>

#include "metal/pattern.hpp"

namespace metal::mining {

struct MiningParams {
  std::size_t min_group = 1;       // absolute context-group size
  double min_support = 1.0;        // fraction of the group, in (0, 1]
  std::size_t max_length = 3;      // longest sequence
  std::size_t max_context = 3;     // largest context
  std::size_t candidate_cap = 1'000'000;
};

/// Throws Error(Validation) naming the offending parameter.
void validate(const MiningParams& params);

/// Multi-source patterns: contexts enumerated depth-first with group-size
/// pruning, then per-context PrefixSpan-style growth over projected
/// sessions. Contexts are mined in parallel; output is in canonical order
/// after the redundancy filter.
///
/// A pattern is dropped when a one-step specialization that is itself
/// within bounds (one more context label, or one attribute item replaced
/// by the id of a resource carrying it) has exactly the same supporting
/// learners.
///
/// Throws Error(LimitExceeded) when more than `candidate_cap` candidates
/// are generated.
std::vector<MultiSourcePattern> mine_patterns(const SequenceDB& db, const LearnerContexts& contexts,
                                              const MiningParams& params);

/// Single-threaded reference run of the same kernel.
std::vector<MultiSourcePattern> mine_patterns_serial(const SequenceDB& db,
                                                     const LearnerContexts& contexts,
                                                     const MiningParams& params);

}  // namespace metal::mining
