#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "metal/miner.hpp"
#include "metal/sequence_db.hpp"
#include "metal/time.hpp"

namespace metal {

/// Everything a run needs. Each field maps to one CLI flag, one METAL_*
/// variable and one config-file key.
struct RunConfig {
  std::filesystem::path store;  // empty: memory only
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;  // empty: no auth

  mining::MiningParams miner;
  Millis session_gap = mining::kDefaultSessionGap;
  double min_confidence = 0.5;
  Millis lookback = 30 * kDay;

  std::size_t permutations = 10'000;
  std::uint64_t seed = 1;

  std::optional<CivilDate> reference;  // ages are computed at this date; default today
};

}  // namespace metal
