#pragma once

#include "detona/json_io.hpp"
#include "detona/sweep.hpp"

namespace detona {

// Full pipeline for one config: hugoniot -> profile -> evans -> index. Writes
// profile.csv/.json, evans.csv (when a contour is configured), and report.json under
// cfg.out_dir; returns the report.
Json run_pipeline(const RunConfig& cfg);

struct SelfTestResult {
  struct Item {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Item> items;
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
};

// Fast property battery: eigen identities, Delta reduction (with a mutation canary),
// splitting counts, conjugate symmetry, Serre/dimension lemmas, kernel determinism.
SelfTestResult selftest(std::uint64_t seed = 1, int threads = 0);

}  // namespace detona
