#pragma once

#include <cstdint>
#include <string>

#include "pimgemv/funcsim.hpp"
#include "pimgemv/planner.hpp"
#include "pimgemv/timing.hpp"
#include "pimgemv/trace.hpp"

namespace pimgemv {

// One planned and priced GEMV. With split-K, every channel group runs an
// identically shaped sub-problem in parallel, so the wallclock is one group's
// stream plus the SoC-side merge of the partial outputs; `plan`, `map` and
// `counts` describe one (the first) group.
struct GemvRun {
  GemvProblem problem{};
  PlannerKnobs knobs{};
  TilePlan plan{};
  PlacementMap map{};
  TraceCounts counts{};
  TimeBreakdown breakdown{};
  double pim_ns = 0;
  double soc_reduce_ns = 0;
  double soc_ns = 0;
  double speedup = 0;
};

GemvRun plan_and_time(const GemvProblem& p, const SystemConfig& sys,
                      const PlannerKnobs& knobs);

// Plan/time summary (no placement dump) as JSON for reports and the CLI.
std::string run_to_json(const GemvRun& run, const SystemConfig& sys);

// Full functional pass on seeded random data: rearrange, trace, simulate
// every channel group bank by bank, merge the partials, and compare against
// the double-precision oracle. Integer formats must match exactly; float
// formats within the final-rounding tolerance reported back.
struct FunctionalCheck {
  bool match = false;
  double max_abs_err = 0;
  double tolerance = 0;
  TraceCounts counts{};        // first channel group's stream
  PlacementReport placement{}; // structural invariants across all groups
};

FunctionalCheck run_functional(const GemvProblem& p, const SystemConfig& sys,
                               const PlannerKnobs& knobs, std::uint64_t seed);

}  // namespace pimgemv
