#pragma once

#include <cstdint>

#include "pimgemv/config.hpp"
#include "pimgemv/planner.hpp"
#include "pimgemv/trace.hpp"

namespace pimgemv {

// Wallclock decomposition of one channel's command stream. Channels run the
// same stream in parallel, so this is also the whole GEMV's wallclock.
struct TimeBreakdown {
  double mac_ns = 0;
  double iv_ns = 0;
  double reduce_ns = 0;
  double sf_ns = 0;
  double spill_ns = 0;
  double row_open_ns = 0;
  double turnaround_ns = 0;

  double pim_ns() const {
    return mac_ns + iv_ns + reduce_ns + sf_ns + spill_ns + row_open_ns + turnaround_ns;
  }
};

// Price counted commands: every slot-class command costs one PIM slot, row
// opens cost the row-switch latency, bus direction changes the turnaround.
TimeBreakdown time_trace(const TraceCounts& counts, const SystemConfig& sys);

// SoC-only baseline: compute-bound on MAC throughput (scaled to the element
// width) or memory-bound on streaming the weights plus scale metadata,
// whichever dominates.
double soc_gemv_ns(const GemvProblem& p, const SocConfig& soc);

// Final merge of split-K partial outputs on the SoC (0 when degree == 1).
double soc_reduce_ns(int degree, std::int64_t m, const DataFormat& out_fmt,
                     const SocConfig& soc);

struct SpeedupReport {
  TimeBreakdown breakdown;
  TraceCounts counts;
  double pim_ns = 0;
  double soc_reduce_ns = 0;
  double soc_ns = 0;
  double speedup = 0;  // soc_ns / (pim_ns + soc_reduce_ns)
};

SpeedupReport speedup_from_counts(const GemvProblem& p, const TraceCounts& counts,
                                  int split_k, const SystemConfig& sys);

// Analytic prices for the two layout baselines that defeat command broadcast;
// neither fits the register file as a real plan, so their costs are built
// from closed-form counts instead of a trace (see the implementation).
SpeedupReport price_column_major_baseline(const GemvProblem& p, const SystemConfig& sys);
SpeedupReport price_row_major_baseline(const GemvProblem& p, const SystemConfig& sys);

}  // namespace pimgemv
