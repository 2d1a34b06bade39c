#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pimgemv/buffers.hpp"
#include "pimgemv/config.hpp"
#include "pimgemv/planner.hpp"
#include "pimgemv/trace.hpp"

namespace pimgemv {

// Double-precision oracle: out[m] = sum_b wsf[m,b] * ivsf[b] * sum_{k in b} W[m,k]*iv[k].
// weights is row-major m x k; wsf is row-major m x ceil(k / sf_block) and ivsf
// has ceil(k / sf_block) entries when block scaling is enabled (both empty
// otherwise). Integer-format inputs give exactly integral outputs.
ElemVec reference_gemv(const GemvProblem& p, const ElemVec& weights, const ElemVec& iv,
                       const ElemVec& wsf, const ElemVec& ivsf);

struct SimResult {
  ElemVec output;      // orig_m decoded output values (padding rows dropped)
  TraceCounts counts;  // echoed from the executed trace
};

// Execute one channel group's broadcast stream on every bank: each bank holds
// its own granules (from rearrange_matrix) but runs the identical command
// list. Registers are checked against command expectations (stale staging or
// a MAC on a closed row throws TraceError); spilled outputs are quantized to
// the output format, which throws ConfigError when a value does not fit.
// iv has orig_k entries and ivsf ceil(orig_k / sf_block) (empty when block
// scaling is off); both are zero- resp. one-padded internally.
SimResult run_trace(const CommandTrace& trace, const PlacementMap& map,
                    const std::vector<std::uint8_t>& placed, const ElemVec& iv,
                    const ElemVec& ivsf, const MemoryConfig& mem, const PimConfig& pim);

// Structural invariants of a placement, independently recomputed from the
// tile order and plan rather than trusted from the builder.
struct PlacementReport {
  bool row_span_ok = true;      // no matrix row's tiles land in two banks (m_tile > 1)
  bool uniform_rows_ok = true;  // equal resident matrix rows per bank on an even split
  bool permutation_ok = true;   // tile order is a bijection over all tiles
  bool row_switch_ok = true;    // first-touch row opens == ceil(bytes_per_bank / row_buffer)
  bool budget_ok = true;        // register file honored by the planned demand
  std::string detail;           // first violation, empty when clean

  bool all_ok() const {
    return row_span_ok && uniform_rows_ok && permutation_ok && row_switch_ok && budget_ok;
  }
};

// Pass trace counts to include the row-switch check (skipped when null).
PlacementReport verify_placement(const PlacementMap& map, const MemoryConfig& mem,
                                 const PimConfig& pim,
                                 const TraceCounts* counts = nullptr);

std::string report_to_json(const PlacementReport& r);

}  // namespace pimgemv
