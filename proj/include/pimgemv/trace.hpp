#pragma once

#include <cstdint>
#include <vector>

#include "pimgemv/config.hpp"
#include "pimgemv/planner.hpp"

namespace pimgemv {

// One channel's broadcast command stream. Every bank of the channel group
// executes the same commands; only the DRAM contents differ per bank, which
// is exactly what the placement guarantees.
enum class PimOp : std::uint8_t {
  ActivateAll,  // open one DRAM row in every bank
  WriteIvReg,   // broadcast one input-vector (or input-scale) word to a register
  Mac,          // multiply-accumulate one open-row DRAM word into accumulator lanes
  LaneReduce,   // fold the upper half of an accumulator's lanes onto the lower half
  SfLoad,       // read one weight-scale word from the open row into the scale register
  SfMul,        // scale a finished block's partials into the running total
  Spill         // write one finalized output word into the bank's output region
};

// Why a row was opened; lets counters separate the mandatory first touch of
// the data region from detour re-opens caused by scale-factor chunks or
// output spills.
enum class RowOpenKind : std::uint8_t { Data, SfDetour, SpillDetour };

struct PimCommand {
  PimOp op{};

  // ActivateAll
  RowOpenKind open_kind = RowOpenKind::Data;
  std::int64_t row = -1;  // also Spill: row holding the output word

  // WriteIvReg
  int reg = -1;            // destination register (also Mac: register read)
  std::int64_t word = -1;  // input-vector word ordinal (also Mac/SfLoad: word in granule)
  bool iv_scale = false;   // true when staging an input-scale word

  // Mac
  std::int64_t slot = -1;     // bank-stream slot (also SfLoad: chunk slot)
  int group = -1;             // row-block group within the pass (also reduce/mul/spill)
  std::int64_t iv_word = -1;  // input-vector word expected in `reg`
  int iv_off = -1;            // element offset of the word's first column in that word
  int acc_base = -1;          // first accumulator lane written (column-vector layouts)

  // LaneReduce
  int width = 0;  // fold width in lanes (width -> width/2)
  int slots = 1;  // PIM slots charged (one per output register; 0 with a reduction tree)

  // SfMul: scale block-plane lanes (c, r) for c in [c0, c1), r in [r0, r1)
  int r0 = 0, r1 = 0;
  int c0 = 0, c1 = 0;
  int sf_lane = -1;            // first lane of the staged weight-scale word
  std::int64_t sf_word = -1;   // (slot, word) identity of the staged weight-scale word
  std::int64_t sf_slot = -1;
  std::int64_t block = -1;     // scale block index (selects the staged input-scale lane)
  std::int64_t ivsf_word = -1; // input-scale word expected staged

  // Spill
  std::int64_t out_word = -1;  // absolute output-region word index (per bank)
  int out_idx = -1;            // which of the group's out_reg words
};

// Slot/row/turnaround totals of one stream. Row opens are split by cause so
// the mandatory data-region count stays comparable to capacity
// (ceil(bytes_per_bank / row_buffer)) while detour costs stay visible.
struct TraceCounts {
  std::int64_t macs = 0;
  std::int64_t iv_writes = 0;          // WriteIvReg commands (input-scale words included)
  std::int64_t row_switches = 0;       // first walk touch of each data-region row
  std::int64_t sf_row_opens = 0;       // scale-chunk detours and their re-opens
  std::int64_t spill_row_opens = 0;    // output-region opens and their re-opens
  std::int64_t turnarounds = 0;        // write<->read bus direction changes
  std::int64_t lane_reduce_steps = 0;  // charged fold slots (0 with a reduction tree)
  std::int64_t sf_ops = 0;             // SfLoad + SfMul commands
  std::int64_t spills = 0;

  std::int64_t total_row_opens() const {
    return row_switches + sf_row_opens + spill_row_opens;
  }
  std::int64_t pim_op_slots() const {
    return macs + iv_writes + lane_reduce_steps + sf_ops + spills;
  }
  bool operator==(const TraceCounts&) const = default;
};

struct CommandTrace {
  std::vector<PimCommand> commands;
  TraceCounts counts;
};

// Compute counters from a command list alone (WriteIvReg/Spill drive the
// bus write-side, Mac/SfLoad the read-side; ActivateAll/LaneReduce/SfMul are
// direction-neutral). generate_trace fills CommandTrace::counts with this.
TraceCounts recount_commands(const std::vector<PimCommand>& commands);

// Emit the full broadcast stream for a column-row placement: per pass, the
// input-vector window is staged in bursts of up to iv_regs words (a window
// that covers the whole padded K is staged once and persists across passes),
// tiles stream column-step by column-step with one Mac per DRAM word,
// finished scale blocks are folded in place, and each group's accumulators
// are lane-reduced and spilled at the end of its pass. Layout-comparison
// orders (row_major / column_major) are priced analytically, not traced.
CommandTrace generate_trace(const PlacementMap& map, const MemoryConfig& mem,
                            const PimConfig& pim);

}  // namespace pimgemv
