#include "pimgemv/timing.hpp"

#include <algorithm>
#include <cmath>

#include "pimgemv/errors.hpp"

namespace pimgemv {

namespace {

using std::int64_t;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

double format_bytes(const GemvProblem& p) {
  double bytes = static_cast<double>(p.m) * static_cast<double>(p.k) * p.in_fmt.bits / 8.0;
  if (p.in_fmt.has_scale()) {
    const int64_t nblocks = ceil_div(p.k, *p.in_fmt.sf_block);
    bytes += static_cast<double>(p.m) * static_cast<double>(nblocks) * p.in_fmt.sf_bits / 8.0;
  }
  return bytes;
}

}  // namespace

TimeBreakdown time_trace(const TraceCounts& c, const SystemConfig& sys) {
  const double slot = sys.timing.pim_slot_ns(sys.pim);
  TimeBreakdown t;
  t.mac_ns = static_cast<double>(c.macs) * slot;
  t.iv_ns = static_cast<double>(c.iv_writes) * slot;
  t.reduce_ns = static_cast<double>(c.lane_reduce_steps) * slot;
  t.sf_ns = static_cast<double>(c.sf_ops) * slot;
  t.spill_ns = static_cast<double>(c.spills) * slot;
  t.row_open_ns = static_cast<double>(c.total_row_opens()) * sys.timing.t_row_switch_ns;
  t.turnaround_ns = static_cast<double>(c.turnarounds) * sys.timing.t_turnaround_ns;
  return t;
}

double soc_gemv_ns(const GemvProblem& p, const SocConfig& soc) {
  const double compute_ns =
      2.0 * static_cast<double>(p.m) * static_cast<double>(p.k) /
      soc.ops_per_sec(p.in_fmt.bits) * 1e9;
  const double stream_ns = format_bytes(p) / soc.bytes_per_ns();
  return std::max(compute_ns, stream_ns);
}

double soc_reduce_ns(int degree, int64_t m, const DataFormat& out_fmt,
                     const SocConfig& soc) {
  if (degree <= 1) return 0.0;
  const double bytes =
      static_cast<double>(degree) * static_cast<double>(m) * out_fmt.bits / 8.0;
  return bytes / soc.bytes_per_ns();
}

SpeedupReport speedup_from_counts(const GemvProblem& p, const TraceCounts& counts,
                                  int split_k, const SystemConfig& sys) {
  SpeedupReport r;
  r.counts = counts;
  r.breakdown = time_trace(counts, sys);
  r.pim_ns = r.breakdown.pim_ns();
  r.soc_reduce_ns = soc_reduce_ns(split_k, p.m, p.out_fmt, sys.soc);
  r.soc_ns = soc_gemv_ns(p, sys.soc);
  r.speedup = r.soc_ns / (r.pim_ns + r.soc_reduce_ns);
  return r;
}

// Column-major layout: each granule is one column slice of elements_per_tile
// rows, granules walk down columns first. A bank then accumulates, per tile,
// partials for elements_per_tile distinct rows -- far more accumulator state
// than the register file holds -- so every tile's partials spill to DRAM and
// the SoC merges all of them. Broadcast still works (banks hold the same
// column index at the same slot), but the spill ping-pong dominates:
//   spills  = tiles_per_bank * out-words per tile
//   opens   = data first touch + 2 per tile (out region and back)
//   turns   = 2 per tile and 2 per input-vector restage
//   merge   = every spilled partial streams through the SoC once.
SpeedupReport price_column_major_baseline(const GemvProblem& p, const SystemConfig& sys) {
  p.validate();
  if (p.in_fmt.has_scale()) {
    throw ConfigError("layout baselines are priced for unscaled formats only");
  }
  const MemoryConfig& mem = sys.mem;
  const PimConfig& pim = sys.pim;
  const int64_t ept = elements_per_tile(mem, p.in_fmt);
  const int64_t lanes = pim.reg_size_bits / p.in_fmt.bits;
  const int64_t tb = mem.total_banks();
  const int64_t wpg = mem.words_per_granule();

  const int64_t m_tm = ceil_div(p.m, ept);
  const int64_t tiles_total = m_tm * p.k;
  const int64_t tiles_pb = ceil_div(tiles_total, tb);
  const int64_t out_words_per_tile = ceil_div(ept * p.out_fmt.bits, pim.reg_size_bits);

  TraceCounts c;
  c.macs = tiles_pb * wpg;
  c.iv_writes = ceil_div(p.k, lanes);
  c.spills = tiles_pb * out_words_per_tile;
  c.row_switches = ceil_div(tiles_pb * mem.interleave_gran_bytes, mem.row_buffer_bytes);
  c.spill_row_opens = 2 * tiles_pb;
  c.turnarounds = 2 * (tiles_pb + c.iv_writes);

  SpeedupReport r;
  r.counts = c;
  r.breakdown = time_trace(c, sys);
  r.pim_ns = r.breakdown.pim_ns();
  r.soc_reduce_ns = static_cast<double>(tiles_total) * static_cast<double>(ept) *
                    p.out_fmt.bits / 8.0 / sys.soc.bytes_per_ns();
  r.soc_ns = soc_gemv_ns(p, sys.soc);
  r.speedup = r.soc_ns / (r.pim_ns + r.soc_reduce_ns);
  return r;
}

// Row-major layout: each granule is one row slice of elements_per_tile
// columns, granules walk along rows first. Banks at the same slot then hold
// different column ranges, so neither input-vector words nor compute commands
// can broadcast: the channel issues every bank's commands back to back
// (banks_per_channel times the work) and every weight word needs its own
// staged input word. Each tile folds its word-wide partials and spills one
// word; the SoC merges the per-segment partials.
SpeedupReport price_row_major_baseline(const GemvProblem& p, const SystemConfig& sys) {
  p.validate();
  if (p.in_fmt.has_scale()) {
    throw ConfigError("layout baselines are priced for unscaled formats only");
  }
  const MemoryConfig& mem = sys.mem;
  const PimConfig& pim = sys.pim;
  const int64_t ept = elements_per_tile(mem, p.in_fmt);
  const int64_t lanes = pim.reg_size_bits / p.in_fmt.bits;
  const int64_t tb = mem.total_banks();
  const int64_t wpg = mem.words_per_granule();
  const int64_t serial = mem.banks_per_channel;

  const int64_t k_tm = ceil_div(p.k, ept);
  const int64_t tiles_total = p.m * k_tm;
  const int64_t tiles_pb = ceil_div(tiles_total, tb);
  int64_t fold_steps = 0;
  for (int64_t w = lanes; w > 1; w /= 2) ++fold_steps;

  TraceCounts c;
  c.macs = serial * tiles_pb * wpg;
  c.iv_writes = serial * tiles_pb * wpg;  // one staged word per weight word
  c.lane_reduce_steps = serial * tiles_pb * fold_steps;
  c.spills = serial * tiles_pb;
  c.row_switches = serial * ceil_div(tiles_pb * mem.interleave_gran_bytes,
                                     mem.row_buffer_bytes);
  c.spill_row_opens = serial * 2 * tiles_pb;
  c.turnarounds = serial * 2 * tiles_pb;

  SpeedupReport r;
  r.counts = c;
  r.breakdown = time_trace(c, sys);
  r.pim_ns = r.breakdown.pim_ns();
  r.soc_reduce_ns = static_cast<double>(tiles_total) * p.out_fmt.bits / 8.0 /
                    sys.soc.bytes_per_ns();
  r.soc_ns = soc_gemv_ns(p, sys.soc);
  r.speedup = r.soc_ns / (r.pim_ns + r.soc_reduce_ns);
  return r;
}

}  // namespace pimgemv
