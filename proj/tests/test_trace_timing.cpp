#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "doctest.h"
#include "pimgemv/errors.hpp"
#include "pimgemv/pipeline.hpp"
#include "pimgemv/timing.hpp"

using namespace pimgemv;

namespace {

GemvProblem square_int8(std::int64_t n) {
  GemvProblem p;
  p.m = n;
  p.k = n;
  return p;
}

GemvRun run_default(std::int64_t n, int banks_per_channel = 16) {
  SystemConfig sys = SystemConfig::defaults();
  sys.mem.banks_per_channel = banks_per_channel;
  return plan_and_time(square_int8(n), sys, PlannerKnobs{});
}

}  // namespace

TEST_CASE("pinned command counts for the large square matrix") {
  const GemvRun run = run_default(4096);
  TraceCounts want;
  want.macs = 4096;
  want.iv_writes = 128;
  want.row_switches = 64;      // 128 KiB per bank / 2 KiB rows
  want.sf_row_opens = 0;
  want.spill_row_opens = 1;
  want.turnarounds = 32;       // 16 staging bursts of 8 words each
  want.lane_reduce_steps = 0;  // 32-row tiles fill every accumulator lane
  want.sf_ops = 0;
  want.spills = 2;
  CHECK(run.counts == want);
  CHECK(run.counts.total_row_opens() == 65);
  CHECK(run.counts.pim_op_slots() == 4226);
}

TEST_CASE("pinned wallclock and speedup for the large square matrix") {
  const GemvRun run = run_default(4096);
  // 4226 slots * 64/15 ns + 65 row opens * 36 ns + 32 turnarounds * 14 ns.
  CHECK(run.pim_ns == doctest::Approx(20818.9333).epsilon(1e-6));
  // Memory-bound SoC baseline: 16 MiB of weights at 120 B/ns.
  CHECK(run.soc_ns == doctest::Approx(139810.1333).epsilon(1e-6));
  CHECK(run.soc_reduce_ns == 0.0);
  CHECK(run.speedup == doctest::Approx(6.7155).epsilon(1e-3));
  CHECK(run.speedup > 6.0);
  CHECK(run.speedup < 7.0);
}

TEST_CASE("speedup scales with the per-channel bank count") {
  const double s64 = run_default(4096, 8).speedup;
  const double s128 = run_default(4096, 16).speedup;
  const double s256 = run_default(4096, 32).speedup;
  CHECK(s64 == doctest::Approx(3.4429).epsilon(1e-3));
  CHECK(s256 == doctest::Approx(12.7928).epsilon(1e-3));
  CHECK(s64 > 2.975);   // at least half the 8-bank roofline minus overheads
  CHECK(s64 < 3.5);
  CHECK(s256 > 11.9);
  CHECK(s256 < 14.0);
  CHECK(s64 < s128);
  CHECK(s128 < s256);
  // Overheads keep every point under its roofline.
  SystemConfig sys = SystemConfig::defaults();
  sys.mem.banks_per_channel = 32;
  CHECK(s256 < roofline_speedup(sys.mem, sys.pim));
}

TEST_CASE("an input window covering all of K is staged exactly once") {
  GemvProblem p = square_int8(4096);
  p.k = 256;  // 8 input words, equal to the default staging window
  const SystemConfig sys = SystemConfig::defaults();
  const GemvRun run = plan_and_time(p, sys, PlannerKnobs{});
  CHECK(run.counts.iv_writes == 8);
  CHECK(run.counts.turnarounds == 2);  // one write->read, one read->write
}

TEST_CASE("turnarounds shrink as the staging window grows") {
  const SystemConfig sys = SystemConfig::defaults();
  const GemvProblem p = square_int8(4096);
  PlannerKnobs knobs;
  const int window[] = {2, 4, 8, 14};
  const std::int64_t want[] = {128, 64, 32, 20};  // 2 * ceil(128 words / window)
  std::int64_t prev = -1;
  for (int i = 0; i < 4; ++i) {
    knobs.iv_regs = window[i];
    const GemvRun run = plan_and_time(p, sys, knobs);
    CHECK(run.counts.turnarounds == want[i]);
    if (prev >= 0) CHECK(run.counts.turnarounds <= prev);
    prev = run.counts.turnarounds;
  }
}

TEST_CASE("narrow tiles pay lane-reduce folds unless a tree absorbs them") {
  const GemvProblem p = square_int8(768);  // 2-row tiles, 32 accumulator lanes
  SystemConfig sys = SystemConfig::defaults();
  const GemvRun no_tree = plan_and_time(p, sys, PlannerKnobs{});
  // 4 folds (32 -> 2 lanes) per row-block group, 3 groups per bank.
  CHECK(no_tree.counts.lane_reduce_steps == 12);
  sys.pim.has_reduction_tree = true;
  const GemvRun tree = plan_and_time(p, sys, PlannerKnobs{});
  CHECK(tree.counts.lane_reduce_steps == 0);
  CHECK(tree.pim_ns < no_tree.pim_ns);
  // The fold commands are still in the stream; the tree only removes their cost.
  const TilePlan plan = plan_gemv(p, sys.mem, sys.pim, PlannerKnobs{});
  const PlacementMap map = build_placement_map(p, plan, sys.mem);
  const CommandTrace trace = generate_trace(map, sys.mem, sys.pim);
  const bool has_fold = std::any_of(
      trace.commands.begin(), trace.commands.end(),
      [](const PimCommand& c) { return c.op == PimOp::LaneReduce; });
  CHECK(has_fold);
}

TEST_CASE("scale-factor command cost halves as blocks double") {
  const SystemConfig sys = SystemConfig::defaults();
  GemvProblem p = square_int8(4096);
  const int blocks[] = {16, 32, 64, 128};
  const std::int64_t want[] = {512, 256, 128, 64};
  std::int64_t prev = -1;
  for (int i = 0; i < 4; ++i) {
    p.in_fmt.sf_block = blocks[i];
    const GemvRun run = plan_and_time(p, sys, PlannerKnobs{});
    CHECK(run.counts.sf_ops == want[i]);
    if (prev >= 0) CHECK(run.counts.sf_ops < prev);
    prev = run.counts.sf_ops;
  }
}

TEST_CASE("time breakdown is counts times unit costs") {
  const SystemConfig sys = SystemConfig::defaults();
  GemvProblem p = square_int8(4096);
  p.in_fmt.sf_block = 32;  // exercise the sf and detour terms too
  const GemvRun run = plan_and_time(p, sys, PlannerKnobs{});
  const double slot = sys.timing.pim_slot_ns(sys.pim);
  const TimeBreakdown& b = run.breakdown;
  CHECK(b.mac_ns == doctest::Approx(run.counts.macs * slot));
  CHECK(b.iv_ns == doctest::Approx(run.counts.iv_writes * slot));
  CHECK(b.reduce_ns == doctest::Approx(run.counts.lane_reduce_steps * slot));
  CHECK(b.sf_ns == doctest::Approx(run.counts.sf_ops * slot));
  CHECK(b.spill_ns == doctest::Approx(run.counts.spills * slot));
  CHECK(b.row_open_ns ==
        doctest::Approx(run.counts.total_row_opens() * sys.timing.t_row_switch_ns));
  CHECK(b.turnaround_ns ==
        doctest::Approx(run.counts.turnarounds * sys.timing.t_turnaround_ns));
  CHECK(run.pim_ns == doctest::Approx(b.pim_ns()));
  CHECK(run.speedup ==
        doctest::Approx(run.soc_ns / (run.pim_ns + run.soc_reduce_ns)));
}

TEST_CASE("counters recomputed from the command list match the stream's") {
  const SystemConfig sys = SystemConfig::defaults();
  for (std::int64_t n : {768, 4096}) {
    GemvProblem p = square_int8(n);
    if (n == 4096) p.in_fmt.sf_block = 64;
    const TilePlan plan = plan_gemv(p, sys.mem, sys.pim, PlannerKnobs{});
    const PlacementMap map = build_placement_map(p, plan, sys.mem);
    const CommandTrace trace = generate_trace(map, sys.mem, sys.pim);
    CHECK(recount_commands(trace.commands) == trace.counts);
  }
}

TEST_CASE("layout baselines that defeat broadcast lose to the SoC") {
  const SystemConfig sys = SystemConfig::defaults();
  const GemvProblem p = square_int8(4096);
  const SpeedupReport col = price_column_major_baseline(p, sys);
  const SpeedupReport row = price_row_major_baseline(p, sys);
  CHECK(col.speedup > 0.0);
  CHECK(col.speedup < 1.0);
  CHECK(row.speedup < col.speedup);
  // Block scaling needs the placed layout's interleaved chunks.
  GemvProblem scaled = p;
  scaled.in_fmt.sf_block = 32;
  CHECK_THROWS_AS(price_column_major_baseline(scaled, sys), ConfigError);
}

TEST_CASE("split-K trades stream length for an SoC-side merge") {
  const SystemConfig sys = SystemConfig::defaults();
  const GemvProblem p = square_int8(4096);
  PlannerKnobs knobs;
  knobs.split_k = 4;
  const GemvRun split = plan_and_time(p, sys, knobs);
  const GemvRun whole = plan_and_time(p, sys, PlannerKnobs{});
  CHECK(split.soc_reduce_ns > 0.0);
  CHECK(split.pim_ns < whole.pim_ns);  // each group walks a quarter of K
  CHECK(split.speedup ==
        doctest::Approx(split.soc_ns / (split.pim_ns + split.soc_reduce_ns)));
  CHECK(soc_reduce_ns(1, p.m, p.out_fmt, sys.soc) == 0.0);
}
