#include "pimgemv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "pimgemv/errors.hpp"

namespace pimgemv {

namespace {

using std::int64_t;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

// Deterministic across platforms (mt19937_64 output is pinned by the
// standard; distributions are not, so draw by modulo).
int64_t rand_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return lo + static_cast<int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

struct SubPlanned {
  SubProblem sub;
  TilePlan plan;
  PlacementMap map;
};

// Plan one channel group's sub-problem: the tile shape and interleave degree
// see only that group's banks.
SubPlanned plan_sub(const SubProblem& sub, const SystemConfig& sys,
                    const PlannerKnobs& knobs) {
  MemoryConfig group_mem = sys.mem;
  group_mem.num_channels = sub.channel_count;
  SubPlanned sp;
  sp.sub = sub;
  sp.plan = plan_gemv(sub.problem, group_mem, sys.pim, knobs);
  sp.map = build_placement_map(sub.problem, sp.plan, sys.mem, sub.channel_begin,
                               sub.channel_count);
  return sp;
}

}  // namespace

GemvRun plan_and_time(const GemvProblem& p, const SystemConfig& sys,
                      const PlannerKnobs& knobs) {
  p.validate();
  const auto subs = apply_split_k(p, knobs.split_k, sys.mem);
  // Groups are identically shaped, so one group's stream prices all of them.
  SubPlanned first = plan_sub(subs.front(), sys, knobs);
  const CommandTrace trace = generate_trace(first.map, sys.mem, sys.pim);

  GemvRun run;
  run.problem = p;
  run.knobs = knobs;
  run.plan = first.plan;
  run.counts = trace.counts;
  run.map = std::move(first.map);
  const SpeedupReport rep = speedup_from_counts(p, run.counts, knobs.split_k, sys);
  run.breakdown = rep.breakdown;
  run.pim_ns = rep.pim_ns;
  run.soc_reduce_ns = rep.soc_reduce_ns;
  run.soc_ns = rep.soc_ns;
  run.speedup = rep.speedup;
  return run;
}

std::string run_to_json(const GemvRun& run, const SystemConfig& sys) {
  nlohmann::json j;
  j["problem"] = {{"m", run.problem.m},
                  {"k", run.problem.k},
                  {"in_bits", run.problem.in_fmt.bits},
                  {"out_bits", run.problem.out_fmt.bits}};
  j["plan"] = {{"m_tile", run.plan.m_tile},
               {"k_tile", run.plan.k_tile},
               {"in_reg", run.plan.in_reg},
               {"out_reg", run.plan.out_reg},
               {"cr_degree", run.plan.cr_degree},
               {"iv_regs", run.plan.iv_regs},
               {"split_k", run.knobs.split_k},
               {"even_distribution", run.plan.even_distribution}};
  j["counts"] = {{"macs", run.counts.macs},
                 {"iv_writes", run.counts.iv_writes},
                 {"row_switches", run.counts.row_switches},
                 {"sf_row_opens", run.counts.sf_row_opens},
                 {"spill_row_opens", run.counts.spill_row_opens},
                 {"turnarounds", run.counts.turnarounds},
                 {"lane_reduce_steps", run.counts.lane_reduce_steps},
                 {"sf_ops", run.counts.sf_ops},
                 {"spills", run.counts.spills}};
  j["time_ns"] = {{"pim", run.pim_ns},
                  {"soc_reduce", run.soc_reduce_ns},
                  {"soc_baseline", run.soc_ns}};
  j["speedup"] = run.speedup;
  j["constants"] = {{"pim_slot_ns", sys.timing.pim_slot_ns(sys.pim)},
                    {"t_row_switch_ns", sys.timing.t_row_switch_ns},
                    {"t_turnaround_ns", sys.timing.t_turnaround_ns},
                    {"soc_mem_bw_gbps", sys.soc.mem_bw_gbps},
                    {"soc_tops_8b", sys.soc.tops_8b}};
  return j.dump(2);
}

FunctionalCheck run_functional(const GemvProblem& p, const SystemConfig& sys,
                               const PlannerKnobs& knobs, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 rng(seed);
  const bool scaled = p.in_fmt.has_scale();
  const int64_t sfb = scaled ? *p.in_fmt.sf_block : 0;
  const int64_t nblocks = scaled ? ceil_div(p.k, sfb) : 0;

  // Small integral values: exact in every element format, and bounded so the
  // 16-bit output fit-check can only fire on a real defect.
  ElemVec weights(static_cast<std::size_t>(p.m * p.k));
  ElemVec iv(static_cast<std::size_t>(p.k));
  for (double& w : weights) w = static_cast<double>(rand_int(rng, -2, 2));
  for (double& v : iv) v = static_cast<double>(rand_int(rng, -2, 2));
  ElemVec wsf, ivsf;
  if (scaled) {
    wsf.resize(static_cast<std::size_t>(p.m * nblocks));
    ivsf.resize(static_cast<std::size_t>(nblocks));
    auto rand_sf = [&]() {
      const double cand =
          p.in_fmt.is_float ? 1.0 + 0.5 * static_cast<double>(rand_int(rng, 0, 2))
                            : static_cast<double>(rand_int(rng, 1, 2));
      // Round-trip through the stored encoding so the oracle sees exactly the
      // value the placement carries (an 8-bit slot holds no fractional float).
      std::uint8_t buf[8] = {};
      encode_sf(buf, 0, cand, p.in_fmt.sf_bits, p.in_fmt.is_float);
      return decode_sf(buf, 0, p.in_fmt.sf_bits, p.in_fmt.is_float);
    };
    for (double& s : wsf) s = rand_sf();
    for (double& s : ivsf) s = rand_sf();
  }

  const auto subs = apply_split_k(p, knobs.split_k, sys.mem);
  ElemVec merged(static_cast<std::size_t>(p.m), 0.0);
  FunctionalCheck check;
  bool first_group = true;
  for (const SubProblem& sub : subs) {
    SubPlanned sp = plan_sub(sub, sys, knobs);
    const CommandTrace trace = generate_trace(sp.map, sys.mem, sys.pim);

    // Column slice of the weights (and their scale blocks) for this group.
    ElemVec w_sub(static_cast<std::size_t>(p.m * sub.problem.k));
    for (int64_t m = 0; m < p.m; ++m) {
      std::copy_n(weights.begin() + m * p.k + sub.k_offset, sub.problem.k,
                  w_sub.begin() + m * sub.problem.k);
    }
    ElemVec iv_sub(iv.begin() + sub.k_offset,
                   iv.begin() + sub.k_offset + sub.problem.k);
    ElemVec wsf_sub, ivsf_sub;
    if (scaled) {
      const int64_t b0 = sub.k_offset / sfb;
      const int64_t bn = sub.problem.k / sfb;
      wsf_sub.resize(static_cast<std::size_t>(p.m * bn));
      for (int64_t m = 0; m < p.m; ++m) {
        std::copy_n(wsf.begin() + m * nblocks + b0, bn, wsf_sub.begin() + m * bn);
      }
      ivsf_sub.assign(ivsf.begin() + b0, ivsf.begin() + b0 + bn);
    }

    const auto placed = rearrange_matrix(w_sub, wsf_sub, sp.map, sys.mem);
    const SimResult sim =
        run_trace(trace, sp.map, placed, iv_sub, ivsf_sub, sys.mem, sys.pim);
    const PlacementReport rep =
        verify_placement(sp.map, sys.mem, sys.pim, &sim.counts);
    if (first_group) {
      check.counts = sim.counts;
      check.placement = rep;
      first_group = false;
    } else if (!rep.all_ok() && check.placement.all_ok()) {
      check.placement = rep;
    }
    for (int64_t m = 0; m < p.m; ++m) {
      merged[static_cast<std::size_t>(m)] += sim.output[static_cast<std::size_t>(m)];
    }
  }

  const ElemVec ref = reference_gemv(p, weights, iv, wsf, ivsf);
  double max_ref = 0;
  for (int64_t m = 0; m < p.m; ++m) {
    check.max_abs_err = std::max(
        check.max_abs_err, std::abs(merged[static_cast<std::size_t>(m)] -
                                    ref[static_cast<std::size_t>(m)]));
    max_ref = std::max(max_ref, std::abs(ref[static_cast<std::size_t>(m)]));
  }
  const bool float_path = p.in_fmt.is_float || p.out_fmt.is_float;
  // One output rounding per channel group at 8 mantissa bits.
  check.tolerance =
      float_path ? max_ref * std::ldexp(1.0, -8) * knobs.split_k + 1e-9 : 0.0;
  check.match = check.max_abs_err <= check.tolerance;
  return check;
}

}  // namespace pimgemv
