// Shared randomized-instance generator for the property tests and the
// acceptance battery. Draws small plannable GEMV instances over the full
// knob space (format, scale blocks, bank geometry, staging window, interleave
// and split degrees) with bounded rejection of knob mixes the planner refuses.
#pragma once

#include <cstdint>
#include <random>

#include "pimgemv/pipeline.hpp"

namespace pimgemv::testing {

struct CorpusInstance {
  GemvProblem problem{};
  SystemConfig sys{};
  PlannerKnobs knobs{};
  std::uint64_t data_seed = 0;
};

inline std::int64_t draw_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng() %
                                        static_cast<std::uint64_t>(hi - lo + 1));
}

// One plannable instance; `int_only` restricts to exact integer formats.
inline CorpusInstance draw_instance(std::mt19937_64& rng, const SystemConfig& base,
                                    bool int_only) {
  for (;;) {
    CorpusInstance inst;
    inst.sys = base;
    inst.sys.mem.num_channels = static_cast<int>(1LL << draw_int(rng, 0, 2));
    inst.sys.mem.banks_per_channel = static_cast<int>(1LL << draw_int(rng, 1, 4));

    GemvProblem& p = inst.problem;
    const std::int64_t roll = draw_int(rng, 0, int_only ? 2 : 3);
    p.in_fmt.bits = roll == 0 ? 4 : roll == 1 ? 8 : 16;
    p.in_fmt.is_float = roll == 3;
    if (p.in_fmt.is_float) p.out_fmt = DataFormat{.bits = 16, .is_float = true};
    if (draw_int(rng, 0, 3) == 0) {
      p.in_fmt.sf_block = static_cast<int>(16LL << draw_int(rng, 0, 3));
    }

    inst.knobs.iv_regs = static_cast<int>(2LL << draw_int(rng, 0, 2));
    if (draw_int(rng, 0, 1) == 0) {
      inst.knobs.cr_degree = static_cast<int>(draw_int(rng, 1, 2));
    }
    int deg = static_cast<int>(1LL << draw_int(rng, 0, 2));
    while (inst.sys.mem.num_channels % deg != 0) deg /= 2;
    inst.knobs.split_k = deg;

    p.m = draw_int(rng, 1, 1024);
    std::int64_t mult = deg;
    if (p.in_fmt.has_scale()) mult *= *p.in_fmt.sf_block;
    p.k = std::max<std::int64_t>(mult, draw_int(rng, 1, 1024) / mult * mult);

    inst.data_seed = rng();
    try {
      plan_gemv(p, inst.sys.mem, inst.sys.pim, inst.knobs);
      return inst;
    } catch (const PlannerError&) {
      // redraw: this knob mix is legitimately rejected
    }
  }
}

}  // namespace pimgemv::testing
