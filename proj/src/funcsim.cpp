#include "pimgemv/funcsim.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "pimgemv/errors.hpp"

namespace pimgemv {

namespace {

using std::int64_t;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

}  // namespace

ElemVec reference_gemv(const GemvProblem& p, const ElemVec& weights, const ElemVec& iv,
                       const ElemVec& wsf, const ElemVec& ivsf) {
  p.validate();
  if (static_cast<int64_t>(weights.size()) != p.m * p.k) {
    throw ConfigError("weight buffer does not match the problem shape");
  }
  if (static_cast<int64_t>(iv.size()) != p.k) {
    throw ConfigError("input vector does not match the problem shape");
  }
  const bool scaled = p.in_fmt.has_scale();
  const int64_t sfb = scaled ? *p.in_fmt.sf_block : 0;
  const int64_t nblocks = scaled ? ceil_div(p.k, sfb) : 0;
  if (scaled && (static_cast<int64_t>(wsf.size()) != p.m * nblocks ||
                 static_cast<int64_t>(ivsf.size()) != nblocks)) {
    throw ConfigError("scale-factor buffers do not match the problem shape");
  }

  ElemVec out(static_cast<std::size_t>(p.m), 0.0);
  for (int64_t m = 0; m < p.m; ++m) {
    const double* wrow = weights.data() + m * p.k;
    double acc = 0.0;
    if (!scaled) {
      for (int64_t k = 0; k < p.k; ++k) acc += wrow[k] * iv[static_cast<std::size_t>(k)];
    } else {
      for (int64_t b = 0; b < nblocks; ++b) {
        const int64_t k0 = b * sfb;
        const int64_t k1 = std::min(p.k, k0 + sfb);
        double partial = 0.0;
        for (int64_t k = k0; k < k1; ++k) {
          partial += wrow[k] * iv[static_cast<std::size_t>(k)];
        }
        acc += partial * wsf[static_cast<std::size_t>(m * nblocks + b)] *
               ivsf[static_cast<std::size_t>(b)];
      }
    }
    out[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

SimResult run_trace(const CommandTrace& trace, const PlacementMap& map,
                    const std::vector<std::uint8_t>& placed, const ElemVec& iv,
                    const ElemVec& ivsf, const MemoryConfig& mem, const PimConfig& pim) {
  const TilePlan& plan = map.plan;
  const DataFormat& in_fmt = map.padded.in_fmt;
  const DataFormat& out_fmt = map.padded.out_fmt;
  const int64_t gran = mem.interleave_gran_bytes;
  if (static_cast<int64_t>(placed.size()) != map.slots_per_bank() * map.tot_bank * gran) {
    throw TraceError("placed buffer does not match the placement map");
  }
  if (static_cast<int64_t>(iv.size()) != map.orig_k) {
    throw TraceError("input vector does not match the placement map");
  }

  const int64_t lanes = pim.reg_size_bits / in_fmt.bits;
  const int64_t m_tile = plan.m_tile;
  const int64_t m_c = std::min(m_tile, lanes);
  const int64_t gpr = mem.granules_per_row();
  const int64_t out_lanes = pim.reg_size_bits / out_fmt.bits;
  const int64_t plane_w = std::max(m_tile, lanes);
  const int tb = map.tot_bank;
  const bool scaled = map.sf.enabled;
  const int64_t sfb = scaled ? *in_fmt.sf_block : 0;
  const int64_t wsf_lanes = scaled ? pim.reg_size_bits / in_fmt.sf_bits : 0;
  const int64_t padded_blocks = scaled ? map.padded.k / sfb : 0;
  const int64_t out_words_total = map.row_blocks_per_bank() * plan.out_reg;

  // Input-side scale factors, neutral over padded blocks.
  ElemVec ivsf_full(static_cast<std::size_t>(padded_blocks), 1.0);
  if (scaled) {
    const int64_t orig_blocks = ceil_div(map.orig_k, sfb);
    if (static_cast<int64_t>(ivsf.size()) != orig_blocks) {
      throw TraceError("input-scale buffer does not match the placement map");
    }
    std::copy(ivsf.begin(), ivsf.end(), ivsf_full.begin());
  }

  // Broadcast state shared by every bank.
  int64_t open_row = -1;
  std::vector<double> iv_vals(static_cast<std::size_t>(plan.iv_regs * lanes), 0.0);
  std::vector<int64_t> iv_id(static_cast<std::size_t>(plan.iv_regs), -1);
  std::vector<double> ivsf_vals(static_cast<std::size_t>(std::max<int64_t>(wsf_lanes, 1)), 0.0);
  int64_t ivsf_id = -1;
  int64_t wsf_slot = -1, wsf_word = -1;

  // Per-bank state.
  const int groups = plan.cr_degree;
  std::vector<std::vector<double>> total(
      static_cast<std::size_t>(tb * groups),
      std::vector<double>(static_cast<std::size_t>(plane_w), 0.0));
  std::vector<std::vector<double>> block;
  if (scaled) block.assign(total.size(), std::vector<double>(static_cast<std::size_t>(plane_w), 0.0));
  std::vector<std::vector<double>> wsf_vals(
      static_cast<std::size_t>(tb),
      std::vector<double>(static_cast<std::size_t>(std::max<int64_t>(wsf_lanes, 1)), 0.0));
  std::vector<double> out_vals(static_cast<std::size_t>(tb * out_words_total * out_lanes), 0.0);
  std::vector<bool> out_written(static_cast<std::size_t>(out_words_total), false);

  auto plane_at = [&](std::vector<std::vector<double>>& planes, int bank,
                      int group) -> std::vector<double>& {
    return planes[static_cast<std::size_t>(bank * groups + group)];
  };

  for (const PimCommand& cmd : trace.commands) {
    switch (cmd.op) {
      case PimOp::ActivateAll:
        if (cmd.row < 0 || cmd.row >= map.data_rows_per_bank + map.out_rows_per_bank) {
          throw TraceError("row activation outside the bank's placement region");
        }
        open_row = cmd.row;
        break;

      case PimOp::WriteIvReg:
        if (cmd.iv_scale) {
          for (int64_t l = 0; l < wsf_lanes; ++l) {
            const int64_t idx = cmd.word * wsf_lanes + l;
            ivsf_vals[static_cast<std::size_t>(l)] =
                idx < padded_blocks ? ivsf_full[static_cast<std::size_t>(idx)] : 1.0;
          }
          ivsf_id = cmd.word;
        } else {
          if (cmd.reg < 0 || cmd.reg >= plan.iv_regs) {
            throw TraceError("input-vector write outside the staging window");
          }
          for (int64_t j = 0; j < lanes; ++j) {
            const int64_t idx = cmd.word * lanes + j;
            iv_vals[static_cast<std::size_t>(cmd.reg * lanes + j)] =
                idx < map.orig_k ? iv[static_cast<std::size_t>(idx)] : 0.0;
          }
          iv_id[static_cast<std::size_t>(cmd.reg)] = cmd.word;
        }
        break;

      case PimOp::Mac: {
        if (cmd.slot / gpr != open_row) {
          throw TraceError("multiply-accumulate against a closed row");
        }
        if (cmd.acc_base < 0 || cmd.acc_base + lanes > plane_w) {
          throw TraceError("multiply-accumulate outside the accumulator plane");
        }
        if (cmd.reg < 0 || cmd.reg >= plan.iv_regs ||
            iv_id[static_cast<std::size_t>(cmd.reg)] != cmd.iv_word) {
          throw TraceError("multiply-accumulate against a stale input-vector register");
        }
        const double* ivw = iv_vals.data() + cmd.reg * lanes;
        for (int bank = 0; bank < tb; ++bank) {
          const std::uint8_t* src =
              placed.data() + static_cast<std::size_t>((cmd.slot * tb + bank) * gran);
          std::vector<double>& plane =
              scaled ? plane_at(block, bank, cmd.group) : plane_at(total, bank, cmd.group);
          for (int64_t j = 0; j < lanes; ++j) {
            const double w = decode_element(src, cmd.word * lanes + j, in_fmt);
            plane[static_cast<std::size_t>(cmd.acc_base + j)] += w * ivw[cmd.iv_off + j / m_c];
          }
        }
        break;
      }

      case PimOp::LaneReduce:
        for (int bank = 0; bank < tb; ++bank) {
          std::vector<double>& plane = plane_at(total, bank, cmd.group);
          for (int64_t j = 0; j < cmd.width / 2; ++j) {
            plane[static_cast<std::size_t>(j)] +=
                plane[static_cast<std::size_t>(j + cmd.width / 2)];
          }
        }
        break;

      case PimOp::SfLoad:
        if (!scaled) throw TraceError("scale-factor load without block scaling");
        if (cmd.slot / gpr != open_row) {
          throw TraceError("scale-factor load against a closed row");
        }
        for (int bank = 0; bank < tb; ++bank) {
          const std::uint8_t* src =
              placed.data() + static_cast<std::size_t>((cmd.slot * tb + bank) * gran);
          for (int64_t l = 0; l < wsf_lanes; ++l) {
            wsf_vals[static_cast<std::size_t>(bank)][static_cast<std::size_t>(l)] =
                decode_sf(src, cmd.word * wsf_lanes + l, in_fmt.sf_bits, in_fmt.is_float);
          }
        }
        wsf_slot = cmd.slot;
        wsf_word = cmd.word;
        break;

      case PimOp::SfMul: {
        if (!scaled) throw TraceError("block scaling without scale factors");
        if (wsf_slot != cmd.sf_slot || wsf_word != cmd.sf_word) {
          throw TraceError("block scaling against a stale weight-scale register");
        }
        if (ivsf_id != cmd.ivsf_word) {
          throw TraceError("block scaling against a stale input-scale register");
        }
        const double ivs = ivsf_vals[static_cast<std::size_t>(cmd.block % wsf_lanes)];
        for (int bank = 0; bank < tb; ++bank) {
          std::vector<double>& tot = plane_at(total, bank, cmd.group);
          std::vector<double>& blk = plane_at(block, bank, cmd.group);
          for (int r = cmd.r0; r < cmd.r1; ++r) {
            const double mult =
                wsf_vals[static_cast<std::size_t>(bank)]
                        [static_cast<std::size_t>(cmd.sf_lane + (r - cmd.r0))] *
                ivs;
            for (int c = cmd.c0; c < cmd.c1; ++c) {
              const std::size_t lane = static_cast<std::size_t>(c * m_c + r);
              tot[lane] += blk[lane] * mult;
              blk[lane] = 0.0;
            }
          }
        }
        break;
      }

      case PimOp::Spill: {
        if (cmd.row != open_row) {
          throw TraceError("output spill against a closed row");
        }
        for (int bank = 0; bank < tb; ++bank) {
          std::vector<double>& tot = plane_at(total, bank, cmd.group);
          for (int64_t l = 0; l < out_lanes; ++l) {
            const int64_t r = cmd.out_idx * out_lanes + l;
            const double v =
                r < m_tile ? quantize(tot[static_cast<std::size_t>(r)], out_fmt) : 0.0;
            out_vals[static_cast<std::size_t>((bank * out_words_total + cmd.out_word) *
                                              out_lanes + l)] = v;
          }
          if (cmd.out_idx == plan.out_reg - 1) {
            if (scaled) {
              for (double b : plane_at(block, bank, cmd.group)) {
                if (b != 0.0) {
                  throw TraceError("unscaled block partials left at output spill");
                }
              }
            }
            std::fill(tot.begin(), tot.end(), 0.0);
          }
        }
        out_written[static_cast<std::size_t>(cmd.out_word)] = true;
        break;
      }
    }
  }

  // Assemble the decoded output vector (padding rows dropped).
  SimResult res;
  res.counts = trace.counts;
  res.output.assign(static_cast<std::size_t>(map.orig_m), 0.0);
  for (int64_t blk = 0; blk < map.row_blocks_per_bank(); ++blk) {
    for (int w = 0; w < plan.out_reg; ++w) {
      const int64_t word = blk * plan.out_reg + w;
      if (!out_written[static_cast<std::size_t>(word)]) {
        throw TraceError("an output word was never spilled");
      }
      for (int bank = 0; bank < tb; ++bank) {
        for (int64_t l = 0; l < out_lanes; ++l) {
          const int64_t r = w * out_lanes + l;
          if (r >= m_tile) break;
          const int64_t row = (blk * tb + bank) * m_tile + r;
          if (row >= map.orig_m) continue;
          res.output[static_cast<std::size_t>(row)] =
              out_vals[static_cast<std::size_t>((bank * out_words_total + word) * out_lanes + l)];
        }
      }
    }
  }
  return res;
}

PlacementReport verify_placement(const PlacementMap& map, const MemoryConfig& mem,
                                 const PimConfig& pim, const TraceCounts* counts) {
  PlacementReport rep;
  std::ostringstream detail;
  const TilePlan& plan = map.plan;
  const int64_t tiles = map.m_tm * map.k_tm;

  // Tile order must touch every tile exactly once.
  if (static_cast<int64_t>(map.tile_order.size()) != tiles) {
    rep.permutation_ok = false;
    detail << "tile order lists " << map.tile_order.size() << " of " << tiles << " tiles; ";
  } else {
    std::vector<bool> seen(static_cast<std::size_t>(tiles), false);
    for (int64_t t : map.tile_order) {
      if (t < 0 || t >= tiles || seen[static_cast<std::size_t>(t)]) {
        rep.permutation_ok = false;
        detail << "tile order is not a bijection (tile " << t << "); ";
        break;
      }
      seen[static_cast<std::size_t>(t)] = true;
    }
  }

  // Every row-block (hence every matrix row) must live in exactly one bank.
  std::vector<int64_t> bank_of(static_cast<std::size_t>(map.m_tm), -1);
  if (rep.permutation_ok) {
    for (int64_t pos = 0; pos < tiles; ++pos) {
      const int64_t t = map.tile_order[static_cast<std::size_t>(pos)];
      const int64_t rb = t / map.k_tm;
      const int64_t bank = pos % map.tot_bank;
      auto& assigned = bank_of[static_cast<std::size_t>(rb)];
      if (assigned < 0) {
        assigned = bank;
      } else if (assigned != bank && plan.m_tile > 1) {
        rep.row_span_ok = false;
        detail << "rows of row-block " << rb << " span banks " << assigned << " and "
               << bank << "; ";
        break;
      }
    }
  }

  // Even split: same number of resident matrix rows in every bank.
  if (rep.row_span_ok && rep.permutation_ok && plan.even_distribution) {
    std::vector<int64_t> rows(static_cast<std::size_t>(map.tot_bank), 0);
    for (int64_t rb = 0; rb < map.m_tm; ++rb) {
      const int64_t b = bank_of[static_cast<std::size_t>(rb)];
      if (b >= 0) rows[static_cast<std::size_t>(b)] += plan.m_tile;
    }
    for (int64_t r : rows) {
      if (r != rows[0]) {
        rep.uniform_rows_ok = false;
        detail << "banks hold unequal row counts (" << rows[0] << " vs " << r << "); ";
        break;
      }
    }
  }

  // Streaming the placement opens each data row exactly once outside detours.
  if (counts != nullptr) {
    const int64_t expect = ceil_div(map.bytes_per_bank(mem), mem.row_buffer_bytes);
    if (counts->row_switches != expect) {
      rep.row_switch_ok = false;
      detail << "first-touch row opens " << counts->row_switches << " != capacity bound "
             << expect << "; ";
    }
  }

  // The planned demand must fit the register file.
  const int64_t lanes = pim.reg_size_bits / map.padded.in_fmt.bits;
  const int out_phys = static_cast<int>(
      ceil_div(std::max(plan.m_tile, lanes) * map.padded.out_fmt.bits, pim.reg_size_bits));
  const int planes = map.sf.enabled ? 2 : 1;
  const int in_eff = std::max(plan.in_reg, plan.iv_regs) + (map.sf.enabled ? 2 : 0);
  if (plan.cr_degree * out_phys * planes + in_eff > pim.regs_per_alu) {
    rep.budget_ok = false;
    detail << "register demand " << plan.cr_degree * out_phys * planes + in_eff << " > "
           << pim.regs_per_alu << "; ";
  }

  rep.detail = detail.str();
  return rep;
}

std::string report_to_json(const PlacementReport& r) {
  nlohmann::json j{{"row_span_ok", r.row_span_ok},
                   {"uniform_rows_ok", r.uniform_rows_ok},
                   {"permutation_ok", r.permutation_ok},
                   {"row_switch_ok", r.row_switch_ok},
                   {"budget_ok", r.budget_ok},
                   {"all_ok", r.all_ok()},
                   {"detail", r.detail}};
  return j.dump(2);
}

}  // namespace pimgemv
