#include "pimgemv/planner.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "pimgemv/errors.hpp"

namespace pimgemv {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

int ceil_div_int(std::int64_t a, std::int64_t b) { return static_cast<int>(ceil_div(a, b)); }

}  // namespace

void GemvProblem::validate() const {
  if (m < 1 || k < 1) {
    throw ConfigError("GEMV dimensions must be positive");
  }
  in_fmt.validate();
  out_fmt.validate();
  if (out_fmt.has_scale()) {
    throw ConfigError("output format cannot carry block scale factors");
  }
}

RegParams get_param(std::int64_t m_tile, std::int64_t k_tile, const GemvProblem& p,
                    const MemoryConfig& mem, const PimConfig& pim) {
  const std::int64_t gran_bits = mem.interleave_gran_bytes * 8;
  RegParams r;
  // One tile's input-vector slice, in granule-sized staging chunks (>= 1).
  r.in_reg = ceil_div_int(k_tile * p.in_fmt.bits, gran_bits);
  // One tile row-group's accumulators at the output width.
  r.out_reg = ceil_div_int(m_tile * p.out_fmt.bits, pim.reg_size_bits);
  return r;
}

std::pair<std::int64_t, std::int64_t> get_tile_shape(const GemvProblem& p,
                                                     const MemoryConfig& mem,
                                                     const PimConfig& pim,
                                                     int acc_planes) {
  const std::int64_t ept = elements_per_tile(mem, p.in_fmt);
  const std::int64_t tot_bank = mem.total_banks();
  for (std::int64_t m_tile = ept; m_tile >= 1; m_tile /= 2) {
    if (p.m % (tot_bank * m_tile) != 0) continue;
    const std::int64_t k_tile = ept / m_tile;
    const RegParams r = get_param(m_tile, k_tile, p, mem, pim);
    if (r.in_reg + r.out_reg * acc_planes <= pim.regs_per_alu) {
      return {m_tile, k_tile};
    }
  }
  // No width spreads M evenly over all banks: fall back to the row-vector
  // tile, which keeps every bank's stream identical at the cost of padding.
  return {1, ept};
}

std::vector<std::int64_t> get_tile_cr_order(std::int64_t m_tm, std::int64_t k_tm,
                                            int tot_bank, int degree) {
  if (m_tm <= 0 || k_tm <= 0 || tot_bank <= 0 || degree <= 0) {
    throw PlannerError("tile order requires positive dimensions");
  }
  if (m_tm % tot_bank != 0) {
    throw PlannerError("row-block count must be a multiple of the bank count");
  }
  const std::int64_t blocks_per_bank = m_tm / tot_bank;
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(m_tm * k_tm));
  // Each pass interleaves up to `degree` row-blocks per bank; the final pass
  // takes whatever remains so no padded row-blocks are ever introduced.
  for (std::int64_t first = 0; first < blocks_per_bank; first += degree) {
    const std::int64_t p_q = std::min<std::int64_t>(degree, blocks_per_bank - first);
    for (std::int64_t cj = 0; cj < k_tm; ++cj) {
      for (std::int64_t ri = 0; ri < p_q * tot_bank; ++ri) {
        const std::int64_t row_block = first * tot_bank + ri;
        out.push_back(row_block * k_tm + cj);
      }
    }
  }
  return out;
}

std::vector<std::int64_t> get_tile_row_order(std::int64_t m_tm, std::int64_t k_tm) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(m_tm * k_tm));
  std::iota(out.begin(), out.end(), std::int64_t{0});
  return out;
}

std::vector<std::int64_t> get_tile_column_order(std::int64_t m_tm, std::int64_t k_tm) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(m_tm * k_tm));
  std::int64_t pos = 0;
  for (std::int64_t cj = 0; cj < k_tm; ++cj) {
    for (std::int64_t ri = 0; ri < m_tm; ++ri) {
      out[static_cast<std::size_t>(pos++)] = ri * k_tm + cj;
    }
  }
  return out;
}

int get_cro_max_degree(std::int64_t m, std::int64_t m_tile, int tot_bank,
                       int in_reg_eff, int out_reg_eff, int regs_per_alu) {
  const std::int64_t blocks_per_bank =
      std::max<std::int64_t>(1, m / (m_tile * tot_bank));
  for (std::int64_t deg = blocks_per_bank; deg > 1; --deg) {
    if (deg * out_reg_eff + in_reg_eff <= regs_per_alu) {
      return static_cast<int>(deg);
    }
  }
  return 1;
}

std::vector<SubProblem> apply_split_k(const GemvProblem& p, int degree,
                                      const MemoryConfig& mem) {
  p.validate();
  if (degree < 1) throw PlannerError("split-K degree must be >= 1");
  if (mem.num_channels % degree != 0) {
    throw PlannerError("split-K degree must divide the channel count");
  }
  if (p.k % degree != 0) {
    throw PlannerError("split-K degree must divide K");
  }
  const std::int64_t sub_k = p.k / degree;
  if (p.in_fmt.has_scale() && sub_k % *p.in_fmt.sf_block != 0) {
    throw PlannerError("split-K slices must align with scale-factor blocks");
  }
  const int sub_channels = mem.num_channels / degree;
  std::vector<SubProblem> out;
  out.reserve(static_cast<std::size_t>(degree));
  for (int i = 0; i < degree; ++i) {
    SubProblem s;
    s.problem = p;
    s.problem.k = sub_k;
    s.k_offset = static_cast<std::int64_t>(i) * sub_k;
    s.channel_begin = i * sub_channels;
    s.channel_count = sub_channels;
    out.push_back(s);
  }
  return out;
}

SfLayout interleave_scale_factors(const GemvProblem& p, const MemoryConfig& mem) {
  SfLayout sf;
  if (!p.in_fmt.has_scale()) return sf;
  const std::int64_t gran_bits = mem.interleave_gran_bytes * 8;
  const std::int64_t block = *p.in_fmt.sf_block;
  const std::int64_t sf_bits = p.in_fmt.sf_bits;
  if (gran_bits % sf_bits != 0) {
    throw ConfigError("scale-factor width must divide the interleave granule");
  }
  const std::int64_t covered_bits = block * p.in_fmt.bits;
  if (covered_bits < sf_bits || covered_bits % sf_bits != 0) {
    throw ConfigError(
        "scale-factor chunks must cover a whole number of weight tiles "
        "(block_size * element_bits must be a positive multiple of sf_bits)");
  }
  sf.enabled = true;
  sf.tiles_per_chunk = covered_bits / sf_bits;
  sf.sf_per_chunk = gran_bits / sf_bits;
  return sf;
}

TilePlan plan_gemv(const GemvProblem& p, const MemoryConfig& mem, const PimConfig& pim,
                   const PlannerKnobs& knobs) {
  p.validate();
  if (knobs.iv_regs < 1) throw PlannerError("iv_regs must be >= 1");
  const bool scaled = p.in_fmt.has_scale();
  if (scaled) {
    interleave_scale_factors(p, mem);  // validates chunk arithmetic
  }
  const int acc_planes = scaled ? 2 : 1;
  const std::int64_t ept = elements_per_tile(mem, p.in_fmt);

  TilePlan plan;
  switch (knobs.shape) {
    case TileShapeKind::planned: {
      auto [mt, kt] = get_tile_shape(p, mem, pim, acc_planes);
      plan.m_tile = mt;
      plan.k_tile = kt;
      break;
    }
    case TileShapeKind::column_vector:
      plan.m_tile = ept;
      plan.k_tile = 1;
      break;
    case TileShapeKind::row_vector:
      plan.m_tile = 1;
      plan.k_tile = ept;
      break;
  }
  const RegParams rp = get_param(plan.m_tile, plan.k_tile, p, mem, pim);
  plan.in_reg = rp.in_reg;
  plan.out_reg = rp.out_reg;
  plan.iv_regs = knobs.iv_regs;
  plan.intra = knobs.intra;
  plan.order = knobs.order;
  plan.even_distribution = (p.m % (mem.total_banks() * plan.m_tile) == 0);

  // Effective register demand: the staged input-vector window (plus two
  // staging words for interleaved scale factors) and one accumulator group
  // per interleaved row-block (doubled when block partials are kept apart
  // from the running totals). Accumulators physically span every SIMD lane,
  // so a tile narrower than the lane count still occupies full-width partials
  // until the end-of-pass lane reduction.
  const std::int64_t word_elems = pim.reg_size_bits / p.in_fmt.bits;
  auto phys_out = [&](std::int64_t m_tile) {
    const std::int64_t acc_lanes = std::max(m_tile, word_elems);
    return ceil_div_int(acc_lanes * p.out_fmt.bits, pim.reg_size_bits);
  };
  const int in_reg_eff = std::max(plan.in_reg, plan.iv_regs) + (scaled ? 2 : 0);
  int out_reg_eff = phys_out(plan.m_tile) * acc_planes;

  // A wide staging window can leave no room for even one accumulator group;
  // trade tile height for window space (a narrower tile needs fewer output
  // words) before giving up. The shape search never sees the window, so the
  // default window keeps the shapes it would pick on its own.
  while (knobs.shape == TileShapeKind::planned && plan.m_tile > 1 &&
         out_reg_eff + in_reg_eff > pim.regs_per_alu) {
    plan.m_tile /= 2;
    plan.k_tile = elements_per_tile(mem, p.in_fmt) / plan.m_tile;
    const RegParams nrp = get_param(plan.m_tile, plan.k_tile, p, mem, pim);
    plan.in_reg = nrp.in_reg;
    plan.out_reg = nrp.out_reg;
    plan.even_distribution = (p.m % (mem.total_banks() * plan.m_tile) == 0);
    out_reg_eff = phys_out(plan.m_tile) * acc_planes;
  }

  if (plan.order != TileOrderKind::column_row) {
    if (knobs.cr_degree && *knobs.cr_degree > 1) {
      throw PlannerError("row-block interleaving requires the column-row tile order");
    }
    plan.cr_degree = 1;
  } else if (knobs.cr_degree) {
    plan.cr_degree = *knobs.cr_degree;
    if (plan.cr_degree < 1) throw PlannerError("cr_degree must be >= 1");
  } else {
    plan.cr_degree = get_cro_max_degree(p.m, plan.m_tile, mem.total_banks(),
                                        in_reg_eff, out_reg_eff, pim.regs_per_alu);
  }
  if (plan.cr_degree * out_reg_eff + in_reg_eff > pim.regs_per_alu) {
    std::ostringstream msg;
    msg << "requested knobs exceed the register file: " << plan.cr_degree << " * "
        << out_reg_eff << " accumulator registers + " << in_reg_eff
        << " staging registers > " << pim.regs_per_alu;
    throw PlannerError(msg.str());
  }
  return plan;
}

PlacementMap build_placement_map(const GemvProblem& p, const TilePlan& plan,
                                 const MemoryConfig& mem, int channel_begin,
                                 int num_channels) {
  p.validate();
  if (num_channels == 0) num_channels = mem.num_channels;
  if (channel_begin < 0 || num_channels < 1 ||
      channel_begin + num_channels > mem.num_channels) {
    throw PlannerError("channel group out of range");
  }
  if (plan.m_tile < 1 || plan.k_tile < 1 ||
      plan.m_tile * plan.k_tile != elements_per_tile(mem, p.in_fmt)) {
    throw PlannerError("tile shape does not fill one interleave granule");
  }

  PlacementMap map;
  map.plan = plan;
  map.orig_m = p.m;
  map.orig_k = p.k;
  map.channel_begin = channel_begin;
  map.num_channels = num_channels;
  map.tot_bank = num_channels * mem.banks_per_channel;
  map.sf = interleave_scale_factors(p, mem);

  // Pad so every bank holds the same number of whole row-blocks and K splits
  // into whole tiles (and whole scale-factor blocks when present).
  const std::int64_t m_mult = plan.m_tile * map.tot_bank;
  std::int64_t k_mult = plan.k_tile;
  if (map.sf.enabled) k_mult = std::lcm(k_mult, *p.in_fmt.sf_block);
  map.padded = p;
  map.padded.m = ceil_div(p.m, m_mult) * m_mult;
  map.padded.k = ceil_div(p.k, k_mult) * k_mult;
  map.m_tm = map.padded.m / plan.m_tile;
  map.k_tm = map.padded.k / plan.k_tile;

  switch (plan.order) {
    case TileOrderKind::column_row:
      map.tile_order = get_tile_cr_order(map.m_tm, map.k_tm, map.tot_bank, plan.cr_degree);
      break;
    case TileOrderKind::row_major:
      map.tile_order = get_tile_row_order(map.m_tm, map.k_tm);
      break;
    case TileOrderKind::column_major:
      map.tile_order = get_tile_column_order(map.m_tm, map.k_tm);
      break;
  }

  if (plan.order == TileOrderKind::column_row) {
    map.passes = ceil_div(map.row_blocks_per_bank(), plan.cr_degree);
    if (map.sf.enabled && plan.intra != IntraTileOrder::column_major && plan.m_tile > 1) {
      throw PlannerError("scale-factor interleaving requires column-major tiles");
    }

    // Every bank runs the same stream of slots; build it once. Scale factors
    // are appended to a rolling chunk and the chunk's granule is inserted
    // right after the weight tile that filled it.
    const std::int64_t tiles = map.tiles_per_bank();
    map.tile_slot.reserve(static_cast<std::size_t>(tiles));
    const std::int64_t cap = map.sf.enabled ? map.sf.sf_per_chunk : 0;
    const std::int64_t kt = plan.k_tile;
    const std::int64_t sfb = map.sf.enabled ? *p.in_fmt.sf_block : 0;
    std::int64_t emitted = 0;   // scale-factor lanes emitted so far
    std::int64_t flushed = 0;   // complete chunks already placed
    std::map<std::int64_t, std::vector<SfSegment>> pending;  // chunk -> segments

    auto flush_chunk = [&](std::int64_t chunk) {
      SlotDesc slot;
      slot.is_sf = true;
      auto it = pending.find(chunk);
      if (it != pending.end()) {
        slot.sf_entries = std::move(it->second);
        pending.erase(it);
      }
      const std::int64_t pos = static_cast<std::int64_t>(map.bank_slots.size());
      for (SfSegment& seg : slot.sf_entries) {
        seg.slot = pos;
        map.sf_where[{seg.pass, seg.group, seg.block}].push_back(seg);
      }
      map.bank_slots.push_back(std::move(slot));
    };

    for (std::int64_t q = 0; q < map.passes; ++q) {
      const int p_q = map.groups_in_pass(q);
      for (std::int64_t cj = 0; cj < map.k_tm; ++cj) {
        for (int g = 0; g < p_q; ++g) {
          map.tile_slot.push_back(static_cast<std::int64_t>(map.bank_slots.size()));
          SlotDesc slot;
          slot.weight = WeightSlot{q, cj, g};
          map.bank_slots.push_back(slot);

          if (!map.sf.enabled) continue;
          // Emit the scale factors of every block that starts inside this
          // tile column: m_tile lanes per block, one per row of the row-block.
          const std::int64_t b_lo = ceil_div(cj * kt, sfb);
          const std::int64_t b_hi = ((cj + 1) * kt - 1) / sfb;
          for (std::int64_t b = b_lo; b <= b_hi; ++b) {
            const std::int64_t lane0 = emitted;
            const std::int64_t c0 = lane0 / cap;
            const std::int64_t c1 = (lane0 + plan.m_tile - 1) / cap;
            for (std::int64_t c = c0; c <= c1; ++c) {
              SfSegment seg;
              seg.pass = q;
              seg.group = g;
              seg.block = b;
              seg.row0 = std::max<std::int64_t>(0, c * cap - lane0);
              seg.rows =
                  std::min<std::int64_t>(plan.m_tile, (c + 1) * cap - lane0) - seg.row0;
              seg.lane = (lane0 + seg.row0) % cap;
              pending[c].push_back(seg);
            }
            emitted += plan.m_tile;
          }
          while ((flushed + 1) * cap <= emitted) {
            flush_chunk(flushed);
            ++flushed;
          }
        }
      }
    }
    if (map.sf.enabled && emitted > flushed * cap) {
      flush_chunk(flushed);  // final, partially filled chunk
    }
  } else {
    // Comparison layouts keep per-bank streams that differ from bank to bank
    // (slot s of bank b holds tile_order[s * tot_bank + b]); only the slot
    // count and the granule coordinates are meaningful here.
    map.passes = 0;
    map.bank_slots.assign(
        static_cast<std::size_t>(map.m_tm * map.k_tm / map.tot_bank), SlotDesc{});
  }

  map.data_rows_per_bank = ceil_div(map.slots_per_bank(), mem.granules_per_row());
  // One accumulator group spills out_reg words at the end of its pass.
  const std::int64_t out_words = map.row_blocks_per_bank() * plan.out_reg;
  map.out_rows_per_bank =
      map.passes > 0 ? ceil_div(out_words * mem.word_bytes(), mem.row_buffer_bytes) : 0;
  map.rows_per_bank = map.row_blocks_per_bank() * plan.m_tile;
  return map;
}

GranuleCoord PlacementMap::coord_of_slot(int global_bank, std::int64_t slot,
                                         const MemoryConfig& mem) const {
  GranuleCoord c;
  c.channel = channel_begin + global_bank % num_channels;
  c.bank = global_bank / num_channels;
  c.dram_row = slot / mem.granules_per_row();
  c.byte_in_row = (slot % mem.granules_per_row()) * mem.interleave_gran_bytes;
  return c;
}

std::int64_t PlacementMap::slot_of_tile_ordinal(std::int64_t ordinal) const {
  if (ordinal < 0 || ordinal >= static_cast<std::int64_t>(tile_slot.size())) {
    throw TraceError("weight-tile ordinal out of range");
  }
  return tile_slot[static_cast<std::size_t>(ordinal)];
}

namespace {

// Element index inside one packed tile for local (row, col).
std::int64_t intra_index(const TilePlan& plan, std::int64_t r, std::int64_t c) {
  return plan.intra == IntraTileOrder::column_major ? c * plan.m_tile + r
                                                    : r * plan.k_tile + c;
}

void encode_weight_tile(std::uint8_t* dst, const ElemVec& weights,
                        const PlacementMap& map, std::int64_t row_block,
                        std::int64_t cj) {
  const TilePlan& plan = map.plan;
  const DataFormat& fmt = map.padded.in_fmt;
  for (std::int64_t c = 0; c < plan.k_tile; ++c) {
    for (std::int64_t r = 0; r < plan.m_tile; ++r) {
      const std::int64_t row = row_block * plan.m_tile + r;
      const std::int64_t col = cj * plan.k_tile + c;
      const double v = (row < map.orig_m && col < map.orig_k)
                           ? weights[static_cast<std::size_t>(row * map.orig_k + col)]
                           : 0.0;
      encode_element(dst, intra_index(plan, r, c), v, fmt);
    }
  }
}

}  // namespace

std::vector<std::uint8_t> rearrange_matrix(const ElemVec& weights, const ElemVec& wsf,
                                           const PlacementMap& map,
                                           const MemoryConfig& mem) {
  if (static_cast<std::int64_t>(weights.size()) != map.orig_m * map.orig_k) {
    throw PlannerError("weight buffer does not match the problem shape");
  }
  const DataFormat& fmt = map.padded.in_fmt;
  const std::int64_t sf_cols =
      map.sf.enabled ? ceil_div(map.orig_k, *fmt.sf_block) : 0;
  if (map.sf.enabled &&
      static_cast<std::int64_t>(wsf.size()) != map.orig_m * sf_cols) {
    throw PlannerError("scale-factor buffer does not match the problem shape");
  }

  const std::int64_t gran = mem.interleave_gran_bytes;
  std::vector<std::uint8_t> placed(
      static_cast<std::size_t>(map.slots_per_bank() * map.tot_bank * gran), 0);

  if (map.plan.order == TileOrderKind::column_row) {
    for (std::int64_t s = 0; s < map.slots_per_bank(); ++s) {
      const SlotDesc& slot = map.bank_slots[static_cast<std::size_t>(s)];
      for (int b = 0; b < map.tot_bank; ++b) {
        std::uint8_t* dst =
            placed.data() + static_cast<std::size_t>((s * map.tot_bank + b) * gran);
        if (!slot.is_sf) {
          const std::int64_t rb = map.row_block(slot.weight.pass, slot.weight.group, b);
          encode_weight_tile(dst, weights, map, rb, slot.weight.cj);
        } else {
          for (const SfSegment& seg : slot.sf_entries) {
            const std::int64_t rb = map.row_block(seg.pass, seg.group, b);
            for (std::int64_t i = 0; i < seg.rows; ++i) {
              const std::int64_t row = rb * map.plan.m_tile + seg.row0 + i;
              double v = 1.0;  // neutral scale for padded rows / columns
              if (row < map.orig_m && seg.block < sf_cols) {
                v = wsf[static_cast<std::size_t>(row * sf_cols + seg.block)];
              }
              encode_sf(dst, seg.lane + i, v, fmt.sf_bits, fmt.is_float);
            }
          }
        }
      }
    }
  } else {
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(map.tile_order.size()); ++f) {
      const std::int64_t tile = map.tile_order[static_cast<std::size_t>(f)];
      std::uint8_t* dst = placed.data() + static_cast<std::size_t>(f * gran);
      encode_weight_tile(dst, weights, map, tile / map.k_tm, tile % map.k_tm);
    }
  }
  return placed;
}

ElemVec restore_matrix(const std::vector<std::uint8_t>& placed, const PlacementMap& map,
                       const MemoryConfig& mem) {
  const std::int64_t gran = mem.interleave_gran_bytes;
  if (static_cast<std::int64_t>(placed.size()) !=
      map.slots_per_bank() * map.tot_bank * gran) {
    throw PlannerError("placed buffer does not match the placement map");
  }
  const DataFormat& fmt = map.padded.in_fmt;
  ElemVec weights(static_cast<std::size_t>(map.orig_m * map.orig_k), 0.0);

  auto decode_tile = [&](const std::uint8_t* src, std::int64_t rb, std::int64_t cj) {
    for (std::int64_t c = 0; c < map.plan.k_tile; ++c) {
      for (std::int64_t r = 0; r < map.plan.m_tile; ++r) {
        const std::int64_t row = rb * map.plan.m_tile + r;
        const std::int64_t col = cj * map.plan.k_tile + c;
        if (row < map.orig_m && col < map.orig_k) {
          weights[static_cast<std::size_t>(row * map.orig_k + col)] =
              decode_element(src, intra_index(map.plan, r, c), fmt);
        }
      }
    }
  };

  if (map.plan.order == TileOrderKind::column_row) {
    for (std::int64_t s = 0; s < map.slots_per_bank(); ++s) {
      const SlotDesc& slot = map.bank_slots[static_cast<std::size_t>(s)];
      if (slot.is_sf) continue;
      for (int b = 0; b < map.tot_bank; ++b) {
        const std::uint8_t* src =
            placed.data() + static_cast<std::size_t>((s * map.tot_bank + b) * gran);
        decode_tile(src, map.row_block(slot.weight.pass, slot.weight.group, b),
                    slot.weight.cj);
      }
    }
  } else {
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(map.tile_order.size()); ++f) {
      const std::int64_t tile = map.tile_order[static_cast<std::size_t>(f)];
      decode_tile(placed.data() + static_cast<std::size_t>(f * gran), tile / map.k_tm,
                  tile % map.k_tm);
    }
  }
  return weights;
}

namespace {

using nlohmann::json;

json format_to_json(const DataFormat& f) {
  json j{{"bits", f.bits}, {"is_float", f.is_float}, {"sf_bits", f.sf_bits}};
  if (f.sf_block) j["sf_block"] = *f.sf_block;
  return j;
}

DataFormat format_from_json(const json& j) {
  DataFormat f;
  f.bits = j.at("bits").get<int>();
  f.is_float = j.at("is_float").get<bool>();
  f.sf_bits = j.value("sf_bits", 8);
  if (j.contains("sf_block")) f.sf_block = j.at("sf_block").get<int>();
  return f;
}

const char* order_name(TileOrderKind o) {
  switch (o) {
    case TileOrderKind::column_row: return "column_row";
    case TileOrderKind::row_major: return "row_major";
    case TileOrderKind::column_major: return "column_major";
  }
  return "column_row";
}

TileOrderKind order_from_name(const std::string& s) {
  if (s == "column_row") return TileOrderKind::column_row;
  if (s == "row_major") return TileOrderKind::row_major;
  if (s == "column_major") return TileOrderKind::column_major;
  throw ConfigError("unknown tile order: " + s);
}

}  // namespace

std::string placement_to_json(const PlacementMap& map, const MemoryConfig& mem) {
  json j;
  j["problem"] = {{"m", map.orig_m},
                  {"k", map.orig_k},
                  {"in_fmt", format_to_json(map.padded.in_fmt)},
                  {"out_fmt", format_to_json(map.padded.out_fmt)}};
  j["plan"] = {{"m_tile", map.plan.m_tile},
               {"k_tile", map.plan.k_tile},
               {"in_reg", map.plan.in_reg},
               {"out_reg", map.plan.out_reg},
               {"cr_degree", map.plan.cr_degree},
               {"iv_regs", map.plan.iv_regs},
               {"intra", map.plan.intra == IntraTileOrder::column_major ? "column_major"
                                                                        : "row_major"},
               {"order", order_name(map.plan.order)},
               {"even_distribution", map.plan.even_distribution}};
  j["channel_begin"] = map.channel_begin;
  j["num_channels"] = map.num_channels;
  j["memory"] = {{"num_channels", mem.num_channels},
                 {"banks_per_channel", mem.banks_per_channel},
                 {"row_buffer_bytes", mem.row_buffer_bytes},
                 {"interleave_gran_bytes", mem.interleave_gran_bytes},
                 {"dram_word_bits", mem.dram_word_bits}};
  j["padded"] = {{"m", map.padded.m}, {"k", map.padded.k}};
  j["rows"] = {{"data", map.data_rows_per_bank},
               {"out", map.out_rows_per_bank},
               {"matrix_rows_per_bank", map.rows_per_bank}};
  j["bytes_per_bank"] = map.bytes_per_bank(mem);
  j["tile_order"] = map.tile_order;
  return j.dump(2);
}

PlacementMap placement_from_json(const std::string& text) {
  json j = json::parse(text);
  GemvProblem p;
  p.m = j.at("problem").at("m").get<std::int64_t>();
  p.k = j.at("problem").at("k").get<std::int64_t>();
  p.in_fmt = format_from_json(j.at("problem").at("in_fmt"));
  p.out_fmt = format_from_json(j.at("problem").at("out_fmt"));

  TilePlan plan;
  const json& pj = j.at("plan");
  plan.m_tile = pj.at("m_tile").get<std::int64_t>();
  plan.k_tile = pj.at("k_tile").get<std::int64_t>();
  plan.in_reg = pj.at("in_reg").get<int>();
  plan.out_reg = pj.at("out_reg").get<int>();
  plan.cr_degree = pj.at("cr_degree").get<int>();
  plan.iv_regs = pj.at("iv_regs").get<int>();
  plan.intra = pj.at("intra").get<std::string>() == "row_major"
                   ? IntraTileOrder::row_major
                   : IntraTileOrder::column_major;
  plan.order = order_from_name(pj.at("order").get<std::string>());
  plan.even_distribution = pj.at("even_distribution").get<bool>();

  // The manifest stores only the inputs; rebuild and cross-check the order so
  // a stale or hand-edited file cannot silently describe a different layout.
  MemoryConfig mem;
  const json& mj = j.at("memory");
  mem.num_channels = mj.at("num_channels").get<int>();
  mem.banks_per_channel = mj.at("banks_per_channel").get<int>();
  mem.row_buffer_bytes = mj.at("row_buffer_bytes").get<std::int64_t>();
  mem.interleave_gran_bytes = mj.at("interleave_gran_bytes").get<std::int64_t>();
  mem.dram_word_bits = mj.at("dram_word_bits").get<int>();
  mem.validate();
  const int num_channels = j.at("num_channels").get<int>();
  const int channel_begin = j.at("channel_begin").get<int>();
  PlacementMap map = build_placement_map(p, plan, mem, channel_begin, num_channels);
  const auto stored = j.at("tile_order").get<std::vector<std::int64_t>>();
  if (stored != map.tile_order) {
    throw ConfigError("placement manifest does not match the rebuilt tile order");
  }
  return map;
}

}  // namespace pimgemv
