#include "pimgemv/trace.hpp"

#include <cassert>
#include <numeric>
#include <tuple>

#include "pimgemv/errors.hpp"

namespace pimgemv {

TraceCounts recount_commands(const std::vector<PimCommand>& commands) {
  TraceCounts c;
  int dir = 0;  // 0 = idle, 1 = bus writing, 2 = bus reading
  auto to_write = [&] {
    if (dir == 2) ++c.turnarounds;
    dir = 1;
  };
  auto to_read = [&] {
    if (dir == 1) ++c.turnarounds;
    dir = 2;
  };
  for (const PimCommand& cmd : commands) {
    switch (cmd.op) {
      case PimOp::ActivateAll:
        switch (cmd.open_kind) {
          case RowOpenKind::Data: ++c.row_switches; break;
          case RowOpenKind::SfDetour: ++c.sf_row_opens; break;
          case RowOpenKind::SpillDetour: ++c.spill_row_opens; break;
        }
        break;
      case PimOp::WriteIvReg:
        ++c.iv_writes;
        to_write();
        break;
      case PimOp::Mac:
        ++c.macs;
        to_read();
        break;
      case PimOp::LaneReduce:
        c.lane_reduce_steps += cmd.slots;
        break;
      case PimOp::SfLoad:
        ++c.sf_ops;
        to_read();
        break;
      case PimOp::SfMul:
        ++c.sf_ops;
        break;
      case PimOp::Spill:
        ++c.spills;
        to_write();
        break;
    }
  }
  return c;
}

namespace {

using std::int64_t;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

enum class Ctx { Walk, Sf, Spill };

struct TraceBuilder {
  const PlacementMap& map;
  const MemoryConfig& mem;
  const PimConfig& pim;
  std::vector<PimCommand> out;

  // Geometry.
  int64_t m_tile, k_tile, lanes, m_c, wpg, gpr;
  int64_t iv_words_total, data_rows;
  int64_t sfb = 0;          // scale-block width in columns (0 = disabled)
  int64_t wsf_lanes = 0;    // scale lanes per staged word
  int iv_regs;
  int fold_steps = 0;       // lane folds per accumulator finalization
  int fold_slot_cost = 0;   // charged slots per fold (0 with a reduction tree)

  // Stream state.
  int64_t cur_row = -1;
  std::vector<bool> data_row_seen;
  RowOpenKind pending_reopen = RowOpenKind::SpillDetour;
  int64_t iv_hi = 0;  // staged input-vector words form [max(0, iv_hi - iv_regs), iv_hi)
  int64_t cur_ivsf = -1;
  int64_t wsf_slot = -1, wsf_word = -1;

  TraceBuilder(const PlacementMap& m, const MemoryConfig& mm, const PimConfig& pp)
      : map(m), mem(mm), pim(pp) {
    const TilePlan& plan = map.plan;
    m_tile = plan.m_tile;
    k_tile = plan.k_tile;
    lanes = pim.reg_size_bits / map.padded.in_fmt.bits;
    m_c = std::min(m_tile, lanes);
    wpg = mem.words_per_granule();
    gpr = mem.granules_per_row();
    iv_words_total = ceil_div(map.padded.k, lanes);
    data_rows = map.data_rows_per_bank;
    iv_regs = plan.iv_regs;
    if (map.sf.enabled) {
      sfb = *map.padded.in_fmt.sf_block;
      wsf_lanes = pim.reg_size_bits / map.padded.in_fmt.sf_bits;
    }
    for (int64_t w = lanes; w > m_tile; w /= 2) ++fold_steps;
    fold_slot_cost = pim.has_reduction_tree ? 0 : plan.out_reg;
    data_row_seen.assign(static_cast<std::size_t>(data_rows), false);
  }

  void emit(PimCommand c) { out.push_back(c); }

  // First open of a data row is the mandatory streaming cost; re-opens are
  // charged to whichever detour (scale chunk or spill) displaced the stream.
  void open_row(int64_t row, Ctx ctx) {
    if (row == cur_row) return;
    assert(row >= 0 && row < data_rows + map.out_rows_per_bank);
    PimCommand c;
    c.op = PimOp::ActivateAll;
    c.row = row;
    if (row >= data_rows) {
      c.open_kind = RowOpenKind::SpillDetour;
    } else if (!data_row_seen[static_cast<std::size_t>(row)]) {
      data_row_seen[static_cast<std::size_t>(row)] = true;
      c.open_kind = RowOpenKind::Data;
    } else {
      c.open_kind = ctx == Ctx::Sf ? RowOpenKind::SfDetour : pending_reopen;
    }
    if (ctx == Ctx::Sf) pending_reopen = RowOpenKind::SfDetour;
    if (ctx == Ctx::Spill) pending_reopen = RowOpenKind::SpillDetour;
    cur_row = row;
    emit(c);
  }

  // Stage input-vector words in ascending bursts of up to iv_regs. A window
  // that already covers `word` costs nothing, so a whole-K window staged in
  // the first pass persists for every later pass; revisiting an evicted word
  // rebuilds the window from that word.
  void ensure_iv(int64_t word) {
    assert(word >= 0 && word < iv_words_total);
    if (word < iv_hi && word >= iv_hi - iv_regs) return;
    if (word < iv_hi) iv_hi = word;
    while (word >= iv_hi) {
      const int64_t burst = std::min<int64_t>(iv_regs, iv_words_total - iv_hi);
      assert(burst > 0);
      for (int64_t i = 0; i < burst; ++i) {
        PimCommand c;
        c.op = PimOp::WriteIvReg;
        c.reg = static_cast<int>(iv_hi % iv_regs);
        c.word = iv_hi;
        emit(c);
        ++iv_hi;
      }
    }
  }

  void ensure_ivsf(int64_t word) {
    if (word == cur_ivsf) return;
    PimCommand c;
    c.op = PimOp::WriteIvReg;
    c.reg = -1;  // dedicated scale register outside the staging window
    c.word = word;
    c.iv_scale = true;
    emit(c);
    cur_ivsf = word;
  }

  void ensure_wsf(int64_t slot, int64_t word) {
    if (slot == wsf_slot && word == wsf_word) return;
    open_row(slot / gpr, Ctx::Sf);
    PimCommand c;
    c.op = PimOp::SfLoad;
    c.slot = slot;
    c.word = word;
    emit(c);
    wsf_slot = slot;
    wsf_word = word;
  }

  // Scale block b of (pass, group): stage its input-scale lane, then for each
  // stored segment load the chunk word holding it and fold the block-plane
  // region (rows x column-groups) into the running total.
  void finalize_block(int64_t pass, int group, int64_t block) {
    ensure_ivsf(block / wsf_lanes);
    const int64_t cpw = lanes / m_c;  // column groups per word (1 for tall tiles)
    int c0 = 0, c1 = static_cast<int>(cpw);
    if (sfb < cpw) {  // block boundary falls inside one word
      c0 = static_cast<int>((block * sfb) % cpw);
      c1 = c0 + static_cast<int>(sfb);
    }
    const auto it = map.sf_where.find({pass, group, block});
    if (it == map.sf_where.end()) {
      throw TraceError("placement map lacks scale factors for a finished block");
    }
    for (const SfSegment& seg : it->second) {
      int64_t row = seg.row0, lane = seg.lane, left = seg.rows;
      while (left > 0) {
        const int64_t w = lane / wsf_lanes;
        const int64_t l0 = lane % wsf_lanes;
        const int64_t n = std::min(left, wsf_lanes - l0);
        ensure_wsf(seg.slot, w);
        PimCommand c;
        c.op = PimOp::SfMul;
        c.group = group;
        c.r0 = static_cast<int>(row);
        c.r1 = static_cast<int>(row + n);
        c.c0 = c0;
        c.c1 = c1;
        c.sf_lane = static_cast<int>(l0);
        c.sf_slot = seg.slot;
        c.sf_word = w;
        c.block = block;
        c.ivsf_word = block / wsf_lanes;
        emit(c);
        row += n;
        lane += n;
        left -= n;
      }
    }
  }

  CommandTrace run() {
    const TilePlan& plan = map.plan;
    int64_t ord = 0;  // weight-tile ordinal in construction order
    for (int64_t q = 0; q < map.passes; ++q) {
      const int p_q = map.groups_in_pass(q);
      std::vector<int64_t> blocks_done(static_cast<std::size_t>(p_q), 0);
      for (int64_t cj = 0; cj < map.k_tm; ++cj) {
        for (int g = 0; g < p_q; ++g) {
          const int64_t slot = map.slot_of_tile_ordinal(ord++);
          const int64_t slot_row = slot / gpr;
          for (int64_t w = 0; w < wpg; ++w) {
            const int64_t base_col = cj * k_tile + (w * lanes) / m_tile;
            const int64_t ivw = base_col / lanes;
            ensure_iv(ivw);
            open_row(slot_row, Ctx::Walk);
            PimCommand c;
            c.op = PimOp::Mac;
            c.slot = slot;
            c.word = w;
            c.group = g;
            c.reg = static_cast<int>(ivw % iv_regs);
            c.iv_word = ivw;
            c.iv_off = static_cast<int>(base_col % lanes);
            c.acc_base = static_cast<int>((w * lanes) % m_tile);
            emit(c);
            if (map.sf.enabled) {
              const int64_t cols_done = cj * k_tile + ((w + 1) * lanes) / m_tile;
              const int64_t done = cols_done / sfb;
              auto& fin = blocks_done[static_cast<std::size_t>(g)];
              while (fin < done) finalize_block(q, g, fin++);
            }
          }
        }
      }
      for (int g = 0; g < p_q; ++g) {
        assert(!map.sf.enabled ||
               blocks_done[static_cast<std::size_t>(g)] == total_blocks);
        for (int s = 0; s < fold_steps; ++s) {
          PimCommand c;
          c.op = PimOp::LaneReduce;
          c.group = g;
          c.width = static_cast<int>(lanes >> s);
          c.slots = fold_slot_cost;
          emit(c);
        }
        const int64_t blk = q * plan.cr_degree + g;
        for (int w = 0; w < plan.out_reg; ++w) {
          const int64_t ow = blk * plan.out_reg + w;
          const int64_t orow =
              data_rows + ow * mem.word_bytes() / mem.row_buffer_bytes;
          open_row(orow, Ctx::Spill);
          PimCommand c;
          c.op = PimOp::Spill;
          c.group = g;
          c.out_word = ow;
          c.out_idx = w;
          c.row = orow;
          emit(c);
        }
      }
    }
    assert(ord == map.tiles_per_bank());
    CommandTrace t;
    t.commands = std::move(out);
    t.counts = recount_commands(t.commands);
    return t;
  }
};

}  // namespace

CommandTrace generate_trace(const PlacementMap& map, const MemoryConfig& mem,
                            const PimConfig& pim) {
  if (map.plan.order != TileOrderKind::column_row) {
    throw TraceError("only column-row placements have a broadcast command stream");
  }
  if (map.plan.intra != IntraTileOrder::column_major && map.plan.m_tile > 1 &&
      map.plan.k_tile > 1) {
    throw TraceError("trace generation requires column-major intra-tile layout");
  }
  if (map.passes < 1 || map.tiles_per_bank() < 1) {
    throw TraceError("placement map has no work to trace");
  }
  return TraceBuilder(map, mem, pim).run();
}

}  // namespace pimgemv
