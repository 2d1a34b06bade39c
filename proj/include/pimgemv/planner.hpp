#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "pimgemv/buffers.hpp"
#include "pimgemv/config.hpp"

namespace pimgemv {

// One GEMV: out[M] = W[M x K] * iv[K]. Weights and input vector share in_fmt;
// accumulation and outputs use out_fmt.
struct GemvProblem {
  std::int64_t m = 0;
  std::int64_t k = 0;
  DataFormat in_fmt{};
  DataFormat out_fmt{.bits = 16};

  void validate() const;
};

enum class TileShapeKind { planned, column_vector, row_vector };
enum class TileOrderKind { column_row, row_major, column_major };
enum class IntraTileOrder { column_major, row_major };

// Orchestration knobs independent of the layout itself.
struct PlannerKnobs {
  int iv_regs = 8;                     // registers staged with input-vector words
  std::optional<int> cr_degree{};      // row-block interleave degree; unset = maximal
  int split_k = 1;                     // split-K degree across channel groups
  IntraTileOrder intra = IntraTileOrder::column_major;
  TileShapeKind shape = TileShapeKind::planned;
  TileOrderKind order = TileOrderKind::column_row;
};

// Chosen placement parameters for one (sub-)problem.
struct TilePlan {
  std::int64_t m_tile = 0;
  std::int64_t k_tile = 0;
  int in_reg = 0;        // registers holding one tile's input-vector slice
  int out_reg = 0;       // registers holding one tile row-group's accumulators
  int cr_degree = 1;     // row-blocks interleaved per column step
  int iv_regs = 8;
  IntraTileOrder intra = IntraTileOrder::column_major;
  TileOrderKind order = TileOrderKind::column_row;
  bool even_distribution = false;  // tile shape satisfied M % (banks * m_tile) == 0
};

// Register demand of a candidate tile shape.
struct RegParams {
  int in_reg = 0;
  int out_reg = 0;
};

// Registers needed to stage one tile's input-vector slice (rounded up to
// interleave-granularity chunks, allowing staged chunks to be shared) and to
// accumulate one tile's row group at the output width.
RegParams get_param(std::int64_t m_tile, std::int64_t k_tile, const GemvProblem& p,
                    const MemoryConfig& mem, const PimConfig& pim);

// Widest tile (largest m_tile) of one interleave granule that still spreads
// M evenly over all banks and fits the register file. Falls back to the
// row-vector shape (1 x elements_per_tile) when no width divides evenly.
// acc_planes = 2 when block scale factors are enabled (separate block-partial
// and running-total accumulators), else 1.
std::pair<std::int64_t, std::int64_t> get_tile_shape(const GemvProblem& p,
                                                     const MemoryConfig& mem,
                                                     const PimConfig& pim,
                                                     int acc_planes);

// Column-row tile order: out[i] is the row-major index of the tile placed at
// position i. Emits, for each pass of up to tot_bank*degree row-blocks, all
// their tiles column-step by column-step so round-robin interleave lands
// every row-block in a single bank. m_tm must be divisible by tot_bank; the
// final pass interleaves however many row-blocks remain (< degree when degree
// does not divide the per-bank row-block count).
std::vector<std::int64_t> get_tile_cr_order(std::int64_t m_tm, std::int64_t k_tm,
                                            int tot_bank, int degree);

// Plain row-major / column-major tile orders (comparison baselines).
std::vector<std::int64_t> get_tile_row_order(std::int64_t m_tm, std::int64_t k_tm);
std::vector<std::int64_t> get_tile_column_order(std::int64_t m_tm, std::int64_t k_tm);

// Largest row-block interleave degree that fits the register file:
// degree * out_reg_eff + in_reg_eff <= regs_per_alu, capped by the number of
// row-blocks per bank, minimum 1.
int get_cro_max_degree(std::int64_t m, std::int64_t m_tile, int tot_bank,
                       int in_reg_eff, int out_reg_eff, int regs_per_alu);

// Split-K decomposition: `degree` sub-GEMVs of shape M x (K/degree), each on
// an exclusive group of num_channels/degree channels.
struct SubProblem {
  GemvProblem problem{};
  std::int64_t k_offset = 0;
  int channel_begin = 0;
  int channel_count = 0;
};
std::vector<SubProblem> apply_split_k(const GemvProblem& p, int degree,
                                      const MemoryConfig& mem);

// Scale-factor interleaving: after every `tiles_per_chunk` weight tiles in a
// bank's placement stream, one granule-sized chunk holds exactly those tiles'
// scale factors, so weights and their metadata share DRAM rows.
struct SfLayout {
  bool enabled = false;
  std::int64_t tiles_per_chunk = 0;  // weight tiles covered by one sf chunk
  std::int64_t sf_per_chunk = 0;     // scale-factor lanes in one chunk
};
SfLayout interleave_scale_factors(const GemvProblem& p, const MemoryConfig& mem);

// Physical coordinates of one granule.
struct GranuleCoord {
  int channel = 0;
  int bank = 0;           // within channel
  std::int64_t dram_row = 0;
  std::int64_t byte_in_row = 0;
};

// What a bank-stream slot holds. Streams are identical across banks except
// for which matrix rows they carry, which is what makes command broadcast
// possible; `group` selects the interleaved row-block, and the actual
// row-block index is base(pass) + group * tot_bank + global_bank.
struct WeightSlot {
  std::int64_t pass = 0;  // all-bank spread index
  std::int64_t cj = 0;    // tile column
  int group = 0;          // 0 .. cr_degree-1
};
struct SfSegment {
  std::int64_t pass = 0;
  int group = 0;
  std::int64_t block = 0;     // scale-factor block index along K
  std::int64_t slot = 0;      // bank-stream slot of the chunk holding it
  std::int64_t lane = 0;      // first scale-factor lane within that chunk
  std::int64_t row0 = 0;      // first tile row covered (within the row-block)
  std::int64_t rows = 0;      // rows covered by this segment
};
struct SlotDesc {
  bool is_sf = false;
  WeightSlot weight{};             // valid when !is_sf
  std::vector<SfSegment> sf_entries;  // valid when is_sf
};

// Full placement of one (sub-)problem, padded so every bank gets the same
// number of granules. Streams and coordinates are bank-agnostic; callers map
// global bank g to (channel g % C + channel_begin, bank g / C).
struct PlacementMap {
  GemvProblem padded{};            // dims after padding
  std::int64_t orig_m = 0;
  std::int64_t orig_k = 0;
  TilePlan plan{};
  SfLayout sf{};
  int tot_bank = 0;
  int num_channels = 0;            // channels in this group
  int channel_begin = 0;           // first global channel of this group
  std::int64_t m_tm = 0;           // tile rows
  std::int64_t k_tm = 0;           // tile columns
  std::int64_t passes = 0;         // all-bank spreads
  std::vector<std::int64_t> tile_order;   // CR position -> row-major tile index
  std::vector<SlotDesc> bank_slots;       // per-bank stream (same in every bank)
  std::int64_t data_rows_per_bank = 0;    // DRAM rows holding weights + sf
  std::int64_t out_rows_per_bank = 0;     // reserved rows for spilled outputs
  std::int64_t rows_per_bank = 0;         // matrix rows resident per bank
  std::vector<std::int64_t> tile_slot;    // weight-tile ordinal -> stream slot
  // Lookup: (pass, group, block) -> segments of that block's scale factors.
  std::map<std::tuple<std::int64_t, int, std::int64_t>, std::vector<SfSegment>> sf_where;

  std::int64_t slots_per_bank() const { return static_cast<std::int64_t>(bank_slots.size()); }
  std::int64_t bytes_per_bank(const MemoryConfig& mem) const {
    return slots_per_bank() * mem.interleave_gran_bytes;
  }
  std::int64_t row_blocks_per_bank() const { return m_tm / tot_bank; }
  std::int64_t tiles_per_bank() const { return k_tm * row_blocks_per_bank(); }
  // Row-blocks interleaved in one pass (the last pass takes what remains).
  int groups_in_pass(std::int64_t pass) const {
    return static_cast<int>(std::min<std::int64_t>(
        plan.cr_degree, row_blocks_per_bank() - pass * plan.cr_degree));
  }
  // Row-block held by (pass, group) in global bank g.
  std::int64_t row_block(std::int64_t pass, int group, int global_bank) const {
    return (pass * plan.cr_degree + group) * static_cast<std::int64_t>(tot_bank) +
           global_bank;
  }
  GranuleCoord coord_of_slot(int global_bank, std::int64_t slot, const MemoryConfig& mem) const;
  std::int64_t slot_of_tile_ordinal(std::int64_t ordinal) const;  // skips sf slots
};

// Build the placement for a CR-family plan (order == column_row). Pads M up
// to a multiple of m_tile * tot_bank * cr_degree and K up to k_tile (padded
// rows/columns are zero weights; padded outputs are dropped after simulation).
PlacementMap build_placement_map(const GemvProblem& p, const TilePlan& plan,
                                 const MemoryConfig& mem, int channel_begin = 0,
                                 int num_channels = 0);

// Produce the full plan for one sub-problem (tile shape, registers, degree).
TilePlan plan_gemv(const GemvProblem& p, const MemoryConfig& mem, const PimConfig& pim,
                   const PlannerKnobs& knobs);

// Rearranged, packed weight bytes in virtual placement order: granule f goes
// to global bank f % tot_bank, slot f / tot_bank. weights is row-major
// M x K (original dims); wsf is row-major M x ceil(K/sf_block) when scale
// factors are enabled (empty otherwise).
std::vector<std::uint8_t> rearrange_matrix(const ElemVec& weights, const ElemVec& wsf,
                                           const PlacementMap& map, const MemoryConfig& mem);

// Inverse of rearrange_matrix (padding dropped); used to prove bijectivity.
ElemVec restore_matrix(const std::vector<std::uint8_t>& placed, const PlacementMap& map,
                       const MemoryConfig& mem);

// Placement manifest (plan header + tile order + coordinates) as JSON.
std::string placement_to_json(const PlacementMap& map, const MemoryConfig& mem);
PlacementMap placement_from_json(const std::string& text);

}  // namespace pimgemv
