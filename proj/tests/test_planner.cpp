#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <numeric>
#include <random>

#include "corpus.hpp"
#include "doctest.h"
#include "json.hpp"
#include "pimgemv/buffers.hpp"
#include "pimgemv/config.hpp"
#include "pimgemv/errors.hpp"
#include "pimgemv/planner.hpp"

using namespace pimgemv;

namespace {

GemvProblem square_int8(std::int64_t n) {
  GemvProblem p;
  p.m = n;
  p.k = n;
  p.in_fmt = DataFormat{.bits = 8};
  p.out_fmt = DataFormat{.bits = 16};
  return p;
}

}  // namespace

TEST_CASE("register demand of candidate tile shapes") {
  const SystemConfig sys = SystemConfig::defaults();
  const GemvProblem p = square_int8(4096);
  // 32x8 tile: one granule of input slice, 32 16-bit accumulators = 2 words.
  RegParams r = get_param(32, 8, p, sys.mem, sys.pim);
  CHECK(r.in_reg == 1);
  CHECK(r.out_reg == 2);
  // Row-vector tile: everything fits one word, one accumulator lane group.
  r = get_param(1, 256, p, sys.mem, sys.pim);
  CHECK(r.in_reg == 1);
  CHECK(r.out_reg == 1);
  r = get_param(2, 128, p, sys.mem, sys.pim);
  CHECK(r.in_reg == 1);
  CHECK(r.out_reg == 1);
}

TEST_CASE("tile shape: widest even split that fits the registers") {
  const SystemConfig sys = SystemConfig::defaults();
  SUBCASE("large square matrix uses the full 32-row tile") {
    const auto [mt, kt] = get_tile_shape(square_int8(4096), sys.mem, sys.pim, 1);
    CHECK(mt == 32);
    CHECK(kt == 8);
  }
  SUBCASE("M = 768 can only spread evenly two rows deep") {
    // 768 / 128 banks = 6 rows per bank; widest power-of-two tile height
    // dividing that is 2.
    const auto [mt, kt] = get_tile_shape(square_int8(768), sys.mem, sys.pim, 1);
    CHECK(mt == 2);
    CHECK(kt == 128);
  }
  SUBCASE("M that does not divide across banks falls back to row vectors") {
    const auto [mt, kt] = get_tile_shape(square_int8(300), sys.mem, sys.pim, 1);
    CHECK(mt == 1);
    CHECK(kt == 256);
  }
}

TEST_CASE("column-row tile order interleaves row-blocks per pass") {
  // 4 row-blocks x 2 columns on 2 banks. Degree 1: two passes, each walking
  // both columns of one bank-spread of row-blocks.
  CHECK(get_tile_cr_order(4, 2, 2, 1) ==
        std::vector<std::int64_t>{0, 2, 1, 3, 4, 6, 5, 7});
  // Degree 2: one pass, both row-block groups advance column by column.
  CHECK(get_tile_cr_order(4, 2, 2, 2) ==
        std::vector<std::int64_t>{0, 2, 4, 6, 1, 3, 5, 7});
  // Ragged final pass: 3 row-blocks per bank at degree 2 leaves one group.
  CHECK(get_tile_cr_order(6, 2, 2, 2) ==
        std::vector<std::int64_t>{0, 2, 4, 6, 1, 3, 5, 7, 8, 10, 9, 11});
  CHECK_THROWS_AS(get_tile_cr_order(3, 2, 2, 1), PlannerError);
}

TEST_CASE("row-major / column-major baseline orders") {
  CHECK(get_tile_row_order(2, 3) == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5});
  CHECK(get_tile_column_order(2, 3) == std::vector<std::int64_t>{0, 3, 1, 4, 2, 5});
}

TEST_CASE("every tile order is a permutation") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 32; ++trial) {
    const int tot_bank = 1 << (rng() % 3);  // 1, 2, 4
    const std::int64_t blocks = 1 + static_cast<std::int64_t>(rng() % 6);
    const std::int64_t m_tm = blocks * tot_bank;
    const std::int64_t k_tm = 1 + static_cast<std::int64_t>(rng() % 7);
    const int degree = 1 + static_cast<int>(rng() % blocks);
    for (auto order : {get_tile_cr_order(m_tm, k_tm, tot_bank, degree),
                       get_tile_row_order(m_tm, k_tm),
                       get_tile_column_order(m_tm, k_tm)}) {
      REQUIRE(static_cast<std::int64_t>(order.size()) == m_tm * k_tm);
      std::sort(order.begin(), order.end());
      std::vector<std::int64_t> want(order.size());
      std::iota(want.begin(), want.end(), 0);
      CHECK(order == want);
    }
  }
}

TEST_CASE("maximal interleave degree respects registers and row-blocks") {
  // 8192 rows of 32-row tiles on 128 banks: 2 row-blocks per bank, and
  // 2 * 2 accumulators + 8 staged words fit in 16 registers.
  CHECK(get_cro_max_degree(8192, 32, 128, 8, 2, 16) == 2);
  // 4096 rows: only one row-block per bank, so degree is capped at 1.
  CHECK(get_cro_max_degree(4096, 32, 128, 8, 2, 16) == 1);
  // Never below 1 even when the budget math would say 0.
  CHECK(get_cro_max_degree(8192, 32, 128, 15, 2, 16) == 1);
}

TEST_CASE("default plan for the large square matrix") {
  const SystemConfig sys = SystemConfig::defaults();
  const TilePlan plan = plan_gemv(square_int8(4096), sys.mem, sys.pim, PlannerKnobs{});
  CHECK(plan.m_tile == 32);
  CHECK(plan.k_tile == 8);
  CHECK(plan.in_reg == 1);
  CHECK(plan.out_reg == 2);
  CHECK(plan.cr_degree == 1);
  CHECK(plan.iv_regs == 8);
  CHECK(plan.even_distribution);
}

TEST_CASE("wide staging windows narrow the tile instead of failing") {
  const SystemConfig sys = SystemConfig::defaults();
  GemvProblem p = square_int8(8192);
  p.k = 2048;
  PlannerKnobs knobs;
  // Default window: 64-row tiles fit (4 accumulator words + 8 staged words).
  TilePlan plan = plan_gemv(p, sys.mem, sys.pim, knobs);
  CHECK(plan.m_tile == 64);
  CHECK(plan.k_tile == 4);
  // A 14-word window would not leave room for 4 accumulator words; the
  // planner halves the tile height until one group fits.
  knobs.iv_regs = 14;
  plan = plan_gemv(p, sys.mem, sys.pim, knobs);
  CHECK(plan.m_tile == 32);
  CHECK(plan.k_tile == 8);
  CHECK(plan.out_reg == 2);
}

TEST_CASE("scale-factor chunks cover a fixed run of weight tiles") {
  const SystemConfig sys = SystemConfig::defaults();
  GemvProblem p = square_int8(4096);
  SUBCASE("disabled without block scaling") {
    CHECK_FALSE(interleave_scale_factors(p, sys.mem).enabled);
  }
  SUBCASE("8-bit scale factors, block of 32") {
    p.in_fmt.sf_block = 32;
    p.in_fmt.sf_bits = 8;
    const SfLayout sf = interleave_scale_factors(p, sys.mem);
    CHECK(sf.enabled);
    CHECK(sf.tiles_per_chunk == 32);
    CHECK(sf.sf_per_chunk == 256);
  }
  SUBCASE("32-bit scale factors, block of 32") {
    p.in_fmt.sf_block = 32;
    p.in_fmt.sf_bits = 32;
    const SfLayout sf = interleave_scale_factors(p, sys.mem);
    CHECK(sf.enabled);
    CHECK(sf.tiles_per_chunk == 8);
    CHECK(sf.sf_per_chunk == 64);
  }
}

TEST_CASE("rearranged bytes: first granules hand-checked") {
  SystemConfig sys = SystemConfig::defaults();
  sys.mem.num_channels = 1;
  sys.mem.banks_per_channel = 2;
  const GemvProblem p = square_int8(64);
  const TilePlan plan = plan_gemv(p, sys.mem, sys.pim, PlannerKnobs{});
  REQUIRE(plan.m_tile == 32);
  REQUIRE(plan.k_tile == 8);
  const PlacementMap map = build_placement_map(p, plan, sys.mem);
  REQUIRE(map.tot_bank == 2);
  REQUIRE(map.slots_per_bank() == 8);

  ElemVec w(64 * 64);
  for (std::int64_t r = 0; r < 64; ++r)
    for (std::int64_t c = 0; c < 64; ++c)
      w[static_cast<std::size_t>(r * 64 + c)] =
          static_cast<double>((r * 7 + c * 3) % 200 - 100);
  const std::vector<std::uint8_t> placed = rearrange_matrix(w, {}, map, sys.mem);
  REQUIRE(static_cast<std::int64_t>(placed.size()) ==
          map.slots_per_bank() * 2 * sys.mem.interleave_gran_bytes);

  // Granule 0 -> bank 0, slot 0: tile (row-block 0, column 0), column-major,
  // i.e. W[0..31, 0] then W[0..31, 1] ...
  for (std::int64_t c = 0; c < 8; ++c)
    for (std::int64_t r = 0; r < 32; ++r)
      CHECK(decode_element(placed.data(), c * 32 + r, p.in_fmt) ==
            w[static_cast<std::size_t>(r * 64 + c)]);
  // Granule 1 -> bank 1, slot 0: same column window of row-block 1 (rows 32+).
  for (std::int64_t c = 0; c < 8; ++c)
    for (std::int64_t r = 0; r < 32; ++r)
      CHECK(decode_element(placed.data(), 256 + c * 32 + r, p.in_fmt) ==
            w[static_cast<std::size_t>((32 + r) * 64 + c)]);
}

TEST_CASE("rearrange and restore are inverse for random problems") {
  std::mt19937_64 rng(11);
  const SystemConfig base = SystemConfig::defaults();
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::draw_instance(rng, base, /*int_only=*/false);
    const GemvProblem& p = inst.problem;
    ElemVec w(static_cast<std::size_t>(p.m * p.k));
    for (auto& v : w)
      v = static_cast<double>(static_cast<std::int64_t>(rng() % 9) - 4);
    ElemVec wsf;
    if (p.in_fmt.has_scale()) {
      const std::int64_t cols = p.k / *p.in_fmt.sf_block;
      wsf.assign(static_cast<std::size_t>(p.m * cols), 0.0);
      for (auto& v : wsf) v = 1.0 + static_cast<double>(rng() % 2);
    }
    const TilePlan plan = plan_gemv(p, inst.sys.mem, inst.sys.pim, inst.knobs);
    const PlacementMap map = build_placement_map(p, plan, inst.sys.mem);
    const auto placed = rearrange_matrix(w, wsf, map, inst.sys.mem);
    const ElemVec back = restore_matrix(placed, map, inst.sys.mem);
    REQUIRE(back.size() == w.size());
    bool same = true;
    for (std::size_t i = 0; i < w.size(); ++i) same = same && back[i] == w[i];
    CHECK(same);
  }
}

TEST_CASE("placement manifest is valid JSON and round-trips") {
  const SystemConfig sys = SystemConfig::defaults();
  GemvProblem p = square_int8(768);
  const TilePlan plan = plan_gemv(p, sys.mem, sys.pim, PlannerKnobs{});
  const PlacementMap map = build_placement_map(p, plan, sys.mem);
  const std::string text = placement_to_json(map, sys.mem);
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("problem").at("m") == 768);
  CHECK(j.at("plan").at("m_tile") == plan.m_tile);
  CHECK(j.at("plan").at("cr_degree") == plan.cr_degree);
  CHECK(j.at("bytes_per_bank") == map.bytes_per_bank(sys.mem));
  CHECK(j.at("tile_order").size() == map.tile_order.size());
  const PlacementMap back = placement_from_json(text);
  CHECK(back.tile_order == map.tile_order);
  CHECK(back.plan.m_tile == map.plan.m_tile);
  CHECK(back.padded.m == map.padded.m);
}

TEST_CASE("split-K slices channels and the K range") {
  const SystemConfig sys = SystemConfig::defaults();
  const GemvProblem p = square_int8(4096);
  const auto subs = apply_split_k(p, 4, sys.mem);
  REQUIRE(subs.size() == 4);
  for (int d = 0; d < 4; ++d) {
    CHECK(subs[d].problem.m == 4096);
    CHECK(subs[d].problem.k == 1024);
    CHECK(subs[d].k_offset == 1024 * d);
    CHECK(subs[d].channel_begin == 2 * d);
    CHECK(subs[d].channel_count == 2);
  }
  // Degree must divide both the channel count and K.
  CHECK_THROWS_AS(apply_split_k(p, 3, sys.mem), PlannerError);
  GemvProblem ragged = p;
  ragged.k = 102;
  CHECK_THROWS_AS(apply_split_k(ragged, 4, sys.mem), PlannerError);
  // Degree 1 is the identity.
  const auto one = apply_split_k(p, 1, sys.mem);
  REQUIRE(one.size() == 1);
  CHECK(one[0].problem.k == 4096);
  CHECK(one[0].channel_count == sys.mem.num_channels);
}
