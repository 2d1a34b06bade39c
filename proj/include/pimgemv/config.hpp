#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pimgemv/errors.hpp"

namespace pimgemv {

// Element encoding for matrix / vector data. Integer two's-complement for
// 4/8/16 bits; is_float=true selects bfloat16 (bits must be 16). Optional
// block scale factors run along the K dimension: one scale per sf_block
// consecutive elements of a row (weights) or of the vector (input).
struct DataFormat {
  int bits = 8;
  bool is_float = false;
  std::optional<int> sf_block{};  // power of two, >= 2
  int sf_bits = 8;                // width of one stored scale factor

  bool has_scale() const { return sf_block.has_value(); }
  int bytes() const { return bits / 8; }  // 4b callers use bit arithmetic
  void validate() const;
};

// DRAM organization. channel_bandwidth_gbps is per channel (1 GB/s == 1 B/ns).
struct MemoryConfig {
  int num_channels = 8;
  int banks_per_channel = 16;
  std::int64_t row_buffer_bytes = 2048;
  std::int64_t interleave_gran_bytes = 256;
  double channel_bandwidth_gbps = 15.0;
  int dram_word_bits = 256;

  int total_banks() const { return num_channels * banks_per_channel; }
  int word_bytes() const { return dram_word_bits / 8; }
  std::int64_t granules_per_row() const { return row_buffer_bytes / interleave_gran_bytes; }
  std::int64_t words_per_granule() const { return interleave_gran_bytes / word_bytes(); }
  std::int64_t words_per_row() const { return row_buffer_bytes / word_bytes(); }
  double aggregate_bandwidth_gbps() const { return num_channels * channel_bandwidth_gbps; }
  void validate() const;
};

// Per-bank PIM execution unit: a SIMD ALU over one DRAM word plus a small
// register file shared between staged input-vector words and accumulators.
struct PimConfig {
  int regs_per_alu = 16;
  int reg_size_bits = 256;     // must equal dram_word_bits
  double pim_rate_ratio = 0.5; // PIM command rate relative to baseline DRAM
  bool has_reduction_tree = false;

  void validate(const MemoryConfig& mem) const;
};

// DRAM command timing. t_ccd defaults to one word at channel bandwidth.
struct DramTiming {
  double t_ccd_ns = 32.0 / 15.0;
  double t_row_switch_ns = 36.0;
  double t_turnaround_ns = 14.0;

  static DramTiming derive(const MemoryConfig& mem);
  double pim_slot_ns(const PimConfig& pim) const { return t_ccd_ns / pim.pim_rate_ratio; }
  void validate() const;
};

// Host SoC used both as the baseline executor and for reductions the PIM
// units cannot do (split-K partials, non-local layouts).
struct SocConfig {
  double tops_8b = 33.2e12;  // MAC-op/s at 8-bit inputs
  double mem_bw_gbps = 120.0;

  double ops_per_sec(int bits) const { return tops_8b * 8.0 / bits; }
  double bytes_per_ns() const { return mem_bw_gbps; }
  void validate() const;
};

struct SystemConfig {
  MemoryConfig mem{};
  PimConfig pim{};
  DramTiming timing{};
  SocConfig soc{};

  void validate() const;
  static SystemConfig defaults();
};

// Elements of one interleave-granule tile for a given element width.
std::int64_t elements_per_tile(const MemoryConfig& mem, const DataFormat& fmt);

// Smallest OS page size that spans every bank exactly once, so that pages
// of a contiguous allocation stripe evenly across all banks.
std::int64_t preferred_page_size(const MemoryConfig& mem);

// Best-case PIM speedup over reading the same data on the channel bus:
// banks_per_channel concurrent word streams at pim_rate_ratio of the bus rate.
double roofline_speedup(const MemoryConfig& mem, const PimConfig& pim);

// JSON config file I/O plus key=value overrides ("mem.num_channels=16").
// Environment variables PIMGEMV_<SECTION>_<FIELD> (e.g. PIMGEMV_MEM_NUM_CHANNELS)
// override file values; explicit overrides take precedence over both.
SystemConfig load_system_config(const std::string& path);
std::string system_config_to_json(const SystemConfig& cfg);
void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value);
void apply_env_overrides(SystemConfig& cfg);

}  // namespace pimgemv
