#include "pimgemv/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pimgemv {

namespace {

bool is_pow2(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void DataFormat::validate() const {
  if (bits != 4 && bits != 8 && bits != 16)
    throw ConfigError("DataFormat.bits must be 4, 8 or 16");
  if (is_float && bits != 16)
    throw ConfigError("float element format requires bits == 16 (bfloat16)");
  if (sf_block) {
    if (*sf_block < 2 || !is_pow2(*sf_block))
      throw ConfigError("DataFormat.sf_block must be a power of two >= 2");
    if (sf_bits != 8 && sf_bits != 16 && sf_bits != 32)
      throw ConfigError("DataFormat.sf_bits must be 8, 16 or 32");
  }
}

void MemoryConfig::validate() const {
  if (num_channels < 1 || banks_per_channel < 1)
    throw ConfigError("channel/bank counts must be positive");
  if (!is_pow2(num_channels) || !is_pow2(banks_per_channel))
    throw ConfigError("channel/bank counts must be powers of two");
  if (!is_pow2(row_buffer_bytes) || !is_pow2(interleave_gran_bytes))
    throw ConfigError("row buffer and interleave granularity must be powers of two");
  if (interleave_gran_bytes > row_buffer_bytes)
    throw ConfigError("interleave granularity cannot exceed the row buffer");
  if (dram_word_bits % 8 != 0 || !is_pow2(dram_word_bits / 8))
    throw ConfigError("dram_word_bits must be a power-of-two number of bytes");
  if (interleave_gran_bytes % word_bytes() != 0)
    throw ConfigError("interleave granularity must be a multiple of the DRAM word");
  if (channel_bandwidth_gbps <= 0.0)
    throw ConfigError("channel bandwidth must be positive");
}

void PimConfig::validate(const MemoryConfig& mem) const {
  if (reg_size_bits != mem.dram_word_bits)
    throw ConfigError("PIM register size must equal the DRAM word size");
  if (regs_per_alu < 2)
    throw ConfigError("need at least two PIM registers (one input, one accumulator)");
  if (pim_rate_ratio <= 0.0 || pim_rate_ratio > 1.0)
    throw ConfigError("pim_rate_ratio must be in (0, 1]");
}

DramTiming DramTiming::derive(const MemoryConfig& mem) {
  DramTiming t;
  // One DRAM word transferred at the per-channel bus rate (GB/s == B/ns).
  t.t_ccd_ns = static_cast<double>(mem.word_bytes()) / mem.channel_bandwidth_gbps;
  return t;
}

void DramTiming::validate() const {
  if (t_ccd_ns <= 0.0 || t_row_switch_ns < 0.0 || t_turnaround_ns < 0.0)
    throw ConfigError("DRAM timing values must be non-negative (t_ccd positive)");
}

void SocConfig::validate() const {
  if (tops_8b <= 0.0 || mem_bw_gbps <= 0.0)
    throw ConfigError("SoC throughput values must be positive");
}

void SystemConfig::validate() const {
  mem.validate();
  pim.validate(mem);
  timing.validate();
  soc.validate();
}

SystemConfig SystemConfig::defaults() {
  SystemConfig cfg;
  cfg.timing = DramTiming::derive(cfg.mem);
  cfg.validate();
  return cfg;
}

std::int64_t elements_per_tile(const MemoryConfig& mem, const DataFormat& fmt) {
  const std::int64_t gran_bits = mem.interleave_gran_bytes * 8;
  if (gran_bits % fmt.bits != 0)
    throw ConfigError("interleave granularity is not a whole number of elements");
  return gran_bits / fmt.bits;
}

std::int64_t preferred_page_size(const MemoryConfig& mem) {
  return mem.row_buffer_bytes * mem.total_banks();
}

double roofline_speedup(const MemoryConfig& mem, const PimConfig& pim) {
  return mem.banks_per_channel * pim.pim_rate_ratio;
}

namespace {

using nlohmann::json;

void mem_from_json(const json& j, MemoryConfig& m) {
  m.num_channels = j.value("num_channels", m.num_channels);
  m.banks_per_channel = j.value("banks_per_channel", m.banks_per_channel);
  m.row_buffer_bytes = j.value("row_buffer_bytes", m.row_buffer_bytes);
  m.interleave_gran_bytes = j.value("interleave_gran_bytes", m.interleave_gran_bytes);
  m.channel_bandwidth_gbps = j.value("channel_bandwidth_gbps", m.channel_bandwidth_gbps);
  m.dram_word_bits = j.value("dram_word_bits", m.dram_word_bits);
}

void pim_from_json(const json& j, PimConfig& p) {
  p.regs_per_alu = j.value("regs_per_alu", p.regs_per_alu);
  p.reg_size_bits = j.value("reg_size_bits", p.reg_size_bits);
  p.pim_rate_ratio = j.value("pim_rate_ratio", p.pim_rate_ratio);
  p.has_reduction_tree = j.value("has_reduction_tree", p.has_reduction_tree);
}

void timing_from_json(const json& j, DramTiming& t) {
  t.t_ccd_ns = j.value("t_ccd_ns", t.t_ccd_ns);
  t.t_row_switch_ns = j.value("t_row_switch_ns", t.t_row_switch_ns);
  t.t_turnaround_ns = j.value("t_turnaround_ns", t.t_turnaround_ns);
}

void soc_from_json(const json& j, SocConfig& s) {
  s.tops_8b = j.value("tops_8b", s.tops_8b);
  s.mem_bw_gbps = j.value("mem_bw_gbps", s.mem_bw_gbps);
}

}  // namespace

SystemConfig load_system_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  SystemConfig cfg;
  if (j.contains("memory")) mem_from_json(j["memory"], cfg.mem);
  if (j.contains("pim")) pim_from_json(j["pim"], cfg.pim);
  if (j.contains("soc")) soc_from_json(j["soc"], cfg.soc);
  cfg.timing = DramTiming::derive(cfg.mem);  // re-derive for the loaded memory
  if (j.contains("timing")) timing_from_json(j["timing"], cfg.timing);
  cfg.validate();
  return cfg;
}

std::string system_config_to_json(const SystemConfig& cfg) {
  json j;
  j["memory"] = {{"num_channels", cfg.mem.num_channels},
                 {"banks_per_channel", cfg.mem.banks_per_channel},
                 {"row_buffer_bytes", cfg.mem.row_buffer_bytes},
                 {"interleave_gran_bytes", cfg.mem.interleave_gran_bytes},
                 {"channel_bandwidth_gbps", cfg.mem.channel_bandwidth_gbps},
                 {"dram_word_bits", cfg.mem.dram_word_bits}};
  j["pim"] = {{"regs_per_alu", cfg.pim.regs_per_alu},
              {"reg_size_bits", cfg.pim.reg_size_bits},
              {"pim_rate_ratio", cfg.pim.pim_rate_ratio},
              {"has_reduction_tree", cfg.pim.has_reduction_tree}};
  j["timing"] = {{"t_ccd_ns", cfg.timing.t_ccd_ns},
                 {"t_row_switch_ns", cfg.timing.t_row_switch_ns},
                 {"t_turnaround_ns", cfg.timing.t_turnaround_ns}};
  j["soc"] = {{"tops_8b", cfg.soc.tops_8b}, {"mem_bw_gbps", cfg.soc.mem_bw_gbps}};
  return j.dump(2);
}

void apply_override(SystemConfig& cfg, const std::string& key, const std::string& value) {
  auto as_i64 = [&]() -> std::int64_t { return std::stoll(value); };
  auto as_int = [&]() -> int { return std::stoi(value); };
  auto as_dbl = [&]() -> double { return std::stod(value); };
  auto as_bool = [&]() -> bool {
    return value == "1" || value == "true" || value == "on" || value == "yes";
  };

  if (key == "mem.num_channels") cfg.mem.num_channels = as_int();
  else if (key == "mem.banks_per_channel") cfg.mem.banks_per_channel = as_int();
  else if (key == "mem.row_buffer_bytes") cfg.mem.row_buffer_bytes = as_i64();
  else if (key == "mem.interleave_gran_bytes") cfg.mem.interleave_gran_bytes = as_i64();
  else if (key == "mem.channel_bandwidth_gbps") cfg.mem.channel_bandwidth_gbps = as_dbl();
  else if (key == "mem.dram_word_bits") cfg.mem.dram_word_bits = as_int();
  else if (key == "pim.regs_per_alu") cfg.pim.regs_per_alu = as_int();
  else if (key == "pim.reg_size_bits") cfg.pim.reg_size_bits = as_int();
  else if (key == "pim.pim_rate_ratio") cfg.pim.pim_rate_ratio = as_dbl();
  else if (key == "pim.has_reduction_tree") cfg.pim.has_reduction_tree = as_bool();
  else if (key == "timing.t_ccd_ns") cfg.timing.t_ccd_ns = as_dbl();
  else if (key == "timing.t_row_switch_ns") cfg.timing.t_row_switch_ns = as_dbl();
  else if (key == "timing.t_turnaround_ns") cfg.timing.t_turnaround_ns = as_dbl();
  else if (key == "soc.tops_8b") cfg.soc.tops_8b = as_dbl();
  else if (key == "soc.mem_bw_gbps") cfg.soc.mem_bw_gbps = as_dbl();
  else throw ConfigError("unknown config key: " + key);
}

void apply_env_overrides(SystemConfig& cfg) {
  static const char* keys[] = {
      "mem.num_channels",       "mem.banks_per_channel", "mem.row_buffer_bytes",
      "mem.interleave_gran_bytes", "mem.channel_bandwidth_gbps", "mem.dram_word_bits",
      "pim.regs_per_alu",       "pim.reg_size_bits",     "pim.pim_rate_ratio",
      "pim.has_reduction_tree", "timing.t_ccd_ns",       "timing.t_row_switch_ns",
      "timing.t_turnaround_ns", "soc.tops_8b",           "soc.mem_bw_gbps"};
  for (const char* key : keys) {
    std::string env = "PIMGEMV_";
    for (const char* p = key; *p; ++p)
      env += (*p == '.') ? '_' : static_cast<char>(std::toupper(*p));
    if (const char* v = std::getenv(env.c_str())) apply_override(cfg, key, v);
  }
}

}  // namespace pimgemv
