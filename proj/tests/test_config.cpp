#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "pimgemv/config.hpp"
#include "pimgemv/errors.hpp"

using namespace pimgemv;

TEST_CASE("defaults describe the reference platform and validate") {
  const SystemConfig sys = SystemConfig::defaults();
  CHECK(sys.mem.num_channels == 8);
  CHECK(sys.mem.banks_per_channel == 16);
  CHECK(sys.mem.total_banks() == 128);
  CHECK(sys.mem.row_buffer_bytes == 2048);
  CHECK(sys.mem.interleave_gran_bytes == 256);
  CHECK(sys.mem.dram_word_bits == 256);
  CHECK(sys.pim.regs_per_alu == 16);
  CHECK(sys.pim.pim_rate_ratio == doctest::Approx(0.5));
  CHECK(sys.soc.tops_8b == doctest::Approx(33.2e12));
  CHECK(sys.soc.mem_bw_gbps == doctest::Approx(120.0));
  CHECK_NOTHROW(sys.validate());
  // One 32-byte word at 15 GB/s, issued at half rate.
  CHECK(sys.timing.t_ccd_ns == doctest::Approx(32.0 / 15.0));
  CHECK(sys.timing.pim_slot_ns(sys.pim) == doctest::Approx(64.0 / 15.0));
  CHECK(sys.timing.t_row_switch_ns == doctest::Approx(36.0));
  CHECK(sys.timing.t_turnaround_ns == doctest::Approx(14.0));
}

TEST_CASE("preferred page size spans every bank's row buffer once") {
  SystemConfig sys = SystemConfig::defaults();
  CHECK(preferred_page_size(sys.mem) == 256 * 1024);
  sys.mem.num_channels = 16;
  CHECK(preferred_page_size(sys.mem) == 512 * 1024);
  sys.mem.num_channels = 8;
  sys.mem.banks_per_channel = 8;
  CHECK(preferred_page_size(sys.mem) == 128 * 1024);
  // Never smaller than one granule per bank.
  CHECK(preferred_page_size(sys.mem) >=
        sys.mem.interleave_gran_bytes * sys.mem.total_banks());
}

TEST_CASE("best-case speedup is the per-channel bank parallelism at PIM rate") {
  SystemConfig sys = SystemConfig::defaults();
  CHECK(roofline_speedup(sys.mem, sys.pim) == doctest::Approx(8.0));
  sys.mem.banks_per_channel = 8;
  CHECK(roofline_speedup(sys.mem, sys.pim) == doctest::Approx(4.0));
  sys.mem.banks_per_channel = 32;
  CHECK(roofline_speedup(sys.mem, sys.pim) == doctest::Approx(16.0));
}

TEST_CASE("elements per tile follow the element width") {
  const MemoryConfig mem;
  CHECK(elements_per_tile(mem, DataFormat{.bits = 8}) == 256);
  CHECK(elements_per_tile(mem, DataFormat{.bits = 4}) == 512);
  CHECK(elements_per_tile(mem, DataFormat{.bits = 16}) == 128);
  CHECK(elements_per_tile(mem, DataFormat{.bits = 16, .is_float = true}) == 128);
}

TEST_CASE("SoC op rate scales inversely with element width") {
  const SocConfig soc;
  CHECK(soc.ops_per_sec(8) == doctest::Approx(33.2e12));
  CHECK(soc.ops_per_sec(4) == doctest::Approx(66.4e12));
  CHECK(soc.ops_per_sec(16) == doctest::Approx(16.6e12));
}

TEST_CASE("invalid configurations are rejected") {
  SUBCASE("element width") {
    DataFormat f;
    f.bits = 5;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f.bits = 4;
    f.is_float = true;  // only 16-bit floats exist
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f = DataFormat{};
    f.sf_block = 3;  // not a power of two
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f.sf_block = 1;  // too small
    CHECK_THROWS_AS(f.validate(), ConfigError);
  }
  SUBCASE("memory geometry") {
    MemoryConfig mem;
    mem.row_buffer_bytes = 1000;  // not a power of two
    CHECK_THROWS_AS(mem.validate(), ConfigError);
    mem = MemoryConfig{};
    mem.interleave_gran_bytes = 24;  // smaller than one word
    CHECK_THROWS_AS(mem.validate(), ConfigError);
    mem = MemoryConfig{};
    mem.num_channels = 0;
    CHECK_THROWS_AS(mem.validate(), ConfigError);
  }
  SUBCASE("register file must match the word") {
    SystemConfig sys = SystemConfig::defaults();
    sys.pim.reg_size_bits = 128;
    CHECK_THROWS_AS(sys.pim.validate(sys.mem), ConfigError);
  }
}

TEST_CASE("config JSON round-trips through a file") {
  SystemConfig sys = SystemConfig::defaults();
  sys.mem.num_channels = 4;
  sys.soc.mem_bw_gbps = 60.0;
  sys.timing.t_row_switch_ns = 40.0;
  const std::string text = system_config_to_json(sys);
  const std::string path = "test_config_roundtrip.json";
  {
    std::ofstream f(path);
    f << text;
  }
  const SystemConfig back = load_system_config(path);
  std::remove(path.c_str());
  CHECK(back.mem.num_channels == 4);
  CHECK(back.mem.banks_per_channel == sys.mem.banks_per_channel);
  CHECK(back.soc.mem_bw_gbps == doctest::Approx(60.0));
  CHECK(back.timing.t_row_switch_ns == doctest::Approx(40.0));
  CHECK(back.pim.regs_per_alu == sys.pim.regs_per_alu);
}

TEST_CASE("key=value overrides reach every section") {
  SystemConfig sys = SystemConfig::defaults();
  apply_override(sys, "mem.num_channels", "16");
  apply_override(sys, "pim.has_reduction_tree", "true");
  apply_override(sys, "soc.mem_bw_gbps", "96");
  apply_override(sys, "timing.t_turnaround_ns", "7.5");
  CHECK(sys.mem.num_channels == 16);
  CHECK(sys.pim.has_reduction_tree);
  CHECK(sys.soc.mem_bw_gbps == doctest::Approx(96.0));
  CHECK(sys.timing.t_turnaround_ns == doctest::Approx(7.5));
  CHECK_THROWS_AS(apply_override(sys, "mem.no_such_field", "1"), ConfigError);
  CHECK_THROWS(apply_override(sys, "mem.num_channels", "not_a_number"));
}

TEST_CASE("environment variables override the loaded config") {
  SystemConfig sys = SystemConfig::defaults();
  REQUIRE(setenv("PIMGEMV_MEM_BANKS_PER_CHANNEL", "32", 1) == 0);
  REQUIRE(setenv("PIMGEMV_PIM_HAS_REDUCTION_TREE", "true", 1) == 0);
  apply_env_overrides(sys);
  unsetenv("PIMGEMV_MEM_BANKS_PER_CHANNEL");
  unsetenv("PIMGEMV_PIM_HAS_REDUCTION_TREE");
  CHECK(sys.mem.banks_per_channel == 32);
  CHECK(sys.pim.has_reduction_tree);
}
