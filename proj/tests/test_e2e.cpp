#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "pimgemv/config.hpp"
#include "pimgemv/e2e.hpp"
#include "pimgemv/errors.hpp"

using namespace pimgemv;

namespace {

ModelSpec find_model(const std::string& name) {
  for (const ModelSpec& m : catalog_models())
    if (m.name == name) return m;
  REQUIRE(false);
  return {};
}

}  // namespace

TEST_CASE("model catalog: pinned hyperparameters and parameter counts") {
  const auto models = catalog_models();
  REQUIRE(models.size() == 7);
  const ModelSpec small = find_model("125m");
  CHECK(small.layers == 12);
  CHECK(small.hidden == 768);
  CHECK(small.params() == 84934656);
  const ModelSpec mid = find_model("13b");
  CHECK(mid.layers == 40);
  CHECK(mid.hidden == 5120);
  CHECK(mid.params() == 12582912000LL);
  const ModelSpec big = find_model("30b");
  CHECK(big.layers == 48);
  CHECK(big.hidden == 7168);
  // Four layer GEMVs: fused QKV, attention output, FFN up, FFN down.
  const auto shapes = mid.gemv_shapes();
  CHECK(shapes[0] == std::pair<std::int64_t, std::int64_t>{3 * 5120, 5120});
  CHECK(shapes[1] == std::pair<std::int64_t, std::int64_t>{5120, 5120});
  CHECK(shapes[2] == std::pair<std::int64_t, std::int64_t>{4 * 5120, 5120});
  CHECK(shapes[3] == std::pair<std::int64_t, std::int64_t>{5120, 4 * 5120});
}

TEST_CASE("model catalog JSON round-trip and validation") {
  const auto models = catalog_models();
  const auto back = models_from_json(models_to_json(models));
  REQUIRE(back.size() == models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    CHECK(back[i].name == models[i].name);
    CHECK(back[i].layers == models[i].layers);
    CHECK(back[i].hidden == models[i].hidden);
  }
  CHECK_THROWS_AS(
      models_from_json(R"({"models":[{"name":"x","layers":0,"hidden":4}]})"),
      ConfigError);
}

TEST_CASE("pinned prefill time for the 13b model") {
  const SystemConfig sys = SystemConfig::defaults();
  const EndToEndReport rep =
      end_to_end_time(find_model("13b"), sys, PlannerKnobs{}, /*use_pim=*/false);
  // 2 ops per weight per prompt token, compute-bound on the SoC.
  CHECK(rep.prompt_ns == doctest::Approx(1455372954.2169).epsilon(1e-9));
  CHECK(rep.total_ns == rep.prompt_ns + rep.gen_ns);
}

TEST_CASE("token generation dominates the end-to-end time on the SoC") {
  const SystemConfig sys = SystemConfig::defaults();
  for (const ModelSpec& m : catalog_models()) {
    const EndToEndReport rep =
        end_to_end_time(m, sys, PlannerKnobs{}, /*use_pim=*/false);
    CHECK(rep.token_gen_fraction >= 0.85);
    if (m.params() > 1000000000LL) CHECK(rep.token_gen_fraction >= 0.88);
  }
}

TEST_CASE("generation time is exactly the sum of per-token latencies") {
  const SystemConfig sys = SystemConfig::defaults();
  const InferenceScenario scenario{};  // 1920 prompt + 128 generated
  for (bool use_pim : {false, true}) {
    const ModelSpec m = find_model("125m");
    const EndToEndReport rep = end_to_end_time(m, sys, PlannerKnobs{}, use_pim);
    double sum = 0.0;
    for (std::int64_t t = 0; t < scenario.gen_tokens; ++t) {
      const TokenLatency tok = per_token_latency(
          m, sys, PlannerKnobs{}, use_pim, scenario.prompt_tokens + t);
      sum += tok.total_ns();
    }
    CHECK(rep.gen_ns == sum);  // bitwise: same terms folded in the same order
  }
}

TEST_CASE("attention cost starts at zero and grows with the KV cache") {
  const SystemConfig sys = SystemConfig::defaults();
  const ModelSpec m = find_model("1.3b");
  const TokenLatency t0 = per_token_latency(m, sys, PlannerKnobs{}, true, 0);
  CHECK(t0.attention_ns == 0.0);
  const TokenLatency t1k = per_token_latency(m, sys, PlannerKnobs{}, true, 1024);
  const TokenLatency t2k = per_token_latency(m, sys, PlannerKnobs{}, true, 2048);
  CHECK(t1k.attention_ns > 0.0);
  CHECK(t2k.attention_ns == doctest::Approx(2.0 * t1k.attention_ns));
  CHECK(t1k.gemv_ns == t0.gemv_ns);  // cache depth never touches the GEMVs
}

TEST_CASE("pinned mid-generation token speedup for the 13b model") {
  const SystemConfig sys = SystemConfig::defaults();
  const ModelSpec m = find_model("13b");
  const std::int64_t ctx = 1920 + 128 / 2;
  const double soc =
      per_token_latency(m, sys, PlannerKnobs{}, false, ctx).total_ns();
  const double pim =
      per_token_latency(m, sys, PlannerKnobs{}, true, ctx).total_ns();
  const double speedup = soc / pim;
  CHECK(speedup == doctest::Approx(4.0487).epsilon(1e-3));
  CHECK(speedup > 3.0);
  CHECK(speedup < 5.0);
}

TEST_CASE("fresh-context token speedups sit between gain and roofline") {
  const SystemConfig sys = SystemConfig::defaults();
  const double roof = roofline_speedup(sys.mem, sys.pim);
  for (const ModelSpec& m : catalog_models()) {
    const double soc =
        per_token_latency(m, sys, PlannerKnobs{}, false, 0).total_ns();
    const double pim =
        per_token_latency(m, sys, PlannerKnobs{}, true, 0).total_ns();
    const double speedup = soc / pim;
    CHECK(speedup > 2.5);
    CHECK(speedup < 7.0);
    CHECK(speedup < roof);
  }
}

TEST_CASE("invalid scenarios and contexts are rejected") {
  const SystemConfig sys = SystemConfig::defaults();
  const ModelSpec m = find_model("125m");
  CHECK_THROWS_AS(per_token_latency(m, sys, PlannerKnobs{}, true, -1), ConfigError);
  InferenceScenario bad;
  bad.prompt_tokens = -1;
  CHECK_THROWS_AS(end_to_end_time(m, sys, PlannerKnobs{}, true, bad), ConfigError);
  ModelSpec broken = m;
  broken.layers = 0;
  CHECK_THROWS_AS(per_token_latency(broken, sys, PlannerKnobs{}, true, 0), ConfigError);
}
