#include "pimgemv/e2e.hpp"

#include "json.hpp"
#include "pimgemv/errors.hpp"

namespace pimgemv {

namespace {

constexpr double kActivationBytes = 2.0;  // activations and KV cache at 16 bits
constexpr double kVectorWordsPerLayer = 16.0;  // norms/residuals/activation traffic

}  // namespace

std::vector<ModelSpec> catalog_models() {
  return {
      {"125m", 12, 768},  {"350m", 24, 1024}, {"1.3b", 24, 2048},
      {"2.7b", 32, 2560}, {"6.7b", 32, 4096}, {"13b", 40, 5120},
      {"30b", 48, 7168},
  };
}

std::vector<ModelSpec> models_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<ModelSpec> models;
  for (const auto& m : j.at("models")) {
    ModelSpec spec;
    spec.name = m.at("name").get<std::string>();
    spec.layers = m.at("layers").get<int>();
    spec.hidden = m.at("hidden").get<std::int64_t>();
    if (spec.layers < 1 || spec.hidden < 1) {
      throw ConfigError("model hyperparameters must be positive");
    }
    models.push_back(std::move(spec));
  }
  return models;
}

std::string models_to_json(const std::vector<ModelSpec>& models) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ModelSpec& m : models) {
    arr.push_back({{"name", m.name}, {"layers", m.layers}, {"hidden", m.hidden}});
  }
  return nlohmann::json{{"models", arr}}.dump(2);
}

TokenLatency per_token_latency(const ModelSpec& model, const SystemConfig& sys,
                               const PlannerKnobs& knobs, bool use_pim,
                               std::int64_t context_len, const DataFormat& weight_fmt) {
  if (model.layers < 1 || model.hidden < 1) {
    throw ConfigError("model hyperparameters must be positive");
  }
  if (context_len < 0) throw ConfigError("context length must be >= 0");

  TokenLatency t;
  for (const auto& [m, k] : model.gemv_shapes()) {
    GemvProblem p;
    p.m = m;
    p.k = k;
    p.in_fmt = weight_fmt;
    if (use_pim) {
      const GemvRun run = plan_and_time(p, sys, knobs);
      t.gemv_ns += run.pim_ns + run.soc_reduce_ns;
    } else {
      t.gemv_ns += soc_gemv_ns(p, sys.soc);
    }
  }
  t.gemv_ns *= model.layers;

  const double bw = sys.soc.bytes_per_ns();
  t.attention_ns = static_cast<double>(model.layers) * 2.0 *
                   static_cast<double>(context_len) *
                   static_cast<double>(model.hidden) * kActivationBytes / bw;
  t.vector_ns = static_cast<double>(model.layers) * kVectorWordsPerLayer *
                static_cast<double>(model.hidden) * kActivationBytes / bw;
  return t;
}

EndToEndReport end_to_end_time(const ModelSpec& model, const SystemConfig& sys,
                               const PlannerKnobs& knobs, bool use_pim,
                               const InferenceScenario& scenario,
                               const DataFormat& weight_fmt) {
  if (scenario.prompt_tokens < 0 || scenario.gen_tokens < 0) {
    throw ConfigError("scenario token counts must be >= 0");
  }
  EndToEndReport rep;
  // Prefill is compute-bound: 2 ops per weight per prompt token.
  rep.prompt_ns = 2.0 * static_cast<double>(model.params()) *
                  static_cast<double>(scenario.prompt_tokens) /
                  sys.soc.ops_per_sec(weight_fmt.bits) * 1e9;

  // GEMV time per token does not depend on context; attention and vector
  // terms are separated so the cache growth is integrated token by token.
  if (scenario.gen_tokens > 0) {
    const TokenLatency base =
        per_token_latency(model, sys, knobs, use_pim, 0, weight_fmt);
    for (std::int64_t t = 0; t < scenario.gen_tokens; ++t) {
      const std::int64_t ctx = scenario.prompt_tokens + t;
      const double attn = static_cast<double>(model.layers) * 2.0 *
                          static_cast<double>(ctx) *
                          static_cast<double>(model.hidden) * kActivationBytes /
                          sys.soc.bytes_per_ns();
      rep.gen_ns += base.gemv_ns + attn + base.vector_ns;
    }
  }
  rep.total_ns = rep.prompt_ns + rep.gen_ns;
  rep.token_gen_fraction = rep.total_ns > 0 ? rep.gen_ns / rep.total_ns : 0.0;
  return rep;
}

}  // namespace pimgemv
