#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pimgemv/pipeline.hpp"

namespace pimgemv {

// Decoder-only transformer hyperparameters (FFN width is 4x hidden across
// the catalog). Per generated token every layer runs four weight GEMVs --
// fused QKV (3h x h), attention output (h x h), FFN up (4h x h) and FFN down
// (h x 4h) -- plus SoC-side attention over the KV cache and vector work.
// The classifier head is excluded (it runs once per token outside the layer
// stack and is omitted from the catalog's accounting).
struct ModelSpec {
  std::string name;
  int layers = 0;
  std::int64_t hidden = 0;

  std::int64_t ffn() const { return 4 * hidden; }
  // Layer-stack GEMV weights: (3h + h + 4h + 4h) * h = 12 h^2 per layer.
  std::int64_t params() const {
    return 12LL * layers * hidden * hidden;
  }
  std::array<std::pair<std::int64_t, std::int64_t>, 4> gemv_shapes() const {
    return {{{3 * hidden, hidden}, {hidden, hidden}, {ffn(), hidden}, {hidden, ffn()}}};
  }
};

std::vector<ModelSpec> catalog_models();
std::vector<ModelSpec> models_from_json(const std::string& text);
std::string models_to_json(const std::vector<ModelSpec>& models);

// One generated token at a given KV-cache depth. Attention streams the cache
// (keys + values, 16-bit activations) at memory bandwidth; vector work
// (norms, residuals, activations) streams a fixed multiple of the hidden
// state per layer. GEMVs run on the PIM banks or stay on the SoC.
struct TokenLatency {
  double gemv_ns = 0;
  double attention_ns = 0;
  double vector_ns = 0;
  double total_ns() const { return gemv_ns + attention_ns + vector_ns; }
};

TokenLatency per_token_latency(const ModelSpec& model, const SystemConfig& sys,
                               const PlannerKnobs& knobs, bool use_pim,
                               std::int64_t context_len,
                               const DataFormat& weight_fmt = {});

struct InferenceScenario {
  std::int64_t prompt_tokens = 1920;
  std::int64_t gen_tokens = 128;
};

struct EndToEndReport {
  double prompt_ns = 0;          // compute-bound prefill on the SoC
  double gen_ns = 0;             // sum of per-token latencies, context growing
  double total_ns = 0;           // prompt + generation
  double token_gen_fraction = 0; // generation share of the total
};

EndToEndReport end_to_end_time(const ModelSpec& model, const SystemConfig& sys,
                               const PlannerKnobs& knobs, bool use_pim,
                               const InferenceScenario& scenario = {},
                               const DataFormat& weight_fmt = {});

}  // namespace pimgemv
