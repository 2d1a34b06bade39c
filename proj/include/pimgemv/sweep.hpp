#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pimgemv/e2e.hpp"
#include "pimgemv/pipeline.hpp"

namespace pimgemv {

enum class Experiment {
  baseline_vs_colmajor,  // placed layout vs column-/row-major baselines
  reg_alloc,             // input-vector staging window sizes
  cr_degree,             // row-block interleave degree off/auto
  bank_sweep,            // total bank count scaling
  gran_sweep,            // interleave granularity
  format_sweep,          // element width / float weights
  sf_sweep,              // block scale-factor sizes
  reg_count_sweep,       // register file size
  split_k,               // K split across channel groups
  reduction_tree,        // cross-lane reduction tree on/off
  e2e,                   // token generation across the model catalog
};

const std::vector<std::pair<std::string, Experiment>>& experiment_names();
Experiment experiment_from_name(const std::string& name);
std::string experiment_name(Experiment e);

// Deterministic tabular result. Cells are preformatted strings so identical
// configurations render byte-identical files; notes carry the pricing
// constants needed to recompute every speedup from the counted commands.
struct Table {
  std::string name;
  std::vector<std::string> notes;  // "key=value" lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table run_experiment(Experiment e, const SystemConfig& sys);

std::string table_to_csv(const Table& t);
std::string table_to_json(const Table& t);

// Randomized functional battery plus structural and negative checks.
struct VerifyOutcome {
  int total = 0;
  int passed = 0;
  std::vector<std::string> failures;  // one line per failed check
  bool ok() const { return failures.empty() && passed == total; }
};

VerifyOutcome verify_suite(const SystemConfig& sys, std::uint64_t seed, int instances);

// Published-figure map: which experiment reproduces which figure, what to
// expect, and whether the number is reproduced or follows from a documented
// modeling decision.
struct FigureRef {
  std::string figure;
  Experiment experiment;
  std::string expectation;
  bool decision_bound = false;
};

const std::vector<FigureRef>& figure_map();
std::string figure_map_markdown();

// One runnable command per acceptance check (each check exactly once), plus
// one sweep command per figure-map entry.
std::string repro_manifest_json();

}  // namespace pimgemv
