// Command-line driver: plan a placement, run the functional simulator,
// reproduce the named experiments, or run the verification battery.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pimgemv/e2e.hpp"
#include "pimgemv/errors.hpp"
#include "pimgemv/pipeline.hpp"
#include "pimgemv/sweep.hpp"

namespace fs = std::filesystem;
using namespace pimgemv;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value, applied last
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string format = "csv";
};

struct ProblemOpts {
  std::int64_t m = 4096;
  std::int64_t k = 4096;
  int bits = 8;
  bool is_float = false;
  int sf_block = 0;  // 0 = no block scale factors
  int sf_bits = 8;
  int iv_regs = 8;
  int cr_degree = 0;  // 0 = automatic (maximal)
  int split_k = 1;
};

SystemConfig resolve_config(const CommonOpts& o) {
  SystemConfig sys =
      o.config_path.empty() ? SystemConfig::defaults() : load_system_config(o.config_path);
  apply_env_overrides(sys);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    apply_override(sys, kv.substr(0, eq), kv.substr(eq + 1));
  }
  sys.validate();
  return sys;
}

GemvProblem to_problem(const ProblemOpts& o) {
  GemvProblem p;
  p.m = o.m;
  p.k = o.k;
  p.in_fmt.bits = o.bits;
  p.in_fmt.is_float = o.is_float;
  if (o.sf_block > 0) p.in_fmt.sf_block = o.sf_block;
  p.in_fmt.sf_bits = o.sf_bits;
  if (o.is_float) p.out_fmt = DataFormat{.bits = 16, .is_float = true};
  return p;
}

PlannerKnobs to_knobs(const ProblemOpts& o) {
  PlannerKnobs knobs;
  knobs.iv_regs = o.iv_regs;
  if (o.cr_degree > 0) knobs.cr_degree = o.cr_degree;
  knobs.split_k = o.split_k;
  return knobs;
}

void add_problem_flags(CLI::App* sub, ProblemOpts& p) {
  sub->add_option("-m,--m", p.m, "output rows (matrix height)");
  sub->add_option("-k,--k", p.k, "input length (matrix width)");
  sub->add_option("--bits", p.bits, "weight element bits (4/8/16)");
  sub->add_flag("--float", p.is_float, "bfloat16 weights (bits must be 16)");
  sub->add_option("--sf-block", p.sf_block, "block scale-factor length (0 = off)");
  sub->add_option("--sf-bits", p.sf_bits, "stored scale-factor width in bits");
  sub->add_option("--iv-regs", p.iv_regs, "input-vector staging registers");
  sub->add_option("--cr-degree", p.cr_degree, "row-block interleave degree (0 = auto)");
  sub->add_option("--split-k", p.split_k, "split-K degree across channel groups");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int cmd_plan(const CommonOpts& common, const ProblemOpts& popts) {
  const SystemConfig sys = resolve_config(common);
  const GemvRun run = plan_and_time(to_problem(popts), sys, to_knobs(popts));
  const std::string summary = run_to_json(run, sys);
  std::cout << summary << '\n';
  if (!common.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(common.out_dir);
    const std::string tag = std::to_string(popts.m) + "x" + std::to_string(popts.k);
    write_file(dir / ("plan_" + tag + ".json"), summary);
    write_file(dir / ("placement_" + tag + ".json"),
               placement_to_json(run.map, sys.mem));
    std::cerr << "wrote " << (dir / ("plan_" + tag + ".json")).string() << " and "
              << (dir / ("placement_" + tag + ".json")).string() << '\n';
  }
  return 0;
}

int cmd_simulate(const CommonOpts& common, const ProblemOpts& popts) {
  const SystemConfig sys = resolve_config(common);
  const GemvProblem p = to_problem(popts);
  const PlannerKnobs knobs = to_knobs(popts);
  const FunctionalCheck fc = run_functional(p, sys, knobs, common.seed);
  const GemvRun run = plan_and_time(p, sys, knobs);

  nlohmann::json j = nlohmann::json::parse(run_to_json(run, sys));
  j["functional"] = {{"match", fc.match},
                     {"max_abs_err", fc.max_abs_err},
                     {"tolerance", fc.tolerance},
                     {"seed", common.seed},
                     {"placement", nlohmann::json::parse(report_to_json(fc.placement))}};
  std::cout << j.dump(2) << '\n';

  const bool ok = fc.match && fc.placement.all_ok();
  std::cout << (ok ? "simulate: PASS" : "simulate: FAIL") << " (max_abs_err="
            << fc.max_abs_err << ", tolerance=" << fc.tolerance << ")\n";
  if (!common.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(common.out_dir);
    const std::string tag = std::to_string(popts.m) + "x" + std::to_string(popts.k);
    write_file(dir / ("simulate_" + tag + ".json"), j.dump(2) + "\n");
  }
  return ok ? 0 : 1;
}

int cmd_sweep(const CommonOpts& common, const std::string& which) {
  const SystemConfig sys = resolve_config(common);
  std::vector<Experiment> todo;
  if (which == "all") {
    for (const auto& [name, e] : experiment_names()) todo.push_back(e);
  } else {
    todo.push_back(experiment_from_name(which));
  }
  for (Experiment e : todo) {
    const Table table = run_experiment(e, sys);
    const std::string text =
        common.format == "json" ? table_to_json(table) : table_to_csv(table);
    if (common.out_dir.empty()) {
      std::cout << text;
      if (common.format == "json") std::cout << '\n';
    } else {
      const fs::path dir = ensure_out_dir(common.out_dir);
      const std::string ext = common.format == "json" ? ".json" : ".csv";
      const fs::path file = dir / (table.name + ext);
      write_file(file, text);
      std::cout << "wrote " << file.string() << " (" << table.rows.size()
                << " rows)\n";
    }
  }
  return 0;
}

int cmd_verify(const CommonOpts& common, int instances, bool manifest, bool figures,
               bool models) {
  if (manifest) {
    const std::string text = repro_manifest_json();
    if (common.out_dir.empty()) {
      std::cout << text << '\n';
    } else {
      const fs::path file = ensure_out_dir(common.out_dir) / "repro_manifest.json";
      write_file(file, text + "\n");
      std::cout << "wrote " << file.string() << '\n';
    }
    return 0;
  }
  if (figures) {
    std::cout << figure_map_markdown();
    return 0;
  }
  if (models) {
    std::cout << models_to_json(catalog_models()) << '\n';
    return 0;
  }
  const SystemConfig sys = resolve_config(common);
  const VerifyOutcome outcome = verify_suite(sys, common.seed, instances);
  for (const std::string& f : outcome.failures) std::cout << "FAIL " << f << '\n';
  std::cout << "verify: " << outcome.passed << "/" << outcome.total
            << " checks passed (seed " << common.seed << ")\n";
  return outcome.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced-placement planner, functional simulator and timing model "
               "for GEMV on bank-level PIM DRAM"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--config", common.config_path, "system config JSON file");
  app.add_option("--set", common.overrides,
                 "config override key=value (e.g. mem.num_channels=16)");
  app.add_option("--seed", common.seed, "seed for randomized data");
  app.add_option("--out", common.out_dir, "output directory (stdout when unset)");
  app.add_option("--format", common.format, "table format")
      ->check(CLI::IsMember({"csv", "json"}));

  ProblemOpts plan_p, sim_p;
  auto* plan = app.add_subcommand("plan", "plan and price one GEMV placement");
  add_problem_flags(plan, plan_p);
  plan->fallthrough();

  auto* sim = app.add_subcommand(
      "simulate", "run one GEMV functionally on random data and check it");
  add_problem_flags(sim, sim_p);
  sim->fallthrough();

  std::string which = "all";
  auto* sweep = app.add_subcommand("sweep", "run a named experiment (or 'all')");
  sweep->add_option("experiment", which, "experiment name or 'all'");
  sweep->fallthrough();

  int instances = 200;
  bool manifest = false, figures = false, models = false;
  auto* verify = app.add_subcommand(
      "verify", "randomized oracle-equivalence and invariant battery");
  verify->add_option("--instances", instances, "randomized instances to run");
  verify->add_flag("--manifest", manifest, "print the reproduction manifest and exit");
  verify->add_flag("--figures", figures, "print the figure-to-experiment map and exit");
  verify->add_flag("--models", models, "print the model catalog as JSON and exit");
  verify->fallthrough();

  int rc = 0;
  plan->callback([&] { rc = cmd_plan(common, plan_p); });
  sim->callback([&] { rc = cmd_simulate(common, sim_p); });
  sweep->callback([&] { rc = cmd_sweep(common, which); });
  verify->callback(
      [&] { rc = cmd_verify(common, instances, manifest, figures, models); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return rc;
}
