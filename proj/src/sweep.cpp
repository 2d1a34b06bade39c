#include "pimgemv/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pimgemv/errors.hpp"
#include "pimgemv/timing.hpp"

namespace pimgemv {

namespace {

using std::int64_t;

std::string cell_i(int64_t v) { return std::to_string(v); }

std::string cell_f(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double geomean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += std::log(x);
  return std::exp(acc / static_cast<double>(xs.size()));
}

// Fan a list of independent cases over a worker pool. Every result lands at
// its case's index, so assembly order (and output bytes) never depends on
// scheduling; a worker owns each case it pulls from the shared counter.
template <typename R, typename Fn>
std::vector<R> parallel_map(std::size_t n, Fn fn) {
  std::vector<R> out(n);
  if (n == 0) return out;
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&out, &next, &fn, n] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        out[i] = fn(i);
      }
    }));
  }
  for (auto& f : futs) f.get();
  return out;
}

const std::vector<std::string>& tail_header() {
  static const std::vector<std::string> h{
      "macs",       "iv_writes", "row_switches",      "sf_row_opens",
      "spill_row_opens", "turnarounds", "lane_reduce_steps", "sf_ops",
      "spills",     "pim_ns",    "soc_reduce_ns",     "soc_ns",
      "speedup"};
  return h;
}

std::vector<std::string> tail_cells(const TraceCounts& c, double pim_ns,
                                    double reduce_ns, double soc_ns, double speedup) {
  return {cell_i(c.macs),
          cell_i(c.iv_writes),
          cell_i(c.row_switches),
          cell_i(c.sf_row_opens),
          cell_i(c.spill_row_opens),
          cell_i(c.turnarounds),
          cell_i(c.lane_reduce_steps),
          cell_i(c.sf_ops),
          cell_i(c.spills),
          cell_f(pim_ns),
          cell_f(reduce_ns),
          cell_f(soc_ns),
          cell_f(speedup)};
}

std::vector<std::string> geo_tail(double speedup) {
  std::vector<std::string> cells(tail_header().size() - 1, "");
  cells.push_back(cell_f(speedup));
  return cells;
}

void push_row(Table& t, std::vector<std::string> lead, std::vector<std::string> tail) {
  lead.insert(lead.end(), std::make_move_iterator(tail.begin()),
              std::make_move_iterator(tail.end()));
  t.rows.push_back(std::move(lead));
}

std::vector<std::string> run_tail(const GemvRun& run) {
  return tail_cells(run.counts, run.pim_ns, run.soc_reduce_ns, run.soc_ns, run.speedup);
}

std::vector<std::string> report_tail(const SpeedupReport& rep) {
  return tail_cells(rep.counts, rep.pim_ns, rep.soc_reduce_ns, rep.soc_ns, rep.speedup);
}

void add_constant_notes(Table& t, const SystemConfig& sys) {
  t.notes.push_back("pim_slot_ns=" + cell_f(sys.timing.pim_slot_ns(sys.pim)));
  t.notes.push_back("t_row_switch_ns=" + cell_f(sys.timing.t_row_switch_ns));
  t.notes.push_back("t_turnaround_ns=" + cell_f(sys.timing.t_turnaround_ns));
  t.notes.push_back("soc_mem_bw_gbps=" + cell_f(sys.soc.mem_bw_gbps));
  t.notes.push_back("soc_tops_8b=" + cell_f(sys.soc.tops_8b / 1e12));
  t.notes.push_back("channels=" + cell_i(sys.mem.num_channels));
  t.notes.push_back("banks_per_channel=" + cell_i(sys.mem.banks_per_channel));
  t.notes.push_back("row_buffer_bytes=" + cell_i(sys.mem.row_buffer_bytes));
  t.notes.push_back("gran_bytes=" + cell_i(sys.mem.interleave_gran_bytes));
  t.notes.push_back("regs_per_alu=" + cell_i(sys.pim.regs_per_alu));
}

GemvProblem make_problem(int64_t m, int64_t k, const DataFormat& fmt = {}) {
  GemvProblem p;
  p.m = m;
  p.k = k;
  p.in_fmt = fmt;
  if (fmt.is_float) p.out_fmt = DataFormat{.bits = 16, .is_float = true};
  return p;
}

// One planned-and-priced table row: lead cells, the case to run, and the
// geomean bucket its speedup feeds.
struct RunCase {
  std::vector<std::string> lead;
  GemvProblem problem{};
  SystemConfig sys{};
  PlannerKnobs knobs{};
  int bucket = -1;
};

std::vector<GemvRun> run_all(const std::vector<RunCase>& cases) {
  return parallel_map<GemvRun>(cases.size(), [&cases](std::size_t i) {
    return plan_and_time(cases[i].problem, cases[i].sys, cases[i].knobs);
  });
}

// Emit one row per case in construction order, then one geomean summary row
// per bucket (bucket lead cells supplied by the caller).
void emit_cases(Table& t, const std::vector<RunCase>& cases,
                const std::vector<std::vector<std::string>>& bucket_leads) {
  const std::vector<GemvRun> runs = run_all(cases);
  std::vector<std::vector<double>> buckets(bucket_leads.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    push_row(t, cases[i].lead, run_tail(runs[i]));
    if (cases[i].bucket >= 0) buckets[cases[i].bucket].push_back(runs[i].speedup);
  }
  for (std::size_t b = 0; b < bucket_leads.size(); ++b) {
    push_row(t, bucket_leads[b], geo_tail(geomean(buckets[b])));
  }
}

void tail_into_header(Table& t) {
  for (const auto& col : tail_header()) t.header.push_back(col);
}

Table exp_baseline_vs_colmajor(const SystemConfig& sys) {
  Table t;
  t.name = "baseline_vs_colmajor";
  t.header = {"model", "m", "k", "layout"};
  tail_into_header(t);
  struct Shape {
    std::string model;
    int64_t m, k;
  };
  std::vector<Shape> shapes;
  for (const ModelSpec& model : catalog_models()) {
    for (const auto& [m, k] : model.gemv_shapes()) shapes.push_back({model.name, m, k});
  }
  const std::vector<GemvRun> placed =
      parallel_map<GemvRun>(shapes.size(), [&shapes, &sys](std::size_t i) {
        return plan_and_time(make_problem(shapes[i].m, shapes[i].k), sys, PlannerKnobs{});
      });
  std::vector<double> geo_placed, geo_col, geo_row;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const GemvProblem p = make_problem(shapes[i].m, shapes[i].k);
    const SpeedupReport col = price_column_major_baseline(p, sys);
    const SpeedupReport row = price_row_major_baseline(p, sys);
    const std::vector<std::string> id{shapes[i].model, cell_i(shapes[i].m),
                                      cell_i(shapes[i].k)};
    auto with_layout = [&id](const std::string& layout) {
      std::vector<std::string> lead = id;
      lead.push_back(layout);
      return lead;
    };
    push_row(t, with_layout("placed"), run_tail(placed[i]));
    push_row(t, with_layout("column_major"), report_tail(col));
    push_row(t, with_layout("row_major"), report_tail(row));
    geo_placed.push_back(placed[i].speedup);
    geo_col.push_back(col.speedup);
    geo_row.push_back(row.speedup);
  }
  push_row(t, {"geomean", "", "", "placed"}, geo_tail(geomean(geo_placed)));
  push_row(t, {"geomean", "", "", "column_major"}, geo_tail(geomean(geo_col)));
  push_row(t, {"geomean", "", "", "row_major"}, geo_tail(geomean(geo_row)));
  add_constant_notes(t, sys);
  return t;
}

Table exp_reg_alloc(const SystemConfig& sys) {
  Table t;
  t.name = "reg_alloc";
  t.header = {"model", "m", "k", "iv_regs"};
  tail_into_header(t);
  std::vector<RunCase> cases;
  std::vector<std::vector<std::string>> bucket_leads;
  for (int iv : {2, 8, 14}) {
    PlannerKnobs knobs;
    knobs.iv_regs = iv;
    knobs.cr_degree = 1;  // isolate the staging window from interleave effects
    const int bucket = static_cast<int>(bucket_leads.size());
    for (const ModelSpec& model : catalog_models()) {
      for (const auto& [m, k] : model.gemv_shapes()) {
        cases.push_back({{model.name, cell_i(m), cell_i(k), cell_i(iv)},
                         make_problem(m, k),
                         sys,
                         knobs,
                         bucket});
      }
    }
    bucket_leads.push_back({"geomean", "", "", cell_i(iv)});
  }
  emit_cases(t, cases, bucket_leads);
  add_constant_notes(t, sys);
  return t;
}

Table exp_cr_degree(const SystemConfig& sys) {
  Table t;
  t.name = "cr_degree";
  t.header = {"model", "m", "k", "degree_mode"};
  tail_into_header(t);
  std::vector<RunCase> cases;
  std::vector<std::vector<std::string>> bucket_leads;
  for (bool auto_degree : {false, true}) {
    PlannerKnobs knobs;
    if (!auto_degree) knobs.cr_degree = 1;
    const std::string mode = auto_degree ? "auto" : "1";
    const int bucket = static_cast<int>(bucket_leads.size());
    for (const ModelSpec& model : catalog_models()) {
      for (const auto& [m, k] : model.gemv_shapes()) {
        cases.push_back({{model.name, cell_i(m), cell_i(k), mode},
                         make_problem(m, k),
                         sys,
                         knobs,
                         bucket});
      }
    }
    bucket_leads.push_back({"geomean", "", "", mode});
  }
  emit_cases(t, cases, bucket_leads);
  add_constant_notes(t, sys);
  return t;
}

// Sweeps that vary one hardware knob report the large square case plus the
// geomean over every catalog GEMV under the same configuration.
using Configure = void (*)(SystemConfig&, DataFormat&, PlannerKnobs&);

Table hardware_sweep(const std::string& name, const std::string& knob_col,
                     const std::vector<std::pair<std::string, Configure>>& settings,
                     const SystemConfig& sys) {
  Table t;
  t.name = name;
  t.header = {knob_col, "case", "m", "k"};
  tail_into_header(t);
  std::vector<RunCase> cases;
  std::vector<std::vector<std::string>> bucket_leads;
  for (const auto& [label, configure] : settings) {
    SystemConfig s = sys;
    DataFormat f{};
    PlannerKnobs knobs{};
    configure(s, f, knobs);
    s.mem.validate();
    s.pim.validate(s.mem);
    cases.push_back({{label, "large_square", "4096", "4096"},
                     make_problem(4096, 4096, f),
                     s,
                     knobs,
                     -1});
    const int bucket = static_cast<int>(bucket_leads.size());
    for (const ModelSpec& model : catalog_models()) {
      for (const auto& [m, k] : model.gemv_shapes()) {
        cases.push_back({{label, "catalog", cell_i(m), cell_i(k)},
                         make_problem(m, k, f),
                         s,
                         knobs,
                         bucket});
      }
    }
    bucket_leads.push_back({label, "catalog_geomean", "", ""});
  }
  emit_cases(t, cases, bucket_leads);
  add_constant_notes(t, sys);
  return t;
}

Table exp_bank_sweep(const SystemConfig& sys) {
  const std::vector<std::pair<std::string, Configure>> settings{
      {"64", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.mem.banks_per_channel = 8; }},
      {"128", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.mem.banks_per_channel = 16; }},
      {"256", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.mem.banks_per_channel = 32; }}};
  return hardware_sweep("bank_sweep", "total_banks", settings, sys);
}

Table exp_gran_sweep(const SystemConfig& sys) {
  const std::vector<std::pair<std::string, Configure>> settings{
      {"128", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.mem.interleave_gran_bytes = 128; }},
      {"256", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.mem.interleave_gran_bytes = 256; }},
      {"512", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.mem.interleave_gran_bytes = 512; }}};
  return hardware_sweep("gran_sweep", "gran_bytes", settings, sys);
}

Table exp_format_sweep(const SystemConfig& sys) {
  const std::vector<std::pair<std::string, Configure>> settings{
      {"int4", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.bits = 4; }},
      {"int8", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.bits = 8; }},
      {"int16", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.bits = 16; }},
      {"bf16", [](SystemConfig&, DataFormat& f, PlannerKnobs&) {
         f.bits = 16;
         f.is_float = true;
       }}};
  return hardware_sweep("format_sweep", "format", settings, sys);
}

Table exp_sf_sweep(const SystemConfig& sys) {
  const std::vector<std::pair<std::string, Configure>> settings{
      {"off", [](SystemConfig&, DataFormat&, PlannerKnobs&) {}},
      {"16", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.sf_block = 16; }},
      {"32", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.sf_block = 32; }},
      {"64", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.sf_block = 64; }},
      {"128", [](SystemConfig&, DataFormat& f, PlannerKnobs&) { f.sf_block = 128; }}};
  return hardware_sweep("sf_sweep", "sf_block", settings, sys);
}

Table exp_reg_count_sweep(const SystemConfig& sys) {
  // An 8-register file cannot hold the default 8-word staging window next to
  // any accumulator, so that point runs with a 4-word window.
  const std::vector<std::pair<std::string, Configure>> settings{
      {"8", [](SystemConfig& s, DataFormat&, PlannerKnobs& k) {
         s.pim.regs_per_alu = 8;
         k.iv_regs = 4;
       }},
      {"16", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.pim.regs_per_alu = 16; }},
      {"32", [](SystemConfig& s, DataFormat&, PlannerKnobs&) { s.pim.regs_per_alu = 32; }}};
  return hardware_sweep("reg_count_sweep", "regs_per_alu", settings, sys);
}

Table exp_split_k(const SystemConfig& sys) {
  Table t;
  t.name = "split_k";
  t.header = {"model", "m", "k", "split_k"};
  tail_into_header(t);
  std::vector<RunCase> cases;
  std::vector<std::vector<std::string>> bucket_leads;
  const ModelSpec small = catalog_models().front();  // the shapes that need it most
  for (int deg : {1, 2, 4, 8}) {
    PlannerKnobs knobs;
    knobs.split_k = deg;
    const int bucket = static_cast<int>(bucket_leads.size());
    for (const auto& [m, k] : small.gemv_shapes()) {
      cases.push_back({{small.name, cell_i(m), cell_i(k), cell_i(deg)},
                       make_problem(m, k),
                       sys,
                       knobs,
                       bucket});
    }
    bucket_leads.push_back({"geomean", "", "", cell_i(deg)});
  }
  emit_cases(t, cases, bucket_leads);
  add_constant_notes(t, sys);
  return t;
}

Table exp_reduction_tree(const SystemConfig& sys) {
  Table t;
  t.name = "reduction_tree";
  t.header = {"model", "m", "k", "tree"};
  tail_into_header(t);
  std::vector<RunCase> cases;
  std::vector<std::vector<std::string>> bucket_leads;
  for (bool tree : {false, true}) {
    SystemConfig s = sys;
    s.pim.has_reduction_tree = tree;
    const std::string mode = tree ? "on" : "off";
    const int bucket = static_cast<int>(bucket_leads.size());
    for (const ModelSpec& model : catalog_models()) {
      for (const auto& [m, k] : model.gemv_shapes()) {
        cases.push_back({{model.name, cell_i(m), cell_i(k), mode},
                         make_problem(m, k),
                         s,
                         PlannerKnobs{},
                         bucket});
      }
    }
    bucket_leads.push_back({"geomean", "", "", mode});
  }
  emit_cases(t, cases, bucket_leads);
  add_constant_notes(t, sys);
  return t;
}

Table exp_e2e(const SystemConfig& sys) {
  Table t;
  t.name = "e2e";
  t.header = {"model",        "params",           "prompt_ns",
              "gen_soc_ns",   "gen_pim_ns",       "token_share_soc",
              "speedup_ctx0", "speedup_mean_ctx", "e2e_speedup"};
  const InferenceScenario scenario{};
  const int64_t mean_ctx = scenario.prompt_tokens + scenario.gen_tokens / 2;
  const PlannerKnobs knobs;
  struct ModelRow {
    std::vector<std::string> cells;
    double s0 = 0, sm = 0, se = 0;
  };
  const std::vector<ModelSpec> models = catalog_models();
  const std::vector<ModelRow> rows = parallel_map<ModelRow>(
      models.size(), [&models, &sys, &knobs, &scenario, mean_ctx](std::size_t i) {
        const ModelSpec& model = models[i];
        const EndToEndReport soc = end_to_end_time(model, sys, knobs, false, scenario);
        const EndToEndReport pim = end_to_end_time(model, sys, knobs, true, scenario);
        ModelRow r;
        r.s0 = per_token_latency(model, sys, knobs, false, 0).total_ns() /
               per_token_latency(model, sys, knobs, true, 0).total_ns();
        r.sm = per_token_latency(model, sys, knobs, false, mean_ctx).total_ns() /
               per_token_latency(model, sys, knobs, true, mean_ctx).total_ns();
        r.se = soc.total_ns / pim.total_ns;
        r.cells = {model.name,          cell_i(model.params()),
                   cell_f(soc.prompt_ns), cell_f(soc.gen_ns),
                   cell_f(pim.gen_ns),  cell_f(soc.token_gen_fraction),
                   cell_f(r.s0),        cell_f(r.sm),
                   cell_f(r.se)};
        return r;
      });
  std::vector<double> g0, gm, ge;
  for (const ModelRow& r : rows) {
    t.rows.push_back(r.cells);
    g0.push_back(r.s0);
    gm.push_back(r.sm);
    ge.push_back(r.se);
  }
  t.rows.push_back({"geomean", "", "", "", "", "", cell_f(geomean(g0)),
                    cell_f(geomean(gm)), cell_f(geomean(ge))});
  add_constant_notes(t, sys);
  return t;
}

}  // namespace

const std::vector<std::pair<std::string, Experiment>>& experiment_names() {
  static const std::vector<std::pair<std::string, Experiment>> names{
      {"baseline_vs_colmajor", Experiment::baseline_vs_colmajor},
      {"reg_alloc", Experiment::reg_alloc},
      {"cr_degree", Experiment::cr_degree},
      {"bank_sweep", Experiment::bank_sweep},
      {"gran_sweep", Experiment::gran_sweep},
      {"format_sweep", Experiment::format_sweep},
      {"sf_sweep", Experiment::sf_sweep},
      {"reg_count_sweep", Experiment::reg_count_sweep},
      {"split_k", Experiment::split_k},
      {"reduction_tree", Experiment::reduction_tree},
      {"e2e", Experiment::e2e},
  };
  return names;
}

Experiment experiment_from_name(const std::string& name) {
  for (const auto& [n, e] : experiment_names()) {
    if (n == name) return e;
  }
  std::ostringstream msg;
  msg << "unknown experiment '" << name << "'; choices:";
  for (const auto& [n, e] : experiment_names()) msg << ' ' << n;
  throw ConfigError(msg.str());
}

std::string experiment_name(Experiment e) {
  for (const auto& [n, ex] : experiment_names()) {
    if (ex == e) return n;
  }
  throw ConfigError("unknown experiment");
}

Table run_experiment(Experiment e, const SystemConfig& sys) {
  switch (e) {
    case Experiment::baseline_vs_colmajor: return exp_baseline_vs_colmajor(sys);
    case Experiment::reg_alloc: return exp_reg_alloc(sys);
    case Experiment::cr_degree: return exp_cr_degree(sys);
    case Experiment::bank_sweep: return exp_bank_sweep(sys);
    case Experiment::gran_sweep: return exp_gran_sweep(sys);
    case Experiment::format_sweep: return exp_format_sweep(sys);
    case Experiment::sf_sweep: return exp_sf_sweep(sys);
    case Experiment::reg_count_sweep: return exp_reg_count_sweep(sys);
    case Experiment::split_k: return exp_split_k(sys);
    case Experiment::reduction_tree: return exp_reduction_tree(sys);
    case Experiment::e2e: return exp_e2e(sys);
  }
  throw ConfigError("unknown experiment");
}

std::string table_to_csv(const Table& t) {
  std::ostringstream out;
  out << "# pimgemv-csv v1\n";
  out << "# experiment=" << t.name << '\n';
  for (const std::string& note : t.notes) out << "# " << note << '\n';
  auto emit_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      const std::string& c = cells[i];
      if (c.find(',') != std::string::npos || c.find('"') != std::string::npos) {
        out << '"';
        for (char ch : c) {
          if (ch == '"') out << '"';
          out << ch;
        }
        out << '"';
      } else {
        out << c;
      }
    }
    out << '\n';
  };
  emit_row(t.header);
  for (const auto& row : t.rows) emit_row(row);
  return out.str();
}

std::string table_to_json(const Table& t) {
  nlohmann::json j;
  j["format"] = "pimgemv-table v1";
  j["experiment"] = t.name;
  j["notes"] = t.notes;
  j["header"] = t.header;
  j["rows"] = t.rows;
  return j.dump(2);
}

VerifyOutcome verify_suite(const SystemConfig& sys, std::uint64_t seed, int instances) {
  VerifyOutcome out;
  std::mt19937_64 rng(seed);
  auto rand_int = [&rng](int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  for (int i = 0; i < instances; ++i) {
    // Draw until the planner accepts the combination (some knob mixes are
    // legitimately rejected, e.g. scale blocks that misalign with tiles).
    for (int attempt = 0;; ++attempt) {
      SystemConfig s = sys;
      s.mem.num_channels = static_cast<int>(1LL << rand_int(0, 2));       // 1/2/4
      s.mem.banks_per_channel = static_cast<int>(1LL << rand_int(1, 4));  // 2..16
      GemvProblem p;
      const int64_t bits_roll = rand_int(0, 3);
      p.in_fmt.bits = bits_roll == 0 ? 4 : bits_roll == 1 ? 8 : 16;
      p.in_fmt.is_float = bits_roll == 3;
      if (p.in_fmt.is_float) p.out_fmt = DataFormat{.bits = 16, .is_float = true};
      if (rand_int(0, 3) == 0) {
        p.in_fmt.sf_block = static_cast<int>(16LL << rand_int(0, 3));  // 16..128
      }
      PlannerKnobs knobs;
      knobs.iv_regs = static_cast<int>(2LL << rand_int(0, 2));  // 2/4/8
      if (rand_int(0, 1) == 0) knobs.cr_degree = static_cast<int>(rand_int(1, 2));
      int deg = static_cast<int>(1LL << rand_int(0, 2));  // 1/2/4
      while (s.mem.num_channels % deg != 0) deg /= 2;
      knobs.split_k = deg;

      p.m = rand_int(1, 1024);
      int64_t mult = deg;
      if (p.in_fmt.has_scale()) mult *= *p.in_fmt.sf_block;
      p.k = std::max<int64_t>(mult, rand_int(1, 1024) / mult * mult);

      try {
        const FunctionalCheck fc = run_functional(p, s, knobs, rng());
        ++out.total;
        std::ostringstream tag;
        tag << "instance " << i << " (m=" << p.m << " k=" << p.k
            << " bits=" << p.in_fmt.bits << (p.in_fmt.is_float ? "f" : "")
            << " sf=" << (p.in_fmt.has_scale() ? *p.in_fmt.sf_block : 0)
            << " banks=" << s.mem.num_channels << "x" << s.mem.banks_per_channel
            << " split=" << knobs.split_k << ")";
        if (!fc.match) {
          std::ostringstream msg;
          msg << tag.str() << ": output mismatch, max_abs_err=" << fc.max_abs_err
              << " tolerance=" << fc.tolerance;
          out.failures.push_back(msg.str());
        } else if (!fc.placement.all_ok()) {
          out.failures.push_back(tag.str() + ": placement invariants: " +
                                 fc.placement.detail);
        } else {
          ++out.passed;
        }
        break;
      } catch (const PlannerError&) {
        if (attempt >= 16) {
          ++out.total;
          out.failures.push_back("instance generation starved by planner rejections");
          break;
        }
      }
    }
  }

  // Ragged M: padding rows must stay invisible in the output.
  {
    ++out.total;
    SystemConfig s = sys;
    s.mem.num_channels = 2;
    s.mem.banks_per_channel = 4;
    GemvProblem p;
    p.m = 300;
    p.k = 200;
    const FunctionalCheck fc = run_functional(p, s, PlannerKnobs{}, seed ^ 0x9e3779b9);
    if (fc.match && fc.placement.all_ok()) {
      ++out.passed;
    } else {
      out.failures.push_back("ragged-M padding case failed: " + fc.placement.detail);
    }
  }

  // Negative: an impossible interleave degree must be rejected, not planned.
  {
    ++out.total;
    bool threw = false;
    try {
      PlannerKnobs knobs;
      knobs.cr_degree = 99;
      plan_gemv(make_problem(4096, 4096), sys.mem, sys.pim, knobs);
    } catch (const PlannerError&) {
      threw = true;
    }
    if (threw) {
      ++out.passed;
    } else {
      out.failures.push_back("register-overflow interleave degree was not rejected");
    }
  }

  // Negative: a tampered stream must be caught by the executor.
  {
    ++out.total;
    SystemConfig s = sys;
    s.mem.num_channels = 1;
    s.mem.banks_per_channel = 2;
    const GemvProblem p = make_problem(64, 64);
    const TilePlan plan = plan_gemv(p, s.mem, s.pim, PlannerKnobs{});
    const PlacementMap map = build_placement_map(p, plan, s.mem);
    CommandTrace trace = generate_trace(map, s.mem, s.pim);
    bool threw = false;
    for (PimCommand& cmd : trace.commands) {
      if (cmd.op == PimOp::Mac) {
        cmd.iv_word += 1;  // claim a word that was never staged
        break;
      }
    }
    try {
      const ElemVec w(static_cast<std::size_t>(p.m * p.k), 1.0);
      const ElemVec iv(static_cast<std::size_t>(p.k), 1.0);
      const auto placed = rearrange_matrix(w, {}, map, s.mem);
      run_trace(trace, map, placed, iv, {}, s.mem, s.pim);
    } catch (const TraceError&) {
      threw = true;
    }
    if (threw) {
      ++out.passed;
    } else {
      out.failures.push_back("tampered command stream was not caught");
    }
  }

  return out;
}

const std::vector<FigureRef>& figure_map() {
  static const std::vector<FigureRef> refs{
      {"fig7", Experiment::baseline_vs_colmajor,
       "placed layout reaches ~6.7x geomean on the catalog; column-major and "
       "row-major layouts fall below 1x (slower than the SoC)",
       true},
      {"fig8", Experiment::reg_alloc,
       "larger staging windows cut turnarounds; an 8-word window lands within "
       "5% of a 14-word window",
       false},
      {"fig9", Experiment::cr_degree,
       "row-block interleave amortizes input staging across blocks; the "
       "automatic degree never loses to degree 1",
       false},
      {"fig10", Experiment::bank_sweep,
       "speedup scales with bank count: ~3.4x at 64, ~6.7x at 128, ~12.8x at "
       "256 banks on the large square case",
       false},
      {"fig11", Experiment::format_sweep,
       "narrower weights raise arithmetic intensity per byte; relative "
       "placement gains persist across 4/8/16-bit and bfloat16 weights",
       false},
      {"fig11", Experiment::sf_sweep,
       "smaller scale blocks add metadata traffic and scaling slots; overhead "
       "shrinks monotonically as the block grows",
       false},
      {"fig12", Experiment::reg_count_sweep,
       "more registers admit wider accumulator groups and deeper interleave; "
       "8 registers cost speedup, 32 add little over 16",
       false},
      {"fig12", Experiment::gran_sweep,
       "tile shapes adapt to the granule while the walked words, row opens "
       "and staged input stay fixed, so speedup is insensitive from 128 B to "
       "512 B granules",
       false},
      {"fig13", Experiment::split_k,
       "published design reports non-decreasing gains with split degree; this "
       "model prices the SoC-side merge linearly in degree, so the curve "
       "peaks at degree 4 on the smallest shapes and dips at 8",
       true},
      {"fig13", Experiment::reduction_tree,
       "a cross-lane reduction tree removes every charged fold slot, a "
       "strictly positive gain whenever tiles are narrower than the SIMD "
       "lanes",
       false},
      {"table1", Experiment::e2e,
       "token generation dominates end-to-end time (>= 85% on the SoC); "
       "per-token speedups land between 2.5x and 7x across the catalog",
       false},
  };
  return refs;
}

std::string figure_map_markdown() {
  std::ostringstream out;
  out << "| Figure | Experiment | Expected outcome | Basis |\n";
  out << "|--------|------------|------------------|-------|\n";
  for (const FigureRef& r : figure_map()) {
    out << "| " << r.figure << " | `" << experiment_name(r.experiment) << "` | "
        << r.expectation << " | "
        << (r.decision_bound ? "decision-bound" : "reproduced") << " |\n";
  }
  return out.str();
}

std::string repro_manifest_json() {
  const std::vector<std::pair<std::string, std::string>> entries{
      {"A1", "./build/acceptance A1"}, {"A2", "./build/acceptance A2"},
      {"A3", "./build/acceptance A3"}, {"A4", "./build/acceptance A4"},
      {"A5", "./build/acceptance A5"}, {"A6", "./build/acceptance A6"},
      {"A7", "./build/acceptance A7"}, {"A8", "./build/acceptance A8"},
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [criterion, command] : entries) {
    arr.push_back({{"criterion", criterion},
                   {"command", command},
                   {"prerequisite", "cmake -S . -B build && cmake --build build -j"}});
  }
  nlohmann::json figs = nlohmann::json::array();
  for (const FigureRef& r : figure_map()) {
    figs.push_back(
        {{"figure", r.figure},
         {"experiment", experiment_name(r.experiment)},
         {"command",
          "./build/pimgemv sweep " + experiment_name(r.experiment)}});
  }
  return nlohmann::json{{"checks", arr}, {"figures", figs}}.dump(2);
}

}  // namespace pimgemv
