#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "pimgemv/errors.hpp"
#include "pimgemv/sweep.hpp"

using namespace pimgemv;

namespace {

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  REQUIRE(false);
  return 0;
}

std::map<std::string, double> note_constants(const Table& t) {
  std::map<std::string, double> out;
  for (const std::string& note : t.notes) {
    const auto eq = note.find('=');
    REQUIRE(eq != std::string::npos);
    out[note.substr(0, eq)] = std::atof(note.c_str() + eq + 1);
  }
  return out;
}

}  // namespace

TEST_CASE("experiment names round-trip and reject unknowns") {
  const auto& names = experiment_names();
  CHECK(names.size() == 11);
  for (const auto& [name, e] : names) {
    CHECK(experiment_from_name(name) == e);
    CHECK(experiment_name(e) == name);
  }
  CHECK_THROWS_AS(experiment_from_name("no_such_experiment"), ConfigError);
}

TEST_CASE("bank sweep: schema, determinism, and recomputable speedups") {
  const SystemConfig sys = SystemConfig::defaults();
  const Table t = run_experiment(Experiment::bank_sweep, sys);

  SUBCASE("worker-pool execution is byte-deterministic") {
    const Table again = run_experiment(Experiment::bank_sweep, sys);
    CHECK(table_to_csv(t) == table_to_csv(again));
  }

  SUBCASE("versioned CSV header and row shape") {
    const std::string csv = table_to_csv(t);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "# pimgemv-csv v1");
    REQUIRE(std::getline(in, line));
    CHECK(line == "# experiment=bank_sweep");
    // 3 settings x (large square + 28 catalog shapes + geomean).
    CHECK(t.rows.size() == 90);
    for (const auto& row : t.rows) CHECK(row.size() == t.header.size());
  }

  SUBCASE("speedup cells recompute from counts and note constants") {
    const auto c = note_constants(t);
    REQUIRE(c.count("pim_slot_ns"));
    REQUIRE(c.count("t_row_switch_ns"));
    REQUIRE(c.count("t_turnaround_ns"));
    int checked = 0;
    for (const auto& row : t.rows) {
      if (row[column(t, "case")] != "large_square") continue;
      auto cell = [&](const char* name) {
        return std::atof(row[column(t, name)].c_str());
      };
      const double slots = cell("macs") + cell("iv_writes") +
                           cell("lane_reduce_steps") + cell("sf_ops") +
                           cell("spills");
      const double opens = cell("row_switches") + cell("sf_row_opens") +
                           cell("spill_row_opens");
      const double pim = slots * c.at("pim_slot_ns") +
                         opens * c.at("t_row_switch_ns") +
                         cell("turnarounds") * c.at("t_turnaround_ns");
      const double want = cell("soc_ns") / (pim + cell("soc_reduce_ns"));
      CHECK(cell("speedup") == doctest::Approx(want).epsilon(2e-3));
      ++checked;
    }
    CHECK(checked == 3);
  }

  SUBCASE("pinned geomeans across the bank counts") {
    const std::size_t speed = column(t, "speedup");
    std::vector<double> geo;
    for (const auto& row : t.rows)
      if (row[column(t, "case")] == "catalog_geomean")
        geo.push_back(std::atof(row[speed].c_str()));
    REQUIRE(geo.size() == 3);
    CHECK(geo[0] == doctest::Approx(3.3461).epsilon(1e-3));
    CHECK(geo[1] == doctest::Approx(6.3669).epsilon(1e-3));
    CHECK(geo[2] == doctest::Approx(11.5966).epsilon(1e-3));
    CHECK(geo[0] < geo[1]);
    CHECK(geo[1] < geo[2]);
  }
}

TEST_CASE("split-K sweep reports the measured geomean curve") {
  const SystemConfig sys = SystemConfig::defaults();
  const Table t = run_experiment(Experiment::split_k, sys);
  const std::size_t speed = column(t, "speedup");
  std::vector<double> geo;
  for (const auto& row : t.rows)
    if (row[0] == "geomean") geo.push_back(std::atof(row[speed].c_str()));
  REQUIRE(geo.size() == 4);  // degrees 1, 2, 4, 8
  CHECK(geo[0] == doctest::Approx(5.4024).epsilon(1e-3));
  CHECK(geo[1] == doctest::Approx(5.7350).epsilon(1e-3));
  CHECK(geo[2] == doctest::Approx(5.9513).epsilon(1e-3));
  CHECK(geo[3] == doctest::Approx(5.7459).epsilon(1e-3));
  // Splitting helps up to degree 4; the degree-8 merge overhead gives some
  // of it back. The curve is data, not an aspiration.
  CHECK(geo[1] > geo[0]);
  CHECK(geo[2] > geo[1]);
  CHECK(geo[3] < geo[2]);
}

TEST_CASE("token-generation table covers the catalog plus a geomean row") {
  const SystemConfig sys = SystemConfig::defaults();
  const Table t = run_experiment(Experiment::e2e, sys);
  REQUIRE(t.rows.size() == 8);
  REQUIRE(t.header.size() == 9);
  for (const auto& row : t.rows) REQUIRE(row.size() == 9);
  CHECK(t.rows[0][column(t, "model")] == "125m");
  CHECK(t.rows[0][column(t, "params")] == "84934656");
  CHECK(t.rows.back()[0] == "geomean");
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const double share =
        std::atof(t.rows[i][column(t, "token_share_soc")].c_str());
    CHECK(share >= 0.85);
    CHECK(share <= 1.0);
  }
  const std::string json_text = table_to_json(t);
  const auto j = nlohmann::json::parse(json_text);
  CHECK(j.at("format") == "pimgemv-table v1");
  CHECK(j.at("experiment") == "e2e");
  CHECK(j.at("header").size() == 9);
  CHECK(j.at("rows").size() == 8);
}

TEST_CASE("randomized verification battery passes on the defaults") {
  const VerifyOutcome out = verify_suite(SystemConfig::defaults(), 7, 20);
  CHECK(out.ok());
  CHECK(out.passed == out.total);
  CHECK(out.total >= 20);
  CHECK(out.failures.empty());
}

TEST_CASE("repro manifest runs every acceptance check exactly once") {
  const auto j = nlohmann::json::parse(repro_manifest_json());
  const auto& checks = j.at("checks");
  REQUIRE(checks.size() == 8);
  std::set<std::string> seen;
  for (const auto& chk : checks) {
    const std::string crit = chk.at("criterion").get<std::string>();
    CHECK(seen.insert(crit).second);
    CHECK_FALSE(chk.at("command").get<std::string>().empty());
    CHECK(chk.at("command").get<std::string>().find("acceptance") !=
          std::string::npos);
    CHECK_FALSE(chk.at("prerequisite").get<std::string>().empty());
  }
  for (int i = 1; i <= 8; ++i) CHECK(seen.count("A" + std::to_string(i)) == 1);

  // Every figure-map entry gets a runnable sweep command as well.
  const auto& figs = j.at("figures");
  REQUIRE(figs.size() == figure_map().size());
  std::set<std::string> fig_experiments;
  for (const auto& fig : figs) {
    const std::string exp = fig.at("experiment").get<std::string>();
    fig_experiments.insert(exp);
    CHECK(fig.at("command").get<std::string>() == "./build/pimgemv sweep " + exp);
  }
  CHECK(fig_experiments.count("bank_sweep") == 1);
}

TEST_CASE("figure map covers every experiment") {
  const auto& figs = figure_map();
  CHECK(figs.size() == 11);
  std::set<std::string> covered;
  for (const FigureRef& f : figs) {
    CHECK_FALSE(f.figure.empty());
    CHECK_FALSE(f.expectation.empty());
    covered.insert(experiment_name(f.experiment));
  }
  std::set<std::string> all;
  for (const auto& [name, e] : experiment_names()) all.insert(name);
  CHECK(covered == all);
  // At least one chart is marked as following from a modeling decision.
  bool any_decision = false;
  for (const FigureRef& f : figs) any_decision = any_decision || f.decision_bound;
  CHECK(any_decision);
  const std::string md = figure_map_markdown();
  for (const FigureRef& f : figs)
    CHECK(md.find(f.figure) != std::string::npos);
}
