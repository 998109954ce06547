#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"

#include "etcon/app/runner.hpp"
#include "etcon/app/scenario.hpp"
#include "etcon/lyapunov.hpp"
#include "etcon/networks.hpp"
#include "etcon/rng.hpp"

using namespace etcon;
using namespace etcon::app;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = ETCON_SCENARIO_DIR;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("etcon_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const char* kComplete = R"({"network": "net3", "mode": "consensus", "law": {"lambda": 0, "sigma": 0.5},
                            "x0": [1, 0, 0, 0, 0], "horizon": 20})";

}  // namespace

TEST_CASE("SplitMix64 reference stream") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next() == 0x06C45D188009454FULL);
  CHECK(substream_key(2024, 3) == 0x3EE456D42E14F30FULL);
  const auto g = random_drifts(2024, 3, 5);
  const double expected[] = {1.1080175042173546, 1.0433375787689765, 1.2976248172607345, 0.793722117018629,
                             0.8439968663267358};
  for (Index i = 0; i < 5; ++i) CHECK(g(i) == expected[i]);
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto d = random_drifts(1, r, 5);
    CHECK(d.minCoeff() > 0.7);
    CHECK(d.maxCoeff() < 1.3);
  }
}

TEST_CASE("parse a minimal consensus scenario") {
  const auto s = parse_scenario(kComplete);
  CHECK(s.network_name == "net3");
  CHECK(s.weights == benchmark_network<double>(3));
  CHECK(s.mode == Mode::consensus);
  CHECK(s.horizon == 20);
  REQUIRE(s.x0);
  CHECK(s.x0->size() == 5);
  CHECK_NOTHROW(make_law(s, build_digraph(s.weights)));
}

TEST_CASE("star with the per-agent gains is rejected with the delta diagnostic") {
  const auto s = load_scenario(fs::path(ETCON_SCENARIO_DIR).parent_path() / "tests" / "data" / "star_degree_gains.json");
  CHECK_THROWS_WITH(make_law(s, build_digraph(s.weights)), ContainsSubstring("delta_1") && ContainsSubstring("agent 1"));
  const auto safe = load_scenario(kScenarios / "star_safe_gains.json");
  CHECK_NOTHROW(make_law(safe, build_digraph(safe.weights)));
}

TEST_CASE("scenario diagnostics carry a location") {
  auto where = [](const std::string& text) {
    try {
      parse_scenario(text);
    } catch (const ScenarioError& e) {
      return e.where();
    }
    return std::string("no error");
  };
  CHECK(where("{\n  \"network\": \"net1\",\n  \"law\": {\"lambda\": 0,}\n}") == "line 3, column 23");
  CHECK(where(R"({"network": "net9", "law": {"lambda": 0, "sigma": 0.5}, "x0": [1,2,3,4,5]})") == "network");
  CHECK(where(R"({"network": "net1", "law": {"lambda": 0, "sigmaa": 0.5}, "x0": [1,2,3,4,5]})") == "law.sigmaa");
  CHECK(where(R"({"network": "net1", "law": {"lambda": 0, "sigma": 0.5}})") == "x0");
  CHECK(where(R"({"network": "net1", "law": {"lambda": 0, "sigma": 0.5}, "x0": [1,2]})") == "x0");
  CHECK(where(R"({"network": "net1", "law": {"lambda": 0, "sigma": [0.5, "a"]}, "x0": [1,2,3,4,5]})") ==
        "law.sigma[1]");
  CHECK(where(R"({"network": "net1", "mode": "clocksync", "law": {"lambda": 0, "sigma": 0.5},
                  "x0": [1,2,3,4,5]})") == "x0");
  CHECK(where(R"({"network": [[0, 1], [1, -1]], "law": {"lambda": 0, "sigma": 0.5}, "x0": [1, 2]})") == "network");
  CHECK(where(R"({"network": "net1", "law": {"lambda": 0, "sigma": 0.5}, "x0": [1,2,3,4,5], "horizon": 0})") ==
        "horizon");
  CHECK(where(R"({"network": "net1", "law": {"sigma": 0.5}, "x0": [1,2,3,4,5]})") == "law.lambda");
  CHECK(where(R"({"network": "net1", "law": {"lambda": 0}, "x0": [1,2,3,4,5]})") == "law.sigma");
}

TEST_CASE("inline matrices and per-agent lists") {
  const auto s = parse_scenario(R"({"network": [[0, 1], [1, 0]], "law": {"kind": "algorithm2", "sigma": [0.3, 0.6],
                                    "b": 0.25, "c": [0.25, 0.25]}, "x0": [1, -1], "horizon": 5})");
  CHECK(s.network_name == "inline");
  const auto law = make_law(s, build_digraph(s.weights));
  CHECK(law.sigma(1) == 0.6);
  CHECK(law.lambda == 0);
  CHECK(law.b(0) == 0.25);
}

TEST_CASE("run from consensus reports t_con = 0 and only initial events") {
  auto s = parse_scenario(kComplete);
  s.x0 = std::vector<double>(5, 2.0);
  std::ostringstream log;
  const auto r = run_command(s, scratch("flat"), log);
  CHECK(r.outcome.metrics.events.total == 5);
  CHECK(r.outcome.metrics.t_con == std::optional<double>(0.0));
  CHECK_THAT(log.str(), ContainsSubstring("N_e=5 T_con=0"));
}

TEST_CASE("run writes CSVs with a non-increasing certificate") {
  const auto s = load_scenario(kScenarios / "clock_fixed_drifts_algorithm2.json");
  const auto out = scratch("clock");
  std::ostringstream log;
  const auto r = run_command(s, out, log);
  for (const char* f : {"events.csv", "segments.csv", "lyapunov.csv", "metrics.csv", "clocks.csv"})
    CHECK(fs::exists(out / f));
  CHECK(r.exp_rate);
  CHECK_THAT(log.str(), ContainsSubstring(" A=-"));

  const auto rows = read_csv(out / "lyapunov.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == std::vector<std::string>{"t", "V1", "V2", "Vlambda"});
  double prev = std::stod(rows[1][3]);
  for (std::size_t k = 2; k < rows.size(); ++k) {
    const double v = std::stod(rows[k][3]);
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
  const auto clocks = read_csv(out / "clocks.csv");
  CHECK(clocks[0].size() == 16);
  CHECK(read_csv(out / "segments.csv")[0].size() == 12);
  CHECK(read_csv(out / "events.csv")[1] == std::vector<std::string>{"0", "1", "initial"});
}

TEST_CASE("reruns are byte-identical") {
  const auto s = load_scenario(kScenarios / "net1_algorithm2.json");
  std::ostringstream log;
  run_command(s, scratch("a"), log);
  run_command(s, scratch("b"), log);
  for (const char* f : {"events.csv", "segments.csv", "lyapunov.csv", "metrics.csv"})
    CHECK(slurp(fs::temp_directory_path() / "etcon_test_a" / f) == slurp(fs::temp_directory_path() / "etcon_test_b" / f));
}

TEST_CASE("sweep plan, order independence and reductions") {
  auto s = load_scenario(kScenarios / "sigma_sweep.json");
  s.horizon = 10;
  s.sweep_lambda = {0, 1};
  s.mc_runs = 3;
  const auto one = sweep(s, 1);
  const auto many = sweep(s, 4);
  CHECK(one.cells.size() == 18);
  CHECK(one.rows.size() == 54);
  std::ostringstream a, b;
  write_sweep_csv(a, one);
  write_sweep_csv(b, many);
  CHECK(a.str() == b.str());

  // lambda 0 and 1 columns match standalone algorithm 2 and 1 runs.
  const auto g = build_digraph(s.weights);
  for (const auto& row : one.rows) {
    if (row.sigma != "0.5") continue;
    auto alone = s;
    alone.kind = row.lambda == 0 ? LawKind::algorithm2 : LawKind::algorithm1;
    alone.sigma = {0.5};
    const auto o = simulate(alone, make_law(alone, g), row.run);
    CHECK(o.metrics.events.total == row.metrics.events.total);
    CHECK(o.metrics.t_con == row.metrics.t_con);
    CHECK(o.metrics.energy == row.metrics.energy);
    CHECK(o.metrics.h2sq.value == row.metrics.h2sq.value);
  }
}

TEST_CASE("sigma sweep plan has nine sigma cells of ten runs") {
  auto s = load_scenario(kScenarios / "sigma_sweep.json");
  s.horizon = 2;
  s.sweep_lambda = {0.5};
  const auto r = sweep(s, 0);
  CHECK(r.cells.size() == 9);
  CHECK(r.rows.size() == 90);
}

TEST_CASE("invalid sweep cells are recorded and the sweep continues") {
  auto s = parse_scenario(R"({"network": "net4", "mode": "clocksync", "law": {"sigma": 0.5}, "horizon": 5,
                              "sweep": {"lambda": [0, 1]}, "mc_runs": 2})");
  const auto r = sweep(s, 2);
  REQUIRE(r.cells.size() == 2);
  CHECK_THAT(r.cells[0].error, ContainsSubstring("delta_1"));
  CHECK(r.cells[0].ok_runs == 0);
  CHECK(r.cells[1].error.empty());
  CHECK(r.cells[1].ok_runs == 2);
  std::ostringstream os;
  write_sweep_csv(os, r);
  CHECK_THAT(os.str(), ContainsSubstring("delta_1 ="));
}

TEST_CASE("CSV number formatting and quoting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(std::optional<double>()).empty());
  CHECK(quote_field("a,b") == "\"a,b\"");
  CHECK(quote_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(quote_field("plain") == "plain");
}
