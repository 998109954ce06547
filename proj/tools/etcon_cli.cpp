// etcon: run, sweep or validate an event-triggered consensus scenario.
//
//   etcon run <scenario.json> [--out DIR]
//   etcon sweep <scenario.json> [--out DIR] [--jobs N]
//   etcon validate <scenario.json>
//
// DIR defaults to $ETCON_OUT_DIR, else ./out.
// Exit status: 0 ok, 1 other failure, 2 invalid scenario, 3 event budget exceeded.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "etcon/app/runner.hpp"
#include "etcon/app/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalid = 2;
constexpr int kSafetyCap = 3;

std::string default_out_dir() {
  const char* env = std::getenv("ETCON_OUT_DIR");
  return env && *env ? env : "out";
}

/// Validates the run law, or every sweep cell when the scenario sweeps.
void validate(const etcon::app::Scenario& s) {
  const auto g = etcon::build_digraph(s.weights);
  if (!s.has_sweep()) {
    (void)etcon::app::make_law(s, g);
    return;
  }
  std::vector<std::optional<double>> sigmas(s.sweep_sigma.begin(), s.sweep_sigma.end());
  std::vector<std::optional<double>> lambdas(s.sweep_lambda.begin(), s.sweep_lambda.end());
  if (sigmas.empty()) sigmas.emplace_back();
  if (lambdas.empty()) lambdas.emplace_back();
  for (const auto& sg : sigmas)
    for (const auto& lm : lambdas) (void)etcon::app::make_law(s, g, sg, lm);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered average consensus simulator"};
  app.require_subcommand(1);

  std::string path;
  std::string out = default_out_dir();
  unsigned jobs = 0;

  auto* run = app.add_subcommand("run", "simulate one scenario and write its CSVs");
  run->add_option("scenario", path, "scenario JSON file")->required();
  run->add_option("--out", out, "output directory");

  auto* sw = app.add_subcommand("sweep", "run the sigma/lambda grid with Monte-Carlo drifts");
  sw->add_option("scenario", path, "scenario JSON file")->required();
  sw->add_option("--out", out, "output directory");
  sw->add_option("--jobs", jobs, "worker threads (0: one per core)");

  auto* val = app.add_subcommand("validate", "check a scenario without running it");
  val->add_option("scenario", path, "scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    const auto scenario = etcon::app::load_scenario(path);
    if (*val) {
      validate(scenario);
      std::cout << "ok: " << scenario.network_name << ", " << etcon::app::to_string(scenario.mode) << ", "
                << scenario.size() << " agents\n";
    } else if (*run) {
      etcon::app::run_command(scenario, out, std::cout);
    } else {
      if (!scenario.has_sweep()) throw etcon::app::ScenarioError("sweep", "missing");
      const auto r = etcon::app::sweep_command(scenario, out, jobs, std::cout);
      for (const auto& c : r.cells)
        if (c.safety_cap) return kSafetyCap;
    }
  } catch (const etcon::ConfigError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kInvalid;
  } catch (const etcon::SafetyCapExceeded& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kSafetyCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
