#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "etcon/errors.hpp"
#include "etcon/graph.hpp"
#include "etcon/triggers.hpp"

namespace etcon::app {

enum class Mode { consensus, clocksync };

std::string_view to_string(Mode m);

/// Scenario problem tied to a JSON location, e.g. "law.sigma[2]" or "line 4, column 9".
class ScenarioError : public ConfigError {
public:
  ScenarioError(std::string where, const std::string& what)
      : ConfigError(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

private:
  std::string where_;
};

/// b or c: the per-agent rule 0.5/d_i ("degree"), 0.5/max d ("safe"), or explicit values.
struct GainRule {
  enum class Kind { degree, safe, values } kind = Kind::degree;
  std::vector<double> values;  ///< one entry broadcasts to every agent
};

struct Scenario {
  std::string network_name;  ///< "net1".."net4" or "inline"
  Matrix<double> weights;
  Mode mode = Mode::consensus;

  std::optional<LawKind> kind;  ///< absent: combined with `lambda`
  double lambda = 0;
  std::vector<double> sigma;  ///< empty when only a sweep supplies it
  GainRule b;
  GainRule c;
  std::optional<std::vector<double>> eps;

  std::optional<std::vector<double>> x0;
  std::optional<std::vector<double>> gamma;  ///< absent in clocksync: drawn per run from `seed`
  std::optional<std::vector<double>> alpha0;

  double horizon = 50;
  std::uint64_t seed = 0;
  std::vector<double> sweep_sigma;
  std::vector<double> sweep_lambda;
  int mc_runs = 1;
  std::size_t max_events = 1'000'000;

  Index size() const { return weights.rows(); }
  bool has_sweep() const { return !sweep_sigma.empty() || !sweep_lambda.empty(); }
};

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Per-agent vector from a one-or-n list.
Vector<double> expand(const std::vector<double>& v, Index n, const char* field);

Vector<double> resolve_gain(const GainRule& rule, const Digraph<double>& g, const char* field);

/// Law for one cell; sigma / lambda override the scenario's own when given.
TriggerLaw<double> make_law(const Scenario& s, const Digraph<double>& g, std::optional<double> sigma = std::nullopt,
                            std::optional<double> lambda = std::nullopt);

/// Drifts of Monte-Carlo repetition `run`: the scenario's gamma, or random on (0.7, 1.3).
Vector<double> drifts_for_run(const Scenario& s, int run);

}  // namespace etcon::app
