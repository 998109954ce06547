#include "etcon/app/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "etcon/networks.hpp"
#include "etcon/rng.hpp"

namespace etcon::app {

using nlohmann::json;

std::string_view to_string(Mode m) { return m == Mode::consensus ? "consensus" : "clocksync"; }

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ScenarioError(where, what); }

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) fail(where, "expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<double> vector_field(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of numbers");
  return number_list(j, where);
}

Matrix<double> matrix_field(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a name or an array of rows");
  const auto n = static_cast<Index>(j.size());
  Matrix<double> w(n, n);
  for (Index i = 0; i < n; ++i) {
    const std::string row = where + "[" + std::to_string(i) + "]";
    const json& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Index>(r.size()) != n) fail(row, "expected " + std::to_string(n) + " entries");
    for (Index k = 0; k < n; ++k) w(i, k) = number(r[static_cast<std::size_t>(k)], row + "[" + std::to_string(k) + "]");
  }
  return w;
}

GainRule gain_field(const json& j, const std::string& where) {
  GainRule g;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "degree") g.kind = GainRule::Kind::degree;
    else if (s == "safe") g.kind = GainRule::Kind::safe;
    else fail(where, "expected \"degree\", \"safe\", a number or an array");
    return g;
  }
  g.kind = GainRule::Kind::values;
  g.values = number_list(j, where);
  return g;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
  }
}

std::string position(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void check_length(const std::optional<std::vector<double>>& v, Index n, const std::string& where) {
  if (v && static_cast<Index>(v->size()) != n)
    fail(where, "has " + std::to_string(v->size()) + " entries, network has " + std::to_string(n) + " agents");
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::string msg = e.what();
    fail(position(text, e.byte == 0 ? 0 : e.byte - 1), msg.substr(msg.find(']') + 2));
  }
  if (!root.is_object()) fail("scenario", "expected a JSON object");
  check_keys(root, {"network", "mode", "law", "x0", "gamma", "alpha0", "horizon", "seed", "sweep", "mc_runs",
                    "max_events"},
             "");

  Scenario s;
  if (!root.contains("network")) fail("network", "missing");
  const json& net = root["network"];
  if (net.is_string()) {
    s.network_name = net.get<std::string>();
    auto id = benchmark_network_id(s.network_name);
    if (!id) fail("network", "unknown network \"" + s.network_name + "\" (expected net1..net4 or a matrix)");
    s.weights = benchmark_network<double>(*id);
  } else {
    s.network_name = "inline";
    s.weights = matrix_field(net, "network");
  }
  const Index n = s.weights.rows();
  try {
    (void)build_digraph(s.weights);
  } catch (const ConfigError& e) {
    fail("network", e.what());
  }

  if (root.contains("mode")) {
    const json& m = root["mode"];
    const std::string v = m.is_string() ? m.get<std::string>() : "";
    if (v == "consensus") s.mode = Mode::consensus;
    else if (v == "clocksync") s.mode = Mode::clocksync;
    else fail("mode", "expected \"consensus\" or \"clocksync\"");
  }

  if (!root.contains("law") || !root["law"].is_object()) fail("law", "missing or not an object");
  const json& law = root["law"];
  check_keys(law, {"kind", "lambda", "sigma", "b", "c", "eps"}, "law");
  if (law.contains("kind")) {
    const json& k = law["kind"];
    s.kind = k.is_string() ? law_kind_from_string(k.get<std::string>()) : std::nullopt;
    if (!s.kind) fail("law.kind", "expected \"algorithm1\", \"algorithm2\" or \"combined\"");
  }
  if (law.contains("lambda")) s.lambda = number(law["lambda"], "law.lambda");
  else if (!s.kind || *s.kind == LawKind::combined) {
    if (!(root.contains("sweep") && root["sweep"].contains("lambda"))) fail("law.lambda", "missing");
  }
  if (law.contains("sigma")) s.sigma = number_list(law["sigma"], "law.sigma");
  if (law.contains("b")) s.b = gain_field(law["b"], "law.b");
  if (law.contains("c")) s.c = gain_field(law["c"], "law.c");
  if (law.contains("eps")) s.eps = number_list(law["eps"], "law.eps");

  if (root.contains("x0")) s.x0 = vector_field(root["x0"], "x0");
  if (root.contains("gamma")) s.gamma = vector_field(root["gamma"], "gamma");
  if (root.contains("alpha0")) s.alpha0 = vector_field(root["alpha0"], "alpha0");
  check_length(s.x0, n, "x0");
  check_length(s.gamma, n, "gamma");
  check_length(s.alpha0, n, "alpha0");
  if (s.mode == Mode::consensus) {
    if (!s.x0) fail("x0", "required in consensus mode");
    if (s.gamma || s.alpha0) fail(s.gamma ? "gamma" : "alpha0", "only allowed in clocksync mode");
  } else {
    if (s.x0) fail("x0", "not allowed in clocksync mode (use alpha0)");
    if (s.gamma)
      for (std::size_t i = 0; i < s.gamma->size(); ++i)
        if (!((*s.gamma)[i] > 0)) fail("gamma[" + std::to_string(i) + "]", "drifts must be positive");
  }

  if (root.contains("horizon")) s.horizon = number(root["horizon"], "horizon");
  if (!(s.horizon > 0)) fail("horizon", "must be positive");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    s.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("mc_runs")) {
    if (!root["mc_runs"].is_number_integer() || root["mc_runs"].get<long long>() < 1)
      fail("mc_runs", "expected a positive integer");
    s.mc_runs = root["mc_runs"].get<int>();
  }
  if (root.contains("max_events")) {
    if (!root["max_events"].is_number_integer() || root["max_events"].get<long long>() < 1)
      fail("max_events", "expected a positive integer");
    s.max_events = root["max_events"].get<std::size_t>();
  }
  if (root.contains("sweep")) {
    const json& sw = root["sweep"];
    if (!sw.is_object()) fail("sweep", "expected an object");
    check_keys(sw, {"sigma", "lambda"}, "sweep");
    if (sw.contains("sigma")) s.sweep_sigma = vector_field(sw["sigma"], "sweep.sigma");
    if (sw.contains("lambda")) s.sweep_lambda = vector_field(sw["lambda"], "sweep.lambda");
    if (!s.has_sweep()) fail("sweep", "needs a sigma or lambda list");
  }
  if (s.sigma.empty() && s.sweep_sigma.empty()) fail("law.sigma", "missing");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Vector<double> expand(const std::vector<double>& v, Index n, const char* field) {
  if (v.size() == 1) return Vector<double>::Constant(n, v.front());
  if (static_cast<Index>(v.size()) != n)
    throw ScenarioError(field, "has " + std::to_string(v.size()) + " entries, network has " + std::to_string(n) +
                                   " agents");
  return Eigen::Map<const Vector<double>>(v.data(), n);
}

Vector<double> resolve_gain(const GainRule& rule, const Digraph<double>& g, const char* field) {
  switch (rule.kind) {
    case GainRule::Kind::degree: return per_agent_gain(g);
    case GainRule::Kind::safe: return safe_gain(g);
    case GainRule::Kind::values: break;
  }
  return expand(rule.values, g.size(), field);
}

TriggerLaw<double> make_law(const Scenario& s, const Digraph<double>& g, std::optional<double> sigma,
                            std::optional<double> lambda) {
  LawSettings<double> ls;
  ls.kind = lambda ? LawKind::combined : s.kind.value_or(LawKind::combined);
  ls.lambda = lambda.value_or(s.lambda);
  ls.sigma = sigma ? Vector<double>::Constant(g.size(), *sigma) : expand(s.sigma, g.size(), "law.sigma");
  ls.b = resolve_gain(s.b, g, "law.b");
  ls.c = resolve_gain(s.c, g, "law.c");
  if (s.eps) ls.eps = expand(*s.eps, g.size(), "law.eps");
  return validate_and_derive(g, ls);
}

Vector<double> drifts_for_run(const Scenario& s, int run) {
  if (s.gamma) return Eigen::Map<const Vector<double>>(s.gamma->data(), s.size());
  return random_drifts(s.seed, static_cast<std::uint64_t>(run), s.size());
}

}  // namespace etcon::app
