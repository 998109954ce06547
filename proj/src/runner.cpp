#include "etcon/app/runner.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "etcon/lyapunov.hpp"

namespace etcon::app {

namespace fs = std::filesystem;

Outcome simulate(const Scenario& s, const TriggerLaw<double>& law, int run) {
  const auto g = build_digraph(s.weights);
  const RunOptions opts{s.max_events};
  Outcome o{law, {g, law, {}, {}, 0, 0, {}, {}}, std::nullopt, {}, {}};
  if (s.mode == Mode::consensus) {
    const Vector<double> x0 = Eigen::Map<const Vector<double>>(s.x0->data(), s.size());
    o.trace = run_event_driven(g, law, x0, s.horizon, Vector<double>::Ones(s.size()).eval(), opts);
    o.alpha_scale = Vector<double>::Ones(s.size());
  } else {
    std::optional<Vector<double>> alpha0;
    if (s.alpha0) alpha0 = Eigen::Map<const Vector<double>>(s.alpha0->data(), s.size());
    auto model = make_clock_model(drifts_for_run(s, run), alpha0);
    o.clock = run_clock_sync(g, law, model, s.horizon, opts);
    o.trace = o.clock->trace;
    o.alpha_scale = model.gamma;
  }
  o.metrics = compute_metrics(o.trace, law.lambda, o.alpha_scale);
  return o;
}

namespace {

std::ofstream open_csv(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace

RunSummary run_command(const Scenario& s, const fs::path& outdir, std::ostream& log) {
  const auto g = build_digraph(s.weights);
  const auto law = make_law(s, g);
  RunSummary r{simulate(s, law, 0), std::nullopt, {}};
  if (law.lambda == 0.0) r.exp_rate = exp_rate(g, law);

  fs::create_directories(outdir);
  {
    auto os = open_csv(outdir / "events.csv");
    write_events_csv(os, r.outcome.trace);
  }
  {
    auto os = open_csv(outdir / "segments.csv");
    write_segments_csv(os, r.outcome.trace);
  }
  {
    auto os = open_csv(outdir / "lyapunov.csv");
    write_lyapunov_csv(os, r.outcome.trace, law.lambda);
  }
  {
    auto os = open_csv(outdir / "metrics.csv");
    write_metrics_header(os);
    write_metrics_row(os, {std::string(to_string(law.kind)), law.lambda, sigma_label(law.sigma), s.seed, 0,
                           r.outcome.metrics});
  }
  if (r.outcome.clock) {
    auto os = open_csv(outdir / "clocks.csv");
    write_clocks_csv(os, *r.outcome.clock);
  }

  const auto& m = r.outcome.metrics;
  std::ostringstream line;
  line << "N_e=" << m.events.total << " T_con=" << (m.t_con ? format_number(*m.t_con) : "none")
       << " E=" << (m.energy ? format_number(*m.energy) : "none") << " C=" << format_number(m.h2sq.value);
  if (r.exp_rate) line << " A=" << format_number(*r.exp_rate);
  r.line = line.str();
  log << r.line << '\n';
  return r;
}

SweepResult sweep(const Scenario& s, unsigned jobs) {
  std::vector<std::optional<double>> sigmas, lambdas;
  for (double v : s.sweep_sigma) sigmas.emplace_back(v);
  for (double v : s.sweep_lambda) lambdas.emplace_back(v);
  if (sigmas.empty()) sigmas.emplace_back();
  if (lambdas.empty()) lambdas.emplace_back();

  struct Task {
    std::size_t cell;
    int run;
  };
  struct Result {
    std::optional<MetricsRow> row;
    std::string error;
    bool safety_cap = false;
  };
  std::vector<Task> plan;
  SweepResult out;
  const auto g = build_digraph(s.weights);
  std::vector<std::optional<TriggerLaw<double>>> laws;
  for (const auto& sg : sigmas) {
    for (const auto& lm : lambdas) {
      SweepCell cell;
      cell.runs = s.mc_runs;
      try {
        laws.push_back(make_law(s, g, sg, lm));
        cell.sigma = laws.back()->sigma(0);
        cell.lambda = laws.back()->lambda;
        cell.law = std::string(to_string(laws.back()->kind));
      } catch (const ConfigError& e) {
        laws.emplace_back();
        cell.sigma = sg.value_or(s.sigma.front());
        cell.lambda = lm.value_or(s.lambda);
        cell.law = lm ? "combined" : std::string(to_string(s.kind.value_or(LawKind::combined)));
        cell.error = e.what();
      }
      for (int r = 0; r < s.mc_runs; ++r) plan.push_back({out.cells.size(), r});
      out.cells.push_back(std::move(cell));
    }
  }

  std::vector<Result> results(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < plan.size();) {
      const auto& task = plan[k];
      const auto& law = laws[task.cell];
      if (!law) continue;
      try {
        auto o = simulate(s, *law, task.run);
        results[k].row = MetricsRow{std::string(to_string(law->kind)), law->lambda, sigma_label(law->sigma), s.seed,
                                    task.run, std::move(o.metrics)};
      } catch (const SafetyCapExceeded& e) {
        results[k].error = e.what();
        results[k].safety_cap = true;
      } catch (const std::exception& e) {
        results[k].error = e.what();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(plan.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < jobs; ++w) pool.emplace_back(worker);
    worker();
  }

  // Aggregate in plan order so the sums never depend on scheduling.
  for (std::size_t k = 0; k < plan.size(); ++k) {
    auto& cell = out.cells[plan[k].cell];
    auto& res = results[k];
    if (!res.row) {
      if (cell.error.empty()) cell.error = res.error;
      cell.safety_cap = cell.safety_cap || res.safety_cap;
      continue;
    }
    const auto& m = res.row->metrics;
    ++cell.ok_runs;
    cell.mean_n_events += static_cast<double>(m.events.total);
    cell.mean_h2sq += m.h2sq.value;
    if (m.t_con) {
      ++cell.t_con_reached;
      cell.mean_t_con += *m.t_con;
      cell.mean_energy += m.energy.value_or(0);
    }
    out.rows.push_back(std::move(*res.row));
  }
  for (auto& cell : out.cells) {
    if (cell.ok_runs) {
      cell.mean_n_events /= cell.ok_runs;
      cell.mean_h2sq /= cell.ok_runs;
    }
    if (cell.t_con_reached) {
      cell.mean_t_con /= cell.t_con_reached;
      cell.mean_energy /= cell.t_con_reached;
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "law,lambda,sigma,runs,ok_runs,t_con_reached,mean_n_events,mean_t_con,mean_energy,mean_h2sq,error\r\n";
  for (const auto& c : r.cells) {
    auto mean = [&](double v, int count) { return count ? format_number(v) : std::string(); };
    os << quote_field(c.law) << ',' << format_number(c.lambda) << ',' << format_number(c.sigma) << ',' << c.runs << ','
       << c.ok_runs << ',' << c.t_con_reached << ',' << mean(c.mean_n_events, c.ok_runs) << ','
       << mean(c.mean_t_con, c.t_con_reached) << ',' << mean(c.mean_energy, c.t_con_reached) << ','
       << mean(c.mean_h2sq, c.ok_runs) << ',' << quote_field(c.error) << "\r\n";
  }
}

SweepResult sweep_command(const Scenario& s, const fs::path& outdir, unsigned jobs, std::ostream& log) {
  auto r = sweep(s, jobs);
  fs::create_directories(outdir);
  {
    auto os = open_csv(outdir / "sweep.csv");
    write_sweep_csv(os, r);
  }
  {
    auto os = open_csv(outdir / "metrics.csv");
    write_metrics_header(os);
    for (const auto& row : r.rows) write_metrics_row(os, row);
  }
  for (const auto& c : r.cells) {
    log << c.law << " lambda=" << format_number(c.lambda) << " sigma=" << format_number(c.sigma) << ": ";
    if (c.ok_runs)
      log << "N_e=" << format_number(c.mean_n_events)
          << " T_con=" << (c.t_con_reached ? format_number(c.mean_t_con) : "none")
          << " E=" << (c.t_con_reached ? format_number(c.mean_energy) : "none")
          << " C=" << format_number(c.mean_h2sq) << " (" << c.ok_runs << "/" << c.runs << " runs)";
    if (!c.error.empty()) log << (c.ok_runs ? " " : "") << "error: " << c.error;
    log << '\n';
  }
  return r;
}

}  // namespace etcon::app
