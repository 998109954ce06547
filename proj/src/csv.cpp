#include "etcon/app/csv.hpp"

#include <cstdio>

#include "etcon/lyapunov.hpp"

namespace etcon::app {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string quote_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

namespace {

void header_block(std::ostream& os, const char* prefix, Index n) {
  for (Index i = 1; i <= n; ++i) os << ',' << prefix << i;
}

void values(std::ostream& os, const Vector<double>& v) {
  for (Index i = 0; i < v.size(); ++i) os << ',' << format_number(v(i));
}

}  // namespace

void write_events_csv(std::ostream& os, const Trace<double>& trace) {
  os << "t,agent,cause\r\n";
  for (const auto& ev : trace.events)
    for (const auto& b : ev.broadcasts)
      os << format_number(ev.t) << ',' << (b.agent + 1) << ',' << to_string(b.cause) << "\r\n";
}

void write_segments_csv(std::ostream& os, const Trace<double>& trace) {
  os << "t_start,t_end";
  header_block(os, "x_", trace.size());
  header_block(os, "u_", trace.size());
  os << "\r\n";
  for (const auto& seg : trace.segments) {
    os << format_number(seg.t_start) << ',' << format_number(seg.t_end);
    values(os, seg.x);
    values(os, seg.u);
    os << "\r\n";
  }
}

void write_lyapunov_csv(std::ostream& os, const Trace<double>& trace, double lambda) {
  os << "t,V1,V2,Vlambda\r\n";
  auto row = [&](double t, const Vector<double>& x) {
    os << format_number(t) << ',' << format_number(lyapunov_v1(x, trace.target)) << ','
       << format_number(lyapunov_v2(trace.graph, x)) << ','
       << format_number(lyapunov_value(lambda, trace.graph, x, trace.target)) << "\r\n";
  };
  row(0, trace.x0);
  for (const auto& seg : trace.segments) row(seg.t_end, seg.state_at(seg.t_end));
}

void write_clocks_csv(std::ostream& os, const ClockRun<double>& run) {
  const Index n = run.trace.size();
  os << 't';
  header_block(os, "l_", n);
  header_block(os, "T_", n);
  header_block(os, "y_", n);
  os << "\r\n";
  auto row = [&](double t) {
    const auto s = sample_clocks(run, t);
    os << format_number(t);
    values(os, s.local);
    values(os, s.virtual_time);
    values(os, s.y);
    os << "\r\n";
  };
  row(0);
  for (const auto& seg : run.trace.segments) row(seg.t_end);
}

void write_metrics_header(std::ostream& os) {
  os << "law,lambda,sigma,seed,run,n_events,t_con,energy,h2sq,h2sq_tail\r\n";
}

void write_metrics_row(std::ostream& os, const MetricsRow& r) {
  os << quote_field(r.law) << ',' << format_number(r.lambda) << ',' << quote_field(r.sigma) << ',' << r.seed << ','
     << r.run << ',' << r.metrics.events.total << ',' << format_number(r.metrics.t_con) << ','
     << format_number(r.metrics.energy) << ',' << format_number(r.metrics.h2sq.value) << ','
     << format_number(r.metrics.h2sq.tail_estimate) << "\r\n";
}

std::string sigma_label(const Vector<double>& sigma) {
  if (sigma.size() > 0 && (sigma.array() == sigma(0)).all()) return format_number(sigma(0));
  std::string out;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (i) out += ';';
    out += format_number(sigma(i));
  }
  return out;
}

}  // namespace etcon::app
