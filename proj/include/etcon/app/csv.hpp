#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "etcon/clock_sync.hpp"
#include "etcon/engine.hpp"
#include "etcon/metrics.hpp"

namespace etcon::app {

/// 12 significant digits; empty for an absent value.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

/// RFC 4180 field: quoted when it holds a comma, quote or line break.
std::string quote_field(std::string_view s);

void write_events_csv(std::ostream& os, const Trace<double>& trace);
void write_segments_csv(std::ostream& os, const Trace<double>& trace);

/// (t, V1, V2, Vlambda) at t = 0 and every segment end.
void write_lyapunov_csv(std::ostream& os, const Trace<double>& trace, double lambda);

/// (t, l_1..l_n, T_1..T_n, y_1..y_n) at t = 0 and every segment end.
void write_clocks_csv(std::ostream& os, const ClockRun<double>& run);

struct MetricsRow {
  std::string law;
  double lambda;
  std::string sigma;
  std::uint64_t seed;
  int run;
  MetricsReport<double> metrics;
};

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricsRow& row);

/// "0.5" when every agent shares sigma, else the values joined by ';'.
std::string sigma_label(const Vector<double>& sigma);

}  // namespace etcon::app
