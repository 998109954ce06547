#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "etcon/engine.hpp"

namespace etcon {

// Trace-level invariants, used by the test suites and the acceptance run.

/// max_t |mean(x(t)) - mean(x0)| over all segment ends.
template <typename Scalar>
Scalar conservation_error(const Trace<Scalar>& trace) {
  const Scalar m0 = trace.x0.mean();
  Scalar worst = 0;
  for (const auto& seg : trace.segments) {
    worst = std::max(worst, std::abs(seg.x.mean() - m0));
    worst = std::max(worst, std::abs(seg.state_at(seg.t_end).mean() - m0));
  }
  return worst;
}

/**
 * Largest f_i = e_i^2 - theta_i over segment ends and, when interior, the
 * vertex of each agent's quadratic. Positive values mean a missed trigger.
 */
template <typename Scalar>
Scalar max_trigger_excess(const Trace<Scalar>& trace) {
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (const auto& seg : trace.segments) {
    for (Index i = 0; i < trace.size(); ++i) {
      const Scalar theta = trigger_threshold(trace.law, trace.graph, i, seg.xhat);
      const Scalar e0 = seg.xhat(i) - seg.x(i);
      auto f = [&](Scalar s) {
        const Scalar e = e0 - seg.u(i) * s;
        return e * e - theta;
      };
      worst = std::max({worst, f(0), f(seg.length())});
      if (seg.u(i) != Scalar(0)) {
        const Scalar vertex = e0 / seg.u(i);
        if (vertex > Scalar(0) && vertex < seg.length()) worst = std::max(worst, f(vertex));
      }
    }
  }
  return worst;
}

template <typename Scalar = double>
struct DwellStats {
  std::size_t threshold_pairs = 0;  ///< consecutive broadcasts whose second is threshold-caused
  std::size_t quiet_pairs = 0;      ///< ... of which no neighbour broadcast in between
  Scalar min_gap_over_tau = std::numeric_limits<Scalar>::infinity();        ///< all threshold pairs
  Scalar min_quiet_gap_over_tau = std::numeric_limits<Scalar>::infinity();  ///< quiet pairs only
  Scalar min_gap_minus_eps = std::numeric_limits<Scalar>::infinity();       ///< gap - eps_i / rate_i
  Scalar min_gap_minus_tau = std::numeric_limits<Scalar>::infinity();       ///< gap - tau_i / rate_i
  Scalar min_quiet_gap_minus_tau = std::numeric_limits<Scalar>::infinity();
  std::size_t unresolved_pairs = 0;  ///< skipped: disagreement already at rounding level
};

/**
 * Inter-event gaps of each agent against its dwell time tau_i / rate_i.
 *
 * A pair is quiet when no out-neighbour broadcast strictly between the two
 * broadcasts nor earlier within the second one's event record; only quiet
 * pairs are covered by the self-trigger dwell bound.
 *
 * Pairs opened while max_ij |x_i - x_j| <= resolution * (1 + max |x|) are
 * counted in unresolved_pairs only: there the errors are rounding noise.
 */
template <typename Scalar>
DwellStats<Scalar> dwell_stats(const Trace<Scalar>& trace, Scalar resolution = Scalar(1e-9)) {
  const Index n = trace.size();
  DwellStats<Scalar> st;
  std::vector<Scalar> tau(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    tau[static_cast<std::size_t>(i)] = dwell_time(trace.law, trace.graph, i) / trace.rate(i);

  std::vector<Scalar> last(static_cast<std::size_t>(n), -1);
  std::vector<bool> heard(static_cast<std::size_t>(n), false);
  std::vector<bool> resolved(static_cast<std::size_t>(n), true);
  for (const auto& ev : trace.events) {
    const Vector<Scalar> x = trace.state_at(ev.t);
    const bool above_floor = x.maxCoeff() - x.minCoeff() > resolution * (Scalar(1) + x.cwiseAbs().maxCoeff());
    std::vector<bool> sent_here(static_cast<std::size_t>(n), false);
    for (const auto& b : ev.broadcasts) {
      const auto i = static_cast<std::size_t>(b.agent);
      bool heard_now = heard[i];
      for (Index j : trace.graph.out_neighbors(b.agent))
        if (sent_here[static_cast<std::size_t>(j)]) heard_now = true;
      if (b.cause == BroadcastCause::threshold && last[i] >= Scalar(0) && !resolved[i]) {
        ++st.unresolved_pairs;
      } else if (b.cause == BroadcastCause::threshold && last[i] >= Scalar(0)) {
        const Scalar gap = ev.t - last[i];
        ++st.threshold_pairs;
        st.min_gap_over_tau = std::min(st.min_gap_over_tau, gap / tau[i]);
        st.min_gap_minus_tau = std::min(st.min_gap_minus_tau, gap - tau[i]);
        st.min_gap_minus_eps = std::min(st.min_gap_minus_eps, gap - trace.law.eps(b.agent) / trace.rate(b.agent));
        if (!heard_now) {
          ++st.quiet_pairs;
          st.min_quiet_gap_over_tau = std::min(st.min_quiet_gap_over_tau, gap / tau[i]);
          st.min_quiet_gap_minus_tau = std::min(st.min_quiet_gap_minus_tau, gap - tau[i]);
        }
      }
      last[i] = ev.t;
      resolved[i] = above_floor;
      heard[i] = false;
      sent_here[i] = true;
    }
    // Thresholds after this instant already include every broadcast made at it, so only
    // listeners that stayed silent here have news pending.
    for (const auto& b : ev.broadcasts)
      for (Index k : trace.graph.in_neighbors(b.agent))
        if (!sent_here[static_cast<std::size_t>(k)]) heard[static_cast<std::size_t>(k)] = true;
  }
  return st;
}

}  // namespace etcon
