#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "etcon/engine.hpp"
#include "etcon/lyapunov.hpp"

namespace etcon {

struct EventCounts {
  std::vector<std::size_t> per_agent;
  std::size_t total = 0;
  std::size_t initial = 0;
};

/// Broadcasts per agent, initial ones included.
template <typename Scalar>
EventCounts count_events(const Trace<Scalar>& trace) {
  EventCounts c;
  c.per_agent.assign(static_cast<std::size_t>(trace.size()), 0);
  for (const auto& ev : trace.events) {
    for (const auto& b : ev.broadcasts) {
      ++c.per_agent[static_cast<std::size_t>(b.agent)];
      ++c.total;
      if (b.cause == BroadcastCause::initial) ++c.initial;
    }
  }
  return c;
}

namespace detail {

/// Smallest s in [0, len] with q(s) <= 0, given q(0) > 0.
template <typename Scalar>
std::optional<Scalar> first_nonpositive(Scalar c0, Scalar c1, Scalar c2, Scalar len) {
  std::optional<Scalar> best;
  auto consider = [&](Scalar r) {
    if (std::isfinite(static_cast<double>(r)) && r >= Scalar(0) && r <= len && (!best || r < *best)) best = r;
  };
  if (c2 == Scalar(0)) {
    if (c1 < Scalar(0)) consider(-c0 / c1);
    return best;
  }
  const Scalar disc = c1 * c1 - Scalar(4) * c2 * c0;
  if (disc < Scalar(0)) return best;
  const Scalar q = Scalar(-0.5) * (c1 + std::copysign(std::sqrt(disc), c1));
  consider(q / c2);
  if (q != Scalar(0)) consider(c0 / q);
  return best;
}

}  // namespace detail

/**
 * Earliest t with V_lambda(x(t)) <= fraction * V_lambda(x(0)), solved exactly
 * on the per-segment quadratic. Empty when the trace never gets there.
 */
template <typename Scalar>
std::optional<Scalar> convergence_time(const Trace<Scalar>& trace, Scalar lambda, Scalar fraction = Scalar(0.01)) {
  const Scalar v0 = lyapunov_value(lambda, trace.graph, trace.x0, trace.target);
  // A start already at consensus to rounding has converged at once.
  const auto n = static_cast<Scalar>(trace.size());
  const Scalar l_inf = trace.graph.laplacian().cwiseAbs().rowwise().sum().maxCoeff();
  // V is a quadratic form in x, so its rounding error is about |x| times that of L x.
  const Scalar x_max = trace.x0.cwiseAbs().maxCoeff();
  const Scalar noise = n * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + l_inf) * x_max;
  if (!(v0 > n * noise * x_max)) return Scalar(0);
  const Scalar goal = fraction * v0;
  for (const auto& seg : trace.segments) {
    const auto q = segment_lyapunov(lambda, trace.graph, seg, trace.target);
    if (q.c0 <= goal) return seg.t_start;
    if (auto s = detail::first_nonpositive(q.c0 - goal, q.c1, q.c2, seg.length())) return seg.t_start + *s;
  }
  return std::nullopt;
}

/**
 * Radio power model P = sum_i sum_{j != i} eta 10^(0.1 p + zeta |a_i - a_j|)
 * in mW, with all constants 1 by default.
 */
template <typename Scalar = double>
struct PowerModel {
  Scalar eta = 1;
  Scalar zeta = 1;
  Scalar p_dbm = 1;

  template <typename Derived>
  Scalar power(const Eigen::MatrixBase<Derived>& a) const {
    Scalar p = 0;
    for (Index i = 0; i < a.size(); ++i)
      for (Index j = 0; j < a.size(); ++j)
        if (i != j) p += eta * std::pow(Scalar(10), Scalar(0.1) * p_dbm + zeta * std::abs(a(i) - a(j)));
    return p;
  }
};

namespace detail {

/// Integral over [0, len] of 10^(c + |p + q s|).
template <typename Scalar>
Scalar integrate_pow10_abs_linear(Scalar c, Scalar p, Scalar q, Scalar len) {
  const Scalar ln10 = std::numbers::ln10_v<Scalar>;
  auto piece = [&](Scalar a, Scalar b) -> Scalar {
    if (!(b > a)) return 0;
    const Scalar mid = p + q * (a + b) / Scalar(2);
    const Scalar sgn = mid < Scalar(0) ? Scalar(-1) : Scalar(1);
    const Scalar k = sgn * q;
    const Scalar start = std::pow(Scalar(10), c + sgn * (p + q * a));
    if (k == Scalar(0)) return start * (b - a);
    return start * std::expm1(k * ln10 * (b - a)) / (k * ln10);
  };
  if (q != Scalar(0)) {
    const Scalar s0 = -p / q;
    if (s0 > Scalar(0) && s0 < len) return piece(0, s0) + piece(s0, len);
  }
  return piece(0, len);
}

}  // namespace detail

/**
 * Communication energy: the time integral of the power over [0, t_con], in
 * mW s. `alpha_scale` maps the tracked state to the quantity the radios
 * compare (a_i = x_i / alpha_scale_i; all ones for plain consensus, the drifts
 * gamma for clock synchronisation).
 */
template <typename Scalar>
Scalar energy(const Trace<Scalar>& trace, std::optional<Scalar> t_con, const Vector<Scalar>& alpha_scale,
              const PowerModel<Scalar>& pm = {}) {
  if (!t_con) throw NotApplicable("energy needs a convergence time");
  const Index n = trace.size();
  Scalar total = 0;
  if (*t_con == Scalar(0)) return 0;
  for (const auto& seg : trace.segments) {
    if (seg.t_start >= *t_con) break;
    const Scalar len = std::min(seg.t_end, *t_con) - seg.t_start;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const Scalar p = pm.zeta * (seg.x(i) / alpha_scale(i) - seg.x(j) / alpha_scale(j));
        const Scalar q = pm.zeta * (seg.u(i) / alpha_scale(i) - seg.u(j) / alpha_scale(j));
        total += pm.eta * detail::integrate_pow10_abs_linear(Scalar(0.1) * pm.p_dbm, p, q, len);
      }
    }
  }
  // Past the horizon the state is frozen at its final value.
  const Scalar end = trace.segments.empty() ? Scalar(0) : trace.segments.back().t_end;
  if (*t_con > end) {
    const Vector<Scalar> a = trace.final_state().cwiseQuotient(alpha_scale);
    total += pm.power(a) * (*t_con - end);
  }
  return total;
}

template <typename Scalar>
Scalar energy(const Trace<Scalar>& trace, std::optional<Scalar> t_con) {
  return energy(trace, t_con, Vector<Scalar>::Ones(trace.size()).eval());
}

template <typename Scalar = double>
struct H2Result {
  Scalar value;          ///< integral of |x(t) - target|^2 over [0, horizon]
  Scalar tail_estimate;  ///< extrapolated integral beyond the horizon
};

/// Squared H2 norm of the disagreement, integrated exactly per segment.
template <typename Scalar>
H2Result<Scalar> h2_norm_sq(const Trace<Scalar>& trace) {
  H2Result<Scalar> r{0, 0};
  for (const auto& seg : trace.segments) {
    const Vector<Scalar> y = (seg.x.array() - trace.target).matrix();
    const Scalar l = seg.length();
    r.value += y.squaredNorm() * l + y.dot(seg.u) * l * l + seg.u.squaredNorm() * l * l * l / Scalar(3);
  }
  if (trace.segments.empty()) return r;

  // Tail: integrand at the horizon over its decay rate, fitted on the second half.
  const Scalar horizon = trace.segments.back().t_end;
  auto integrand = [&](const Vector<Scalar>& x) { return (x.array() - trace.target).matrix().squaredNorm(); };
  const Scalar g_end = integrand(trace.final_state());
  if (!(g_end > Scalar(0))) return r;
  const Scalar g_mid = integrand(trace.state_at(horizon / Scalar(2)));
  if (g_mid > g_end) {
    const Scalar k = std::log(g_mid / g_end) / (horizon / Scalar(2));
    r.tail_estimate = g_end / k;
  } else {
    r.tail_estimate = std::numeric_limits<Scalar>::infinity();
  }
  return r;
}

template <typename Scalar = double>
struct MetricsReport {
  EventCounts events;
  std::optional<Scalar> t_con;
  std::optional<Scalar> energy;
  H2Result<Scalar> h2sq;
};

template <typename Scalar>
MetricsReport<Scalar> compute_metrics(const Trace<Scalar>& trace, Scalar lambda, const Vector<Scalar>& alpha_scale,
                                      const PowerModel<Scalar>& pm = {}) {
  MetricsReport<Scalar> m;
  m.events = count_events(trace);
  m.t_con = convergence_time(trace, lambda);
  if (m.t_con) m.energy = energy(trace, m.t_con, alpha_scale, pm);
  m.h2sq = h2_norm_sq(trace);
  return m;
}

}  // namespace etcon
