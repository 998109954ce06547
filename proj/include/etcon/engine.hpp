#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etcon/graph.hpp"
#include "etcon/triggers.hpp"

namespace etcon {

enum class BroadcastCause { initial, threshold, forced };

inline std::string_view to_string(BroadcastCause c) {
  switch (c) {
    case BroadcastCause::initial: return "initial";
    case BroadcastCause::threshold: return "threshold";
    case BroadcastCause::forced: return "forced";
  }
  return "?";
}

struct Broadcast {
  Index agent;
  BroadcastCause cause;
};

/// All broadcasts at one instant, in the order they were decided.
template <typename Scalar = double>
struct EventRecord {
  Scalar t;
  std::vector<Broadcast> broadcasts;
};

/// x(t) = x + u (t - t_start) on [t_start, t_end]; xhat is frozen.
template <typename Scalar = double>
struct Segment {
  Scalar t_start;
  Scalar t_end;
  Vector<Scalar> x;
  Vector<Scalar> u;
  Vector<Scalar> xhat;

  Scalar length() const { return t_end - t_start; }
  Vector<Scalar> state_at(Scalar t) const { return x + u * (t - t_start); }
};

/**
 * Hybrid state between events.
 *
 * u_i = -rate_i * sum_j w_ij (xhat_i - xhat_j) holds at all times. rate is 1
 * for plain consensus; a per-agent rate also rescales the forced-rebroadcast
 * windows, which are given in agent-local time.
 */
template <typename Scalar = double>
struct SimState {
  Scalar t = 0;
  Vector<Scalar> x;
  Vector<Scalar> xhat;
  Vector<Scalar> u;
  Vector<Scalar> last_broadcast;
  Vector<Scalar> rate;
};

template <typename Scalar = double>
struct Trace {
  Digraph<Scalar> graph;
  TriggerLaw<Scalar> law;
  Vector<Scalar> rate;
  Vector<Scalar> x0;
  /// Point the states are expected to agree on; mean(x0) for plain consensus.
  Scalar target = 0;
  Scalar horizon = 0;
  std::vector<Segment<Scalar>> segments;
  std::vector<EventRecord<Scalar>> events;

  Index size() const { return graph.size(); }

  Vector<Scalar> final_state() const {
    return segments.empty() ? x0 : segments.back().state_at(segments.back().t_end);
  }

  Vector<Scalar> state_at(Scalar t) const {
    if (segments.empty()) return x0;
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](Scalar v, const Segment<Scalar>& s) { return v < s.t_start; });
    if (it != segments.begin()) --it;
    return it->state_at(std::min(t, it->t_end));
  }

  std::size_t broadcast_count() const {
    std::size_t n = 0;
    for (const auto& e : events) n += e.broadcasts.size();
    return n;
  }
};

struct RunOptions {
  std::size_t max_broadcasts = 1'000'000;
};

/// Tie tolerance (absolute time) for agents whose trigger roots coincide.
inline constexpr double kTieTolerance = 1e-12;

template <typename Scalar, typename Derived>
Vector<Scalar> control_input(const Digraph<Scalar>& g, const Eigen::MatrixBase<Derived>& xhat,
                             const Vector<Scalar>& rate) {
  const Index n = g.size();
  Vector<Scalar> u(n);
  for (Index i = 0; i < n; ++i) {
    Scalar s = 0;
    for (Index j : g.out_neighbors(i)) s += g.weight(i, j) * (xhat(i) - xhat(j));
    u(i) = -rate(i) * s;
  }
  return u;
}

template <typename Scalar, typename Derived>
Vector<Scalar> control_input(const Digraph<Scalar>& g, const Eigen::MatrixBase<Derived>& xhat) {
  return control_input(g, xhat, Vector<Scalar>::Ones(g.size()).eval());
}

template <typename Scalar = double>
struct NextEvent {
  Scalar t;
  std::vector<Index> initiators;
};

/**
 * Earliest instant after state.t at which some agent's trigger fires.
 *
 * With xhat frozen, e_i(t) = e_i(t0) - u_i (t - t0) and f_i is a quadratic in
 * t, so every root is closed-form. Agents whose roots lie within kTieTolerance
 * of the earliest one are all initiators. Empty when no agent ever fires.
 */
template <typename Scalar>
std::optional<NextEvent<Scalar>> next_event_time(const SimState<Scalar>& state, const TriggerLaw<Scalar>& law,
                                                 const Digraph<Scalar>& g) {
  const Index n = g.size();
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<Scalar> wait(static_cast<std::size_t>(n), inf);
  Scalar best = inf;
  for (Index k = 0; k < n; ++k) {
    const Scalar theta = trigger_threshold(law, g, k, state.xhat);
    const Scalar e0 = state.xhat(k) - state.x(k);
    const Scalar v = state.u(k);
    Scalar s = inf;
    if (!(theta > Scalar(0))) {
      // theta == 0 forces u_k == 0, so e_k is frozen.
      if (e0 != Scalar(0)) s = 0;
    } else if (e0 * e0 >= theta) {
      s = 0;
    } else if (v != Scalar(0)) {
      const Scalar r = std::sqrt(theta);
      s = (r + (v > Scalar(0) ? e0 : -e0)) / std::abs(v);
      if (!std::isfinite(static_cast<double>(s))) s = inf;
    }
    wait[static_cast<std::size_t>(k)] = s;
    best = std::min(best, s);
  }
  if (best == inf) return std::nullopt;
  NextEvent<Scalar> ev{state.t + best, {}};
  for (Index k = 0; k < n; ++k)
    if (wait[static_cast<std::size_t>(k)] <= best + Scalar(kTieTolerance)) ev.initiators.push_back(k);
  return ev;
}

template <typename Scalar = double>
struct CascadeOutcome {
  std::vector<Broadcast> broadcasts;
  int iterations = 0;
};

/**
 * Broadcast from `initiators` at state.t plus every agent forced to follow.
 *
 * An agent joins when some out-neighbour in the set broadcasts and its own last
 * broadcast lies in the open window (t - eps_i / rate_i, t). The set grows
 * monotonically, so this settles within n rounds. Members then resample
 * xhat_i = x_i and the control is refreshed.
 */
template <typename Scalar>
CascadeOutcome<Scalar> apply_broadcast_cascade(SimState<Scalar>& state, std::span<const Index> initiators,
                                               BroadcastCause cause, const TriggerLaw<Scalar>& law,
                                               const Digraph<Scalar>& g) {
  const Index n = g.size();
  std::vector<bool> member(static_cast<std::size_t>(n), false);
  CascadeOutcome<Scalar> out;
  for (Index i : initiators) {
    if (!member[static_cast<std::size_t>(i)]) {
      member[static_cast<std::size_t>(i)] = true;
      out.broadcasts.push_back({i, cause});
    }
  }
  bool grew = true;
  while (grew) {
    grew = false;
    ++out.iterations;
    for (Index k = 0; k < n; ++k) {
      if (member[static_cast<std::size_t>(k)]) continue;
      const Scalar since = state.t - state.last_broadcast(k);
      if (!(since > Scalar(0) && since < law.eps(k) / state.rate(k))) continue;
      const auto& nbrs = g.out_neighbors(k);
      const bool hears = std::any_of(nbrs.begin(), nbrs.end(),
                                     [&](Index j) { return member[static_cast<std::size_t>(j)]; });
      if (hears) {
        member[static_cast<std::size_t>(k)] = true;
        out.broadcasts.push_back({k, BroadcastCause::forced});
        grew = true;
      }
    }
  }
  for (const auto& b : out.broadcasts) {
    state.xhat(b.agent) = state.x(b.agent);
    state.last_broadcast(b.agent) = state.t;
  }
  state.u = control_input(g, state.xhat, state.rate);
  return out;
}

/**
 * Processes every broadcast at state.t: the initiators' cascade, then any
 * agent whose trigger now fires because a neighbour's broadcast lowered its
 * threshold, repeated until nothing else fires at this instant.
 */
template <typename Scalar>
EventRecord<Scalar> broadcast_event(SimState<Scalar>& state, std::span<const Index> initiators,
                                    BroadcastCause cause, const TriggerLaw<Scalar>& law,
                                    const Digraph<Scalar>& g) {
  EventRecord<Scalar> rec{state.t, {}};
  std::vector<Index> next(initiators.begin(), initiators.end());
  BroadcastCause why = cause;
  while (!next.empty()) {
    auto step = apply_broadcast_cascade(state, std::span<const Index>(next), why, law, g);
    rec.broadcasts.insert(rec.broadcasts.end(), step.broadcasts.begin(), step.broadcasts.end());
    next.clear();
    for (Index k = 0; k < g.size(); ++k)
      if (trigger_fired(law, g, k, state.x(k), state.xhat)) next.push_back(k);
    why = BroadcastCause::threshold;
  }
  return rec;
}

namespace detail {

template <typename Scalar>
void check_run_inputs(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law, const Vector<Scalar>& x0,
                      Scalar horizon, const Vector<Scalar>& rate) {
  const Index n = g.size();
  if (x0.size() != n) throw ConfigError("initial state has wrong length");
  if (rate.size() != n) throw ConfigError("rate vector has wrong length");
  if (law.sigma.size() != n || law.eps.size() != n) throw ConfigError("trigger law does not match the network");
  if (!(horizon > Scalar(0))) throw ConfigError("horizon must be positive");
  for (Index i = 0; i < n; ++i)
    if (!(rate(i) > Scalar(0))) throw ConfigError("rates must be positive");
  if (!is_weight_balanced(g, Scalar(1e-10)) || !is_strongly_connected(g))
    throw ConfigError("network must be weight-balanced and strongly connected");
}

template <typename Scalar>
SimState<Scalar> initial_state(const Digraph<Scalar>& g, const Vector<Scalar>& x0, const Vector<Scalar>& rate) {
  SimState<Scalar> s;
  s.t = 0;
  s.x = x0;
  s.xhat = x0;
  s.rate = rate;
  s.last_broadcast = Vector<Scalar>::Zero(g.size());
  s.u = control_input(g, s.xhat, rate);
  return s;
}

template <typename Scalar>
EventRecord<Scalar> initial_record(Index n) {
  EventRecord<Scalar> rec{Scalar(0), {}};
  for (Index i = 0; i < n; ++i) rec.broadcasts.push_back({i, BroadcastCause::initial});
  return rec;
}

}  // namespace detail

/**
 * Exact simulation on [0, horizon]. Every agent broadcasts at t = 0; after
 * that the run alternates next_event_time, a linear advance and
 * broadcast_event. Identical inputs give identical traces.
 *
 * Throws SafetyCapExceeded when the broadcast budget is exhausted.
 */
template <typename Scalar>
Trace<Scalar> run_event_driven(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law, const Vector<Scalar>& x0,
                               Scalar horizon, const Vector<Scalar>& rate, const RunOptions& opts = {}) {
  detail::check_run_inputs(g, law, x0, horizon, rate);
  Trace<Scalar> trace{g, law, rate, x0, x0.mean(), horizon, {}, {}};
  SimState<Scalar> state = detail::initial_state(g, x0, rate);
  trace.events.push_back(detail::initial_record<Scalar>(g.size()));
  std::size_t broadcasts = static_cast<std::size_t>(g.size());

  for (;;) {
    auto next = next_event_time(state, law, g);
    const Scalar t_end = (next && next->t < horizon) ? next->t : horizon;
    if (t_end > state.t) {
      trace.segments.push_back({state.t, t_end, state.x, state.u, state.xhat});
      state.x = trace.segments.back().state_at(t_end);
      state.t = t_end;
    }
    if (!next || next->t > horizon) break;
    trace.events.push_back(
        broadcast_event(state, std::span<const Index>(next->initiators), BroadcastCause::threshold, law, g));
    broadcasts += trace.events.back().broadcasts.size();
    if (broadcasts > opts.max_broadcasts)
      throw SafetyCapExceeded("broadcast budget of " + std::to_string(opts.max_broadcasts) +
                              " exceeded at t = " + std::to_string(static_cast<double>(state.t)));
  }
  return trace;
}

template <typename Scalar>
Trace<Scalar> run_event_driven(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law, const Vector<Scalar>& x0,
                               Scalar horizon) {
  return run_event_driven(g, law, x0, horizon, Vector<Scalar>::Ones(g.size()).eval());
}

/**
 * Reference simulation that samples the triggers every dt instead of solving
 * for their roots. States are linear between broadcasts, so only the event
 * times carry the O(dt) error.
 */
template <typename Scalar>
Trace<Scalar> run_fixed_step_oracle(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law,
                                    const Vector<Scalar>& x0, Scalar horizon, Scalar dt, const Vector<Scalar>& rate,
                                    const RunOptions& opts = {}) {
  detail::check_run_inputs(g, law, x0, horizon, rate);
  if (!(dt > Scalar(0))) throw ConfigError("dt must be positive");
  Trace<Scalar> trace{g, law, rate, x0, x0.mean(), horizon, {}, {}};
  SimState<Scalar> state = detail::initial_state(g, x0, rate);
  trace.events.push_back(detail::initial_record<Scalar>(g.size()));
  std::size_t broadcasts = static_cast<std::size_t>(g.size());

  const auto steps = static_cast<long long>(std::floor(static_cast<double>(horizon / dt) + 1e-9));
  Scalar t_seg = 0;
  Vector<Scalar> x_seg = x0;
  std::vector<Index> fired;
  for (long long k = 1; k <= steps; ++k) {
    const Scalar t = static_cast<Scalar>(k) * dt;
    state.x = x_seg + state.u * (t - t_seg);
    fired.clear();
    for (Index i = 0; i < g.size(); ++i)
      if (trigger_fired(law, g, i, state.x(i), state.xhat)) fired.push_back(i);
    if (fired.empty()) continue;
    trace.segments.push_back({t_seg, t, x_seg, state.u, state.xhat});
    state.t = t;
    trace.events.push_back(broadcast_event(state, std::span<const Index>(fired), BroadcastCause::threshold, law, g));
    broadcasts += trace.events.back().broadcasts.size();
    if (broadcasts > opts.max_broadcasts) throw SafetyCapExceeded("oracle broadcast budget exceeded");
    t_seg = t;
    x_seg = state.x;
  }
  if (horizon > t_seg) trace.segments.push_back({t_seg, horizon, x_seg, state.u, state.xhat});
  return trace;
}

template <typename Scalar>
Trace<Scalar> run_fixed_step_oracle(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law,
                                    const Vector<Scalar>& x0, Scalar horizon, Scalar dt) {
  return run_fixed_step_oracle(g, law, x0, horizon, dt, Vector<Scalar>::Ones(g.size()).eval());
}

}  // namespace etcon
