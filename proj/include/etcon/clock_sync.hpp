#pragma once

#include <cmath>
#include <vector>

#include "etcon/engine.hpp"
#include "etcon/graph.hpp"
#include "etcon/triggers.hpp"

namespace etcon {

/**
 * Drift-only clock network: l_i(t) = gamma_i t, virtual clock
 * T_i = alpha_i l_i = y_i t with modified drift y_i = gamma_i alpha_i.
 */
template <typename Scalar = double>
struct ClockModel {
  Vector<Scalar> gamma;
  Vector<Scalar> alpha0;
};

template <typename Scalar>
ClockModel<Scalar> make_clock_model(Vector<Scalar> gamma, std::optional<Vector<Scalar>> alpha0 = std::nullopt) {
  ClockModel<Scalar> m{std::move(gamma), {}};
  m.alpha0 = alpha0 ? std::move(*alpha0) : Vector<Scalar>::Ones(m.gamma.size()).eval();
  if (m.alpha0.size() != m.gamma.size()) throw ConfigError("alpha0 and gamma differ in length");
  for (Index i = 0; i < m.gamma.size(); ++i)
    if (!(m.gamma(i) > Scalar(0))) throw ConfigError("clock drifts must be positive");
  return m;
}

template <typename Scalar = double>
struct ClockReading {
  Scalar local;
  Scalar virtual_time;
};

/// l_i = gamma_i t, T_i = gamma_i alpha t for the controlled drift alpha in force at t.
template <typename Scalar>
ClockReading<Scalar> clock_readout(const ClockModel<Scalar>& m, Index i, Scalar t, Scalar alpha) {
  const Scalar l = m.gamma(i) * t;
  return {l, alpha * l};
}

template <typename Scalar>
ClockReading<Scalar> clock_readout(const ClockModel<Scalar>& m, Index i, Scalar t) {
  return clock_readout(m, i, t, m.alpha0(i));
}

/**
 * gamma_j / gamma_i from the local times of both clocks at two instants m, n
 * (only local timestamps are needed).
 */
template <typename Scalar>
Scalar drift_ratio_estimate(Scalar li_m, Scalar li_n, Scalar lj_m, Scalar lj_n) {
  const Scalar den = li_m - li_n;
  if (den == Scalar(0)) throw ConfigError("drift ratio needs two distinct local timestamps");
  return (lj_m - lj_n) / den;
}

/// Engine inputs for the modified-drift dynamics dy_i/dt = -gamma_i sum_j w_ij (yhat_i - yhat_j).
template <typename Scalar = double>
struct ClockScenario {
  Vector<Scalar> y0;
  Vector<Scalar> rate;
  Matrix<Scalar> ratio;  ///< ratio(i, j) = gamma_j / gamma_i
  Scalar ybar0;          ///< mean(y(0))
  /// Consensus value implied by the conserved sum_i y_i / gamma_i.
  Scalar limit;
};

template <typename Scalar>
ClockScenario<Scalar> build_clock_scenario(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law,
                                           const ClockModel<Scalar>& m) {
  const Index n = g.size();
  if (m.gamma.size() != n) throw ConfigError("clock model does not match the network");
  if (law.sigma.size() != n) throw ConfigError("trigger law does not match the network");
  ClockScenario<Scalar> s;
  s.y0 = m.gamma.cwiseProduct(m.alpha0);
  s.rate = m.gamma;
  s.ratio.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s.ratio(i, j) = m.gamma(j) / m.gamma(i);
  s.ybar0 = s.y0.mean();
  s.limit = m.alpha0.sum() / m.gamma.cwiseInverse().sum();
  return s;
}

/**
 * Threshold an agent evaluates in its own coordinates: broadcast controlled
 * drifts alpha_hat and estimated ratios gamma_j / gamma_i. The error compared
 * against it is alpha_hat_i - alpha_i.
 */
template <typename Scalar, typename Derived>
Scalar alpha_threshold(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, const ClockScenario<Scalar>& cs,
                       Index i, const Eigen::MatrixBase<Derived>& alpha_hat) {
  Scalar sq = 0;
  Scalar sum = 0;
  for (Index j : g.out_neighbors(i)) {
    const Scalar diff = alpha_hat(i) - cs.ratio(i, j) * alpha_hat(j);
    sq += g.weight(i, j) * diff * diff;
    sum += g.weight(i, j) * diff;
  }
  const Scalar d = g.out_degree()(i);
  const Scalar first = sq / (Scalar(4) * d);
  const Scalar second = Scalar(2) * law.delta(i) * law.b(i) * law.c(i) / ((law.b(i) + law.c(i)) * d) * (sum * sum);
  Scalar phi = 0;
  switch (law.kind) {
    case LawKind::algorithm1: phi = first; break;
    case LawKind::algorithm2: phi = second; break;
    case LawKind::combined: phi = law.lambda * first + (Scalar(1) - law.lambda) * second; break;
  }
  return law.sigma(i) * phi;
}

template <typename Scalar = double>
struct ClockReport {
  Scalar y_spread_initial;
  Scalar y_spread_final;
  Scalar virtual_spread_final;  ///< max_ij |T_i - T_j| at the horizon
  Scalar ybar0;
  Scalar predicted_limit;
  Scalar final_mean;
};

template <typename Scalar = double>
struct ClockRun {
  ClockModel<Scalar> model;
  ClockScenario<Scalar> scenario;
  Trace<Scalar> trace;
  ClockReport<Scalar> report;
};

template <typename Derived>
typename Derived::Scalar spread(const Eigen::MatrixBase<Derived>& v) {
  return v.maxCoeff() - v.minCoeff();
}

/**
 * Runs the engine on the modified drifts. Windows in `law.eps` are read as
 * agent-local times, so the engine's division by rate_i = gamma_i turns them
 * into absolute time. Certificates use `limit` as the consensus target.
 */
template <typename Scalar>
ClockRun<Scalar> run_clock_sync(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law, const ClockModel<Scalar>& m,
                                Scalar horizon, const RunOptions& opts = {}) {
  auto cs = build_clock_scenario(g, law, m);
  auto trace = run_event_driven(g, law, cs.y0, horizon, cs.rate, opts);
  trace.target = cs.limit;
  const Vector<Scalar> y_end = trace.final_state();
  ClockReport<Scalar> rep{spread(cs.y0), spread(y_end), spread(y_end) * horizon, cs.ybar0, cs.limit, y_end.mean()};
  return ClockRun<Scalar>{m, std::move(cs), std::move(trace), rep};
}

/// Local and virtual clocks of every agent at absolute time t.
template <typename Scalar = double>
struct ClockSample {
  Scalar t;
  Vector<Scalar> local;
  Vector<Scalar> virtual_time;
  Vector<Scalar> y;
};

template <typename Scalar>
ClockSample<Scalar> sample_clocks(const ClockRun<Scalar>& run, Scalar t) {
  ClockSample<Scalar> s{t, run.model.gamma * t, {}, run.trace.state_at(t)};
  s.virtual_time = s.y * t;
  return s;
}

}  // namespace etcon
