#pragma once

#include <cmath>
#include <vector>

#include "etcon/engine.hpp"
#include "etcon/graph.hpp"
#include "etcon/triggers.hpp"

namespace etcon {

/// 1/2 |x - target 1|^2
template <typename Derived>
typename Derived::Scalar lyapunov_v1(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar target) {
  using Scalar = typename Derived::Scalar;
  return Scalar(0.5) * (x.array() - target).matrix().squaredNorm();
}

/// 1/2 x^T L^T x
template <typename Scalar, typename Derived>
Scalar lyapunov_v2(const Digraph<Scalar>& g, const Eigen::MatrixBase<Derived>& x) {
  return Scalar(0.5) * x.dot(g.laplacian() * x);
}

/// V_lambda = lambda V1 + (1 - lambda) V2.
template <typename Scalar, typename Derived>
Scalar lyapunov_value(Scalar lambda, const Digraph<Scalar>& g, const Eigen::MatrixBase<Derived>& x, Scalar target) {
  return lambda * lyapunov_v1(x, target) + (Scalar(1) - lambda) * lyapunov_v2(g, x);
}

/// c0 + c1 s + c2 s^2, s measured from the segment start.
template <typename Scalar = double>
struct Quadratic {
  Scalar c0 = 0;
  Scalar c1 = 0;
  Scalar c2 = 0;

  Scalar operator()(Scalar s) const { return c0 + s * (c1 + s * c2); }
  Scalar slope(Scalar s) const { return c1 + Scalar(2) * c2 * s; }
};

/// V_lambda along one segment, exact since x is affine in time there.
template <typename Scalar>
Quadratic<Scalar> segment_lyapunov(Scalar lambda, const Digraph<Scalar>& g, const Segment<Scalar>& seg, Scalar target) {
  const Matrix<Scalar> ls = symmetric_laplacian(g);
  const Vector<Scalar> y = (seg.x.array() - target).matrix();
  const Vector<Scalar> lx = ls * seg.x;
  const Vector<Scalar> lu = ls * seg.u;
  const Scalar mu = Scalar(1) - lambda;
  Quadratic<Scalar> q;
  q.c0 = lambda * Scalar(0.5) * y.squaredNorm() + mu * Scalar(0.5) * seg.x.dot(lx);
  q.c1 = lambda * y.dot(seg.u) + mu * seg.x.dot(lu);
  q.c2 = lambda * Scalar(0.5) * seg.u.squaredNorm() + mu * Scalar(0.5) * seg.u.dot(lu);
  return q;
}

template <typename Scalar = double>
struct BoundCheck {
  Scalar lhs;        ///< x^T L^T xdot
  Scalar rhs_bound;  ///< -sum_i rate_i [delta_i nu_i^2 - (d_i/(2 b_i) + d_i/(2 c_i)) e_i^2]
  bool ok;
  Scalar v2_rate;    ///< exact dV2/dt = x^T (L + L^T)/2 xdot
};

/**
 * Pointwise check of the V2 derivative bound.
 *
 * nu_i = sum_j w_ij (xhat_i - xhat_j), so with unit rates nu_i^2 = u_i^2 and
 * this is the plain-consensus bound; with rate_i = gamma_i it is the
 * clock-synchronisation variant.
 */
template <typename Scalar>
BoundCheck<Scalar> v2dot_bound_check(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law,
                                     const SimState<Scalar>& state, Scalar tol = Scalar(1e-9)) {
  const Index n = g.size();
  const Vector<Scalar> lx = g.laplacian() * state.x;
  BoundCheck<Scalar> r{};
  r.lhs = lx.dot(state.u);
  Scalar sum = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar nu = -state.u(i) / state.rate(i);
    const Scalar e = state.xhat(i) - state.x(i);
    const Scalar d = g.out_degree()(i);
    sum += state.rate(i) * (law.delta(i) * nu * nu - (d / (Scalar(2) * law.b(i)) + d / (Scalar(2) * law.c(i))) * e * e);
  }
  r.rhs_bound = -sum;
  r.ok = r.lhs <= r.rhs_bound + tol;
  r.v2_rate = state.x.dot(symmetric_laplacian(g) * state.u);
  return r;
}

/**
 * Exponential rate constant A (< 0) with V2(t) <= V2(0) exp(A t), for the
 * squared-sum law (lambda = 0):
 *
 *   A = (s_max - 1)(b_min + c_min) delta_max lambda2 d_min
 *       / ((b_min + c_min) d_min + 2 |L| s_max delta_max b_max c_max lambdaN)
 */
template <typename Scalar>
Scalar exp_rate(const Digraph<Scalar>& g, const TriggerLaw<Scalar>& law) {
  if (law.lambda != Scalar(0)) throw NotApplicable("the exponential rate constant is defined for lambda = 0 only");
  const auto spec = laplacian_spectrum(g);
  const Scalar s_max = law.sigma.maxCoeff();
  const Scalar d_min = g.out_degree().minCoeff();
  const Scalar bc_min = law.b.minCoeff() + law.c.minCoeff();
  const Scalar delta_max = law.delta.maxCoeff();
  const Scalar num = (s_max - Scalar(1)) * bc_min * delta_max * spec.lambda2 * d_min;
  const Scalar den = bc_min * d_min + Scalar(2) * spec.l_norm * s_max * delta_max * law.b.maxCoeff() *
                                          law.c.maxCoeff() * spec.lambdaN;
  return num / den;
}

template <typename Scalar = double>
struct MonotonicityReport {
  bool pass = true;
  Scalar max_increase = 0;  ///< largest rise between consecutive samples
  Scalar max_slope = 0;     ///< largest dV/dt over all segments (clamped at 0)
  std::size_t samples = 0;
};

/**
 * Samples V_lambda at every segment end and 10 interior points per segment and
 * checks it never rises by more than tol. The slope is exact per segment.
 */
template <typename Scalar>
MonotonicityReport<Scalar> monotonicity_report(const Trace<Scalar>& trace, Scalar lambda, Scalar tol = Scalar(1e-9)) {
  MonotonicityReport<Scalar> rep;
  constexpr int kInterior = 10;
  Scalar prev = lyapunov_value(lambda, trace.graph, trace.x0, trace.target);
  rep.samples = 1;
  for (const auto& seg : trace.segments) {
    const auto q = segment_lyapunov(lambda, trace.graph, seg, trace.target);
    rep.max_slope = std::max({rep.max_slope, q.slope(0), q.slope(seg.length())});
    for (int k = 0; k <= kInterior + 1; ++k) {
      const Scalar s = seg.length() * Scalar(k) / Scalar(kInterior + 1);
      const Scalar v = lyapunov_value(lambda, trace.graph, (seg.x + seg.u * s).eval(), trace.target);
      rep.max_increase = std::max(rep.max_increase, v - prev);
      prev = v;
      ++rep.samples;
    }
  }
  rep.pass = rep.max_increase <= tol;
  return rep;
}

/// Least-squares slope of log V_lambda over the segment start times.
template <typename Scalar>
Scalar fit_log_slope(const Trace<Scalar>& trace, Scalar lambda) {
  Scalar st = 0, sv = 0, stt = 0, stv = 0;
  std::size_t m = 0;
  auto add = [&](Scalar t, const Vector<Scalar>& x) {
    const Scalar v = lyapunov_value(lambda, trace.graph, x, trace.target);
    if (!(v > Scalar(0))) return;
    const Scalar lv = std::log(v);
    st += t;
    sv += lv;
    stt += t * t;
    stv += t * lv;
    ++m;
  };
  for (const auto& seg : trace.segments) add(seg.t_start, seg.x);
  if (!trace.segments.empty()) add(trace.segments.back().t_end, trace.final_state());
  if (m < 2) return 0;
  const Scalar mm = static_cast<Scalar>(m);
  const Scalar den = mm * stt - st * st;
  return den > Scalar(0) ? (mm * stv - st * sv) / den : Scalar(0);
}

}  // namespace etcon
