#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "catch_amalgamated.hpp"

#include "etcon/clock_sync.hpp"
#include "etcon/metrics.hpp"
#include "support.hpp"

using namespace etcon;
using etcon::testing::net;
using etcon::testing::random_state;
using etcon::testing::standard_law;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Trace<double> two_agent_trace(Vector<double> x, Vector<double> u, double len) {
  Matrix<double> w(2, 2);
  w << 0, 1, 1, 0;
  const auto g = build_digraph(w);
  TriggerLaw<double> law;
  law.kind = LawKind::algorithm1;
  law.lambda = 1;
  law.sigma = law.b = law.c = law.delta = law.eps = Vector<double>::Constant(2, 0.5);
  Trace<double> tr{g, law, Vector<double>::Ones(2), x, 0.0, len, {}, {}};
  tr.segments.push_back({0.0, len, x, u, x});
  tr.events.push_back({0.0, {{0, BroadcastCause::initial}, {1, BroadcastCause::initial}}});
  return tr;
}

/// Adaptive Gauss-Kronrod on every segment piece of [0, t_end].
double energy_oracle(const Trace<double>& tr, double t_end, const Vector<double>& scale) {
  const PowerModel<double> pm;
  double total = 0;
  for (const auto& seg : tr.segments) {
    if (seg.t_start >= t_end) break;
    const double b = std::min(seg.t_end, t_end);
    auto p = [&](double t) { return pm.power(seg.state_at(t).cwiseQuotient(scale)); };
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(p, seg.t_start, b, 20, 1e-13);
  }
  return total;
}

}  // namespace

TEST_CASE("event counts") {
  const auto g = net(1);
  const auto flat = run_event_driven(g, standard_law(g, LawKind::algorithm1), Vector<double>::Ones(5).eval(), 5.0);
  const auto c = count_events(flat);
  CHECK(c.total == 5);
  CHECK(c.initial == 5);

  auto tr = flat;
  tr.events.push_back({0.35, {{0, BroadcastCause::threshold}}});
  const auto c2 = count_events(tr);
  CHECK(c2.total == 6);
  CHECK(c2.per_agent[0] == 2);
}

TEST_CASE("convergence time") {
  const auto g = net(1);
  const auto flat = run_event_driven(g, standard_law(g, LawKind::algorithm2), Vector<double>::Ones(5).eval(), 5.0);
  CHECK(convergence_time(flat, 0.0) == std::optional<double>(0.0));

  for (double lambda : {0.0, 0.5, 1.0}) {
    const auto tr = run_event_driven(g, standard_law(g, LawKind::combined, lambda), random_state(51, 0), 50.0);
    const auto tc = convergence_time(tr, lambda);
    REQUIRE(tc);
    // Bisection on the sampled V between the last sample above 1% and the first below.
    const double goal = 0.01 * lyapunov_value(lambda, g, tr.x0, tr.target);
    auto v = [&](double t) { return lyapunov_value(lambda, g, tr.state_at(t), tr.target); };
    double lo = 0, hi = 0;
    for (const auto& seg : tr.segments) {
      if (v(seg.t_end) <= goal) {
        lo = seg.t_start;
        hi = seg.t_end;
        break;
      }
    }
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (v(mid) <= goal ? hi : lo) = mid;
    }
    CHECK_THAT(*tc, WithinAbs(hi, 1e-9));
  }

  const auto short_run = run_event_driven(g, standard_law(g, LawKind::algorithm1), random_state(51, 1), 0.1);
  CHECK_FALSE(convergence_time(short_run, 1.0));
}

TEST_CASE("energy at constant states") {
  const auto g = net(3);
  const auto flat = run_event_driven(g, standard_law(g, LawKind::algorithm1), Vector<double>::Ones(5).eval(), 2.0);
  CHECK_THAT(energy(flat, std::optional<double>(2.0)), WithinRel(20 * std::pow(10.0, 0.1) * 2, 1e-12));
  CHECK_THAT(energy(flat, std::optional<double>(2.0)), WithinRel(50.357016, 1e-7));
  // Past the horizon the state is held.
  CHECK_THAT(energy(flat, std::optional<double>(3.0)), WithinRel(20 * std::pow(10.0, 0.1) * 3, 1e-12));

  Vector<double> x(2), u = Vector<double>::Zero(2);
  x << 1, 0;
  const auto tr = two_agent_trace(x, u, 1.0);
  CHECK_THAT(energy(tr, std::optional<double>(1.0)), WithinRel(2 * std::pow(10.0, 1.1), 1e-12));
  CHECK_THAT(energy(tr, std::optional<double>(1.0)), WithinRel(25.178508, 1e-7));
  CHECK_THROWS_AS(energy(tr, std::optional<double>()), NotApplicable);
}

TEST_CASE("closed-form energy matches adaptive quadrature") {
  Vector<double> x(2), u(2);
  x << 1, 0;
  u << -2, 0.5;  // the difference crosses zero at t = 0.4
  const auto toy = two_agent_trace(x, u, 1.0);
  CHECK_THAT(energy(toy, std::optional<double>(1.0)), WithinRel(energy_oracle(toy, 1.0, Vector<double>::Ones(2)), 1e-10));

  for (int id = 1; id <= 4; ++id) {
    const auto g = net(id);
    const auto run = run_clock_sync(g, standard_law(g, LawKind::combined, 0.5),
                                    make_clock_model(random_drifts(9, static_cast<std::uint64_t>(id), 5)), 20.0);
    const auto tc = convergence_time(run.trace, 0.5);
    REQUIRE(tc);
    const double e = energy(run.trace, tc, run.model.gamma);
    CHECK_THAT(e, WithinRel(energy_oracle(run.trace, *tc, run.model.gamma), 1e-8));
    CHECK(e >= 20 * std::pow(10.0, 0.1) * *tc);
  }
}

TEST_CASE("H2 norm squared") {
  const auto g = net(2);
  const auto flat = run_event_driven(g, standard_law(g, LawKind::algorithm2), Vector<double>::Ones(5).eval(), 5.0);
  CHECK(h2_norm_sq(flat).value == 0.0);

  Vector<double> x(2), u(2);
  x << 1, 0;
  u << -1, 0;
  CHECK_THAT(h2_norm_sq(two_agent_trace(x, u, 1.0)).value, WithinAbs(1.0 / 3.0, 1e-15));

  // Exact per-segment cubic against a fine midpoint sum.
  const auto tr = run_event_driven(g, standard_law(g, LawKind::algorithm1), random_state(52, 0), 5.0);
  double approx = 0;
  const int steps = 200000;
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) * 5.0 / steps;
    approx += (tr.state_at(t).array() - tr.target).matrix().squaredNorm() * 5.0 / steps;
  }
  CHECK_THAT(h2_norm_sq(tr).value, WithinRel(approx, 1e-6));
}

TEST_CASE("H2 truncation at horizon 50 is negligible") {
  const auto g = net(1);
  const auto law = standard_law(g, LawKind::algorithm2);
  const auto x0 = random_state(53, 0);
  const double c50 = h2_norm_sq(run_event_driven(g, law, x0, 50.0)).value;
  const double c100 = h2_norm_sq(run_event_driven(g, law, x0, 100.0)).value;
  CHECK(std::abs(c100 - c50) <= 0.01 * c100);
}

TEST_CASE("metrics are deterministic functions of the trace") {
  const auto g = net(4);
  const auto tr = run_event_driven(g, standard_law(g, LawKind::combined, 0.5), random_state(54, 0), 30.0);
  const auto a = compute_metrics(tr, 0.5, Vector<double>::Ones(5).eval());
  const auto b = compute_metrics(tr, 0.5, Vector<double>::Ones(5).eval());
  CHECK(a.events.total == b.events.total);
  CHECK(a.t_con == b.t_con);
  CHECK(a.energy == b.energy);
  CHECK(a.h2sq.value == b.h2sq.value);
  CHECK(a.events.total >= 5);
  CHECK(*a.energy >= 0);
}

TEST_CASE("algorithm 2 broadcasts more than algorithm 1 on network 1") {
  const auto g = net(1);
  double n1 = 0, n2 = 0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto m = make_clock_model(random_drifts(2024, r, 5));
    n1 += static_cast<double>(run_clock_sync(g, standard_law(g, LawKind::algorithm1), m, 50.0).trace.broadcast_count());
    n2 += static_cast<double>(run_clock_sync(g, standard_law(g, LawKind::algorithm2), m, 50.0).trace.broadcast_count());
  }
  CHECK(n2 >= n1);
}
