#include <cmath>

#include "catch_amalgamated.hpp"

#include "etcon/engine.hpp"
#include "etcon/lyapunov.hpp"
#include "support.hpp"

using namespace etcon;
using etcon::testing::net;
using etcon::testing::random_state;
using etcon::testing::standard_law;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector<double> spike() {
  Vector<double> x = Vector<double>::Zero(5);
  x(0) = 1;
  return x;
}

SimState<double> state_on(const Segment<double>& seg, const Vector<double>& rate, double t) {
  SimState<double> s;
  s.t = t;
  s.x = seg.state_at(t);
  s.xhat = seg.xhat;
  s.u = seg.u;
  s.rate = rate;
  return s;
}

}  // namespace

TEST_CASE("hand-evaluated Lyapunov values") {
  const auto g = net(3);
  CHECK_THAT(lyapunov_value(1.0, g, spike(), 0.2), WithinAbs(0.4, 1e-15));
  CHECK_THAT(lyapunov_value(0.0, g, spike(), 0.2), WithinAbs(0.5, 1e-15));
  for (double lambda : {0.0, 0.4, 1.0})
    CHECK_THAT(lyapunov_value(lambda, net(1), Vector<double>::Constant(5, 1.5).eval(), 1.5), WithinAbs(0.0, 1e-14));
}

TEST_CASE("segment quadratic agrees with direct evaluation") {
  const auto g = net(2);
  const auto tr = run_event_driven(g, standard_law(g, LawKind::combined, 0.3), random_state(31, 0), 5.0);
  for (const auto& seg : tr.segments) {
    const auto q = segment_lyapunov(0.3, g, seg, tr.target);
    for (double f : {0.0, 0.37, 1.0}) {
      const double s = f * seg.length();
      CHECK_THAT(q(s), WithinAbs(lyapunov_value(0.3, g, seg.state_at(seg.t_start + s), tr.target), 1e-12));
    }
  }
}

TEST_CASE("V2 derivative bound at consensus") {
  const auto g = net(1);
  const auto law = standard_law(g, LawKind::algorithm2);
  SimState<double> s;
  s.x = s.xhat = Vector<double>::Constant(5, 3.0);
  s.u = Vector<double>::Zero(5);
  s.rate = Vector<double>::Ones(5);
  const auto r = v2dot_bound_check(g, law, s);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs_bound == 0.0);
  CHECK(r.ok);
}

TEST_CASE("V2 derivative bound on random states") {
  const auto g = net(1);
  const auto law = standard_law(g, LawKind::algorithm2);
  SimState<double> s;
  s.rate = Vector<double>::Ones(5);
  for (std::uint64_t k = 0; k < 100; ++k) {
    s.xhat = random_state(32, k);
    s.x = s.xhat;
    s.u = control_input(g, s.xhat);
    CHECK(v2dot_bound_check(g, law, s).ok);
  }
  // Errors inside the trigger band: e_i^2 <= theta_i.
  SplitMix64 rng(substream_key(33, 0));
  for (std::uint64_t k = 0; k < 1000; ++k) {
    s.xhat = random_state(34, k);
    s.u = control_input(g, s.xhat);
    for (Index i = 0; i < 5; ++i) {
      const double r = std::sqrt(trigger_threshold(law, g, i, s.xhat));
      s.x(i) = s.xhat(i) - r * (2 * rng.uniform_open() - 1);
    }
    CHECK(v2dot_bound_check(g, law, s).ok);
  }
}

TEST_CASE("V2 derivative bound along algorithm 2 traces") {
  std::size_t samples = 0;
  for (int id = 1; id <= 4; ++id) {
    const auto g = net(id);
    const auto law = standard_law(g, LawKind::algorithm2);
    for (std::uint64_t k = 0; k < 3; ++k) {
      const auto tr = run_event_driven(g, law, random_state(35, 10 * static_cast<std::uint64_t>(id) + k), 20.0);
      for (const auto& seg : tr.segments) {
        for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
          const auto r = v2dot_bound_check(g, law, state_on(seg, tr.rate, seg.t_start + f * seg.length()));
          CHECK(r.ok);
          ++samples;
        }
      }
    }
  }
  CHECK(samples > 1000);
}

TEST_CASE("exponential rate constant") {
  const auto g = net(3);
  const Vector<double> h = Vector<double>::Constant(5, 0.5);
  const auto law = validate_and_derive(g, 0.0, h, h, h);
  // (-0.5)(1)(0.5)(1.25)(1) / (1 + 2 * 1.25 * 0.5 * 0.5 * 0.5 * 0.5 * 1.25)
  CHECK_THAT(exp_rate(g, law), WithinRel(-0.3125 / 1.1953125, 1e-12));
  CHECK_THROWS_AS(exp_rate(g, validate_and_derive(g, 0.5, h, h, h)), NotApplicable);

  const Vector<double> near_one = Vector<double>::Constant(5, 1 - 1e-9);
  CHECK(std::abs(exp_rate(g, validate_and_derive(g, 0.0, near_one, h, h))) < 1e-8);

  const auto g2 = build_digraph((2.0 * benchmark_network<double>(3)).eval());
  const Vector<double> q = Vector<double>::Constant(5, 0.25);
  CHECK(exp_rate(g2, validate_and_derive(g2, 0.0, h, q, q)) < 0);
}

TEST_CASE("monotonicity reports") {
  const auto g1 = net(1);
  const auto flat = run_event_driven(g1, standard_law(g1, LawKind::algorithm2), Vector<double>::Ones(5).eval(), 5.0);
  const auto flat_rep = monotonicity_report(flat, 0.0);
  CHECK(flat_rep.pass);
  CHECK(flat_rep.max_increase == 0.0);

  CHECK(monotonicity_report(run_event_driven(g1, standard_law(g1, LawKind::algorithm2), random_state(36, 0), 50.0), 0.0)
            .pass);
  const auto g2 = net(2);
  CHECK(monotonicity_report(
            run_event_driven(g2, standard_law(g2, LawKind::combined, 0.5), random_state(36, 1), 50.0), 0.5)
            .pass);
}

TEST_CASE("fitted decay slope is negative") {
  const auto g = net(4);
  const auto tr = run_event_driven(g, standard_law(g, LawKind::algorithm2), random_state(37, 0), 20.0);
  CHECK(fit_log_slope(tr, 0.0) < 0);
}
