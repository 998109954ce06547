#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "etcon/graph.hpp"

namespace etcon {

/**
 * Which triggering function an agent evaluates.
 *
 * algorithm1 bounds the error by the sum of squared disagreements, algorithm2
 * by the squared sum of weighted disagreements, and combined mixes the two
 * brackets with weight lambda (lambda = 1 and lambda = 0 reproduce them).
 */
enum class LawKind { algorithm1, algorithm2, combined };

inline std::string_view to_string(LawKind k) {
  switch (k) {
    case LawKind::algorithm1: return "algorithm1";
    case LawKind::algorithm2: return "algorithm2";
    case LawKind::combined: return "combined";
  }
  return "?";
}

inline std::optional<LawKind> law_kind_from_string(std::string_view s) {
  if (s == "algorithm1") return LawKind::algorithm1;
  if (s == "algorithm2") return LawKind::algorithm2;
  if (s == "combined") return LawKind::combined;
  return std::nullopt;
}

/// Unvalidated law parameters, one entry per agent.
template <typename Scalar = double>
struct LawSettings {
  LawKind kind = LawKind::combined;
  Scalar lambda = 0;  ///< ignored unless kind == combined
  Vector<Scalar> sigma;
  Vector<Scalar> b;
  Vector<Scalar> c;
  std::optional<Vector<Scalar>> eps;  ///< forced-rebroadcast windows (agent-local time)
};

/// Validated law with derived per-agent quantities.
template <typename Scalar = double>
struct TriggerLaw {
  LawKind kind = LawKind::combined;
  Scalar lambda = 0;
  Vector<Scalar> sigma;
  Vector<Scalar> b;
  Vector<Scalar> c;
  Vector<Scalar> delta;
  Vector<Scalar> eps;
  /// Young's-inequality split for the first bracket; 0.5 maximises a(1-a).
  static constexpr double a = 0.5;

  /// True when the squared-sum bracket contributes to the threshold.
  bool uses_delta() const {
    return kind == LawKind::algorithm2 || (kind == LawKind::combined && lambda < Scalar(1));
  }
};

/// b_i = c_i = 0.5 / max_j d_j^out, which keeps every delta_i >= 0.5.
template <typename Scalar>
Vector<Scalar> safe_gain(const Digraph<Scalar>& g) {
  return Vector<Scalar>::Constant(g.size(), Scalar(0.5) / g.out_degree().maxCoeff());
}

/// b_i = c_i = 0.5 / d_i^out, the per-agent rule used in the benchmark experiments.
template <typename Scalar>
Vector<Scalar> per_agent_gain(const Digraph<Scalar>& g) {
  return (Scalar(0.5) / g.out_degree().array()).matrix();
}

/// delta_i = 1 - d_i b_i / 2 - sum_j w_ij c_j / 2 (self-loops included in both terms).
template <typename Scalar>
Vector<Scalar> delta_margins(const Digraph<Scalar>& g, const Vector<Scalar>& b, const Vector<Scalar>& c) {
  const Index n = g.size();
  Vector<Scalar> delta(n);
  for (Index i = 0; i < n; ++i) {
    Scalar wc = 0;
    for (Index j = 0; j < n; ++j) wc += g.weight(i, j) * c(j);
    delta(i) = Scalar(1) - g.out_degree()(i) * b(i) / Scalar(2) - wc / Scalar(2);
  }
  return delta;
}

namespace detail {

template <typename Scalar>
Scalar first_radicand(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i) {
  const auto nbrs = static_cast<Scalar>(g.out_neighbors(i).size());
  return law.sigma(i) / (Scalar(4) * g.out_degree()(i) * g.max_out_weight(i) * nbrs);
}

template <typename Scalar>
Scalar second_gain(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i) {
  return Scalar(2) * law.delta(i) * law.b(i) * law.c(i) / ((law.b(i) + law.c(i)) * g.out_degree()(i));
}

}  // namespace detail

/**
 * Guaranteed self-trigger dwell time tau_i in agent-local time.
 *
 * This is the time for e_i to grow from 0 to the threshold while no neighbour
 * broadcasts. Forced-rebroadcast windows must stay strictly below it.
 */
template <typename Scalar>
Scalar dwell_time(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i) {
  if (law.uses_delta() && !(law.delta(i) > Scalar(0)))
    throw ConfigError("dwell time undefined: delta_" + std::to_string(i + 1) + " <= 0");
  switch (law.kind) {
    case LawKind::algorithm1:
      return std::sqrt(detail::first_radicand(law, g, i));
    case LawKind::algorithm2:
      return std::sqrt(law.sigma(i) * detail::second_gain(law, g, i));
    case LawKind::combined:
      break;
  }
  return std::sqrt(law.lambda * detail::first_radicand(law, g, i) +
                   (Scalar(1) - law.lambda) * (law.sigma(i) * detail::second_gain(law, g, i)));
}

template <typename Scalar = double>
struct DwellBounds {
  Scalar tau;        ///< guaranteed inter-event time without incoming messages
  Scalar eps_bound;  ///< supremum for the forced-rebroadcast window
};

template <typename Scalar>
DwellBounds<Scalar> dwell_bounds(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i) {
  const Scalar tau = dwell_time(law, g, i);
  return {tau, tau};
}

/**
 * Checks the settings against the graph and derives delta and eps.
 *
 * Rejects delta_i <= 0 whenever the squared-sum bracket is active; the message
 * names the agent and the safe gain that fixes it. Windows default to 0.99 of
 * the dwell bound.
 */
template <typename Scalar>
TriggerLaw<Scalar> validate_and_derive(const Digraph<Scalar>& g, const LawSettings<Scalar>& s) {
  const Index n = g.size();
  if (!is_weight_balanced(g, Scalar(1e-10))) throw ConfigError("network is not weight-balanced");
  if (!is_strongly_connected(g)) throw ConfigError("network is not strongly connected");
  auto check_len = [n](const Vector<Scalar>& v, const char* name) {
    if (v.size() != n)
      throw ConfigError(std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " +
                        std::to_string(n));
  };
  check_len(s.sigma, "sigma");
  check_len(s.b, "b");
  check_len(s.c, "c");

  TriggerLaw<Scalar> law;
  law.kind = s.kind;
  switch (s.kind) {
    case LawKind::algorithm1: law.lambda = 1; break;
    case LawKind::algorithm2: law.lambda = 0; break;
    case LawKind::combined: law.lambda = s.lambda; break;
  }
  if (!(law.lambda >= Scalar(0) && law.lambda <= Scalar(1)))
    throw ConfigError("lambda must lie in [0, 1]");
  for (Index i = 0; i < n; ++i) {
    if (!(s.sigma(i) > Scalar(0) && s.sigma(i) < Scalar(1)))
      throw ConfigError("sigma_" + std::to_string(i + 1) + " must lie in (0, 1)");
    if (!(s.b(i) > Scalar(0)) || !(s.c(i) > Scalar(0)))
      throw ConfigError("b_" + std::to_string(i + 1) + " and c_" + std::to_string(i + 1) + " must be positive");
  }
  law.sigma = s.sigma;
  law.b = s.b;
  law.c = s.c;
  law.delta = delta_margins(g, s.b, s.c);

  if (law.uses_delta()) {
    for (Index i = 0; i < n; ++i) {
      if (!(law.delta(i) > Scalar(0))) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "delta_" << (i + 1) << " = " << static_cast<double>(law.delta(i))
            << " <= 0 for agent " << (i + 1) << "; use the safe gains b_i = c_i = 0.5/max_j d_j^out = "
            << static_cast<double>(Scalar(0.5) / g.out_degree().maxCoeff());
        throw ConfigError(msg.str());
      }
    }
  }

  law.eps.resize(n);
  for (Index i = 0; i < n; ++i) law.eps(i) = Scalar(0.99) * dwell_bounds(law, g, i).eps_bound;
  if (s.eps) {
    check_len(*s.eps, "eps");
    for (Index i = 0; i < n; ++i) {
      const Scalar bound = dwell_bounds(law, g, i).eps_bound;
      if (!((*s.eps)(i) > Scalar(0) && (*s.eps)(i) < bound)) {
        std::ostringstream msg;
        msg << "eps_" << (i + 1) << " must lie in (0, " << static_cast<double>(bound) << ")";
        throw ConfigError(msg.str());
      }
    }
    law.eps = *s.eps;
  }
  return law;
}

/// Convenience overload for the combined law.
template <typename Scalar>
TriggerLaw<Scalar> validate_and_derive(const Digraph<Scalar>& g, Scalar lambda, const Vector<Scalar>& sigma,
                                       const Vector<Scalar>& b, const Vector<Scalar>& c) {
  return validate_and_derive(g, LawSettings<Scalar>{LawKind::combined, lambda, sigma, b, c, std::nullopt});
}

/// The two un-scaled threshold brackets of agent i at broadcast state xhat.
template <typename Scalar = double>
struct ThresholdTerms {
  Scalar sum_of_squares;  ///< sum_j w_ij (xh_i - xh_j)^2 / (4 d_i)
  Scalar square_of_sum;   ///< 2 delta b c / ((b + c) d) * (sum_j w_ij (xh_i - xh_j))^2
};

template <typename Scalar, typename Derived>
ThresholdTerms<Scalar> threshold_terms(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i,
                                       const Eigen::MatrixBase<Derived>& xhat) {
  Scalar sq = 0;
  Scalar sum = 0;
  for (Index j : g.out_neighbors(i)) {
    const Scalar diff = xhat(i) - xhat(j);
    sq += g.weight(i, j) * diff * diff;
    sum += g.weight(i, j) * diff;
  }
  ThresholdTerms<Scalar> t{sq / (Scalar(4) * g.out_degree()(i)), 0};
  if (law.kind != LawKind::algorithm1) t.square_of_sum = detail::second_gain(law, g, i) * (sum * sum);
  return t;
}

/**
 * The threshold bracket without the sigma factor. An event on f_i = 0 only
 * counts when this is non-zero.
 */
template <typename Scalar, typename Derived>
Scalar trigger_phi(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i,
                   const Eigen::MatrixBase<Derived>& xhat) {
  const auto t = threshold_terms(law, g, i, xhat);
  switch (law.kind) {
    case LawKind::algorithm1: return t.sum_of_squares;
    case LawKind::algorithm2: return t.square_of_sum;
    case LawKind::combined: break;
  }
  return law.lambda * t.sum_of_squares + (Scalar(1) - law.lambda) * t.square_of_sum;
}

/// theta_i = sigma_i * phi_i; the triggering function is f_i = e_i^2 - theta_i.
template <typename Scalar, typename Derived>
Scalar trigger_threshold(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i,
                         const Eigen::MatrixBase<Derived>& xhat) {
  return law.sigma(i) * trigger_phi(law, g, i, xhat);
}

/// Relative tolerance for treating e_i^2 and theta_i as equal.
inline constexpr double kEventTolerance = 1e-12;

/// Event rule: f_i > 0, or f_i = 0 (to kEventTolerance relative) with phi_i != 0.
template <typename Scalar>
bool fires(Scalar e2, Scalar theta, Scalar phi) {
  if (e2 > theta) return true;
  return phi != Scalar(0) && std::abs(e2 - theta) <= Scalar(kEventTolerance) * theta;
}

template <typename Scalar, typename Derived>
bool trigger_fired(const TriggerLaw<Scalar>& law, const Digraph<Scalar>& g, Index i, Scalar x_i,
                   const Eigen::MatrixBase<Derived>& xhat) {
  const Scalar e = xhat(i) - x_i;
  const Scalar phi = trigger_phi(law, g, i, xhat);
  return fires(e * e, law.sigma(i) * phi, phi);
}

}  // namespace etcon
