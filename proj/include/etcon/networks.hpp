#pragma once

#include <optional>
#include <string_view>

#include "etcon/graph.hpp"

namespace etcon {

/**
 * The four five-agent benchmark networks: 1 random (with self-loops),
 * 2 ring, 3 complete, 4 star with agent 1 as hub.
 */
template <typename Scalar = double>
Matrix<Scalar> benchmark_network(int id) {
  Matrix<Scalar> w = Matrix<Scalar>::Zero(5, 5);
  const Scalar s = Scalar(1) / Scalar(6);
  const Scalar h = Scalar(1) / Scalar(2);
  const Scalar q = Scalar(1) / Scalar(4);
  switch (id) {
    case 1:
      w << 0, 1, 0, 0, 0,
           0, 0, h, h, 0,
           5 * s, 0, s, 0, 0,
           s, 0, s, h, s,
           0, 0, s, 0, 5 * s;
      break;
    case 2:
      w << 0, h, 0, 0, h,
           h, 0, h, 0, 0,
           0, h, 0, h, 0,
           0, 0, h, 0, h,
           h, 0, 0, h, 0;
      break;
    case 3:
      w.setConstant(q);
      w.diagonal().setZero();
      break;
    case 4:
      w.row(0).setConstant(q);
      w.col(0).setConstant(q);
      w(0, 0) = 0;
      break;
    default:
      throw ConfigError("unknown benchmark network " + std::to_string(id));
  }
  return w;
}

/// Maps "net1".."net4" to 1..4.
inline std::optional<int> benchmark_network_id(std::string_view name) {
  if (name == "net1") return 1;
  if (name == "net2") return 2;
  if (name == "net3") return 3;
  if (name == "net4") return 4;
  return std::nullopt;
}

}  // namespace etcon
