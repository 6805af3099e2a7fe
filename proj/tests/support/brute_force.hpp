#pragma once

#include <limits>

#include "splatforge/init/kdtree.hpp"

namespace splatforge::testing {

/// Exhaustive nearest neighbor; first (smallest) index wins ties.
inline Neighbor brute_nearest(const Rows3<float>& points, const Eigen::Vector3f& q,
                              Index exclude = -1) {
  Neighbor best{-1, std::numeric_limits<double>::infinity()};
  for (Index i = 0; i < points.rows(); ++i) {
    if (i == exclude) continue;
    const double d = squared_distance(points.row(i).transpose(), q);
    if (d < best.squared_distance) best = {i, d};
  }
  return best;
}

}  // namespace splatforge::testing
