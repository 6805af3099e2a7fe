#pragma once

#include <vector>

#include "splatforge/core/types.hpp"

namespace splatforge {

/// Squared Euclidean distance evaluated in double, x then y then z.
inline double squared_distance(const Eigen::Vector3f& a, const Eigen::Vector3f& b) {
  const double dx = double(a.x()) - double(b.x());
  const double dy = double(a.y()) - double(b.y());
  const double dz = double(a.z()) - double(b.z());
  return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
  Index index = -1;
  double squared_distance = 0.0;
};

/// Static 3-d tree over a point set. Queries are exact; among equidistant
/// points the smallest index wins.
class KdTree {
 public:
  explicit KdTree(Rows3<float> points, int leaf_size = 8);

  Index size() const { return points_.rows(); }

  /// Nearest point to `query`, skipping index `exclude` (pass -1 for none).
  Neighbor nearest(const Eigen::Vector3f& query, Index exclude = -1) const;

 private:
  struct Node {
    int begin, end;
    int left = -1, right = -1;
    int dim = 0;
    float split = 0.0f;
  };

  int build(int begin, int end);
  void search(int node, const Eigen::Vector3f& q, Index exclude, Neighbor& best) const;

  Rows3<float> points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

}  // namespace splatforge
