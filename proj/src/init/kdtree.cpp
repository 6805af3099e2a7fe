#include "splatforge/init/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace splatforge {

KdTree::KdTree(Rows3<float> points, int leaf_size)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size)) {
  if (points_.rows() == 0) throw Error(ErrorKind::EmptyInput, "kd-tree over an empty point set");
  order_.resize(static_cast<std::size_t>(points_.rows()));
  std::iota(order_.begin(), order_.end(), Index(0));
  nodes_.reserve(2 * order_.size() / static_cast<std::size_t>(leaf_size_) + 1);
  build(0, static_cast<int>(order_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3f lo = Eigen::Vector3f::Constant(std::numeric_limits<float>::max());
  Eigen::Vector3f hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.row(order_[i]).transpose());
    hi = hi.cwiseMax(points_.row(order_[i]).transpose());
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) { return points_(a, dim) < points_(b, dim); });
  const float split = points_(order_[mid], dim);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.dim = dim;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search(int id, const Eigen::Vector3f& q, Index exclude, Neighbor& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const Index idx = order_[i];
      if (idx == exclude) continue;
      const double d2 = squared_distance(q, points_.row(idx).transpose());
      if (d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index))
        best = {idx, d2};
    }
    return;
  }
  // left holds coordinates <= split, right holds >= split
  const double diff = double(q[node.dim]) - double(node.split);
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, q, exclude, best);
  if (diff * diff <= best.squared_distance) search(far, q, exclude, best);
}

Neighbor KdTree::nearest(const Eigen::Vector3f& query, Index exclude) const {
  Neighbor best{-1, std::numeric_limits<double>::infinity()};
  search(0, query, exclude, best);
  return best;
}

}  // namespace splatforge
