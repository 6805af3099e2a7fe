#include "splatforge/core/math.hpp"

namespace splatforge {

Aabb aabb_of(const Rows3<float>& points) {
  if (points.rows() == 0)
    throw Error(ErrorKind::EmptyInput, "bounding box of an empty point set");
  return Aabb{points.colwise().minCoeff().transpose(),
              points.colwise().maxCoeff().transpose()};
}

}  // namespace splatforge
