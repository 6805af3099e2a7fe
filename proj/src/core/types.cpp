#include "splatforge/core/types.hpp"

#include <cmath>

namespace splatforge {

void TriangleMesh::validate() const {
  if (vertices.rows() < 3)
    throw Error(ErrorKind::InvalidParameter, "mesh needs at least 3 vertices");
  if (vertex_colors && vertex_colors->rows() != vertices.rows())
    throw Error(ErrorKind::InvalidParameter,
                "vertex color count differs from vertex count");
  if (faces.size() > 0 &&
      (faces.minCoeff() < 0 || faces.maxCoeff() >= vertices.rows()))
    throw Error(ErrorKind::InvalidParameter, "face index out of range");
}

void Camera::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw Error(ErrorKind::InvalidParameter, "camera radius must be > 0");
  if (width < 1 || height < 1)
    throw Error(ErrorKind::InvalidParameter, "camera image size must be >= 1");
  if (!(fov_y > 0.0 && fov_y < 180.0))
    throw Error(ErrorKind::InvalidParameter, "camera fov_y must be in (0, 180)");
  if (!std::isfinite(azimuth) || !std::isfinite(elevation) || !look_at.allFinite())
    throw Error(ErrorKind::InvalidParameter, "camera pose is not finite");
}

}  // namespace splatforge
