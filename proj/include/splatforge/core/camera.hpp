#pragma once

#include <cmath>
#include <numbers>

#include "splatforge/core/types.hpp"

namespace splatforge {

/// Pinhole view of an orbit Camera: x right, y down, z forward.
template <typename Scalar>
struct CameraModel {
  Mat3<Scalar> rotation;  // world -> camera
  Vec3<Scalar> translation;
  Scalar fx, fy, cx, cy;
  int width, height;

  Vec3<Scalar> to_camera(const Vec3<Scalar>& p) const {
    return rotation * p + translation;
  }
};

inline Eigen::Vector3d camera_position(const Camera& cam) {
  const double az = cam.azimuth * std::numbers::pi / 180.0;
  const double el = cam.elevation * std::numbers::pi / 180.0;
  const Eigen::Vector3d dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                            std::sin(el));
  return cam.look_at + cam.radius * dir;
}

template <typename Scalar>
CameraModel<Scalar> camera_model(const Camera& cam) {
  cam.validate();
  const Eigen::Vector3d eye = camera_position(cam);
  const Eigen::Vector3d forward = (cam.look_at - eye).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (forward.cross(up).norm() < 1e-9) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);

  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();

  const double focal =
      0.5 * cam.height / std::tan(0.5 * cam.fov_y * std::numbers::pi / 180.0);

  CameraModel<Scalar> model;
  model.rotation = r.cast<Scalar>();
  model.translation = (-r * eye).cast<Scalar>();
  model.fx = Scalar(focal);
  model.fy = Scalar(focal);
  model.cx = Scalar(0.5 * cam.width);
  model.cy = Scalar(0.5 * cam.height);
  model.width = cam.width;
  model.height = cam.height;
  return model;
}

}  // namespace splatforge
