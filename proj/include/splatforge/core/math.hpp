#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "splatforge/core/types.hpp"

namespace splatforge {

/// Degree-0 spherical harmonic constant; rgb = 0.5 + kSH0 * dc.
inline constexpr double kSH0 = 0.28209479177387814;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p / (Scalar(1) - p));
}

template <typename Scalar>
Scalar rgb_from_dc(Scalar dc) {
  return Scalar(0.5) + Scalar(kSH0) * dc;
}

template <typename Scalar>
Scalar dc_from_rgb(Scalar rgb) {
  return (rgb - Scalar(0.5)) / Scalar(kSH0);
}

template <typename Scalar>
struct ActivatedGaussians {
  Column<Scalar> opacities;
  Rows3<Scalar> scales;
  Rows4<Scalar> rotations;
  Rows3<Scalar> colors;
};

/// Logistic opacity, exponential scale, unit quaternion, clamped SH0 color.
template <typename Scalar>
ActivatedGaussians<Scalar> activate_params(const GaussianCloud<Scalar>& raw) {
  ActivatedGaussians<Scalar> out;
  out.opacities = raw.opacities_raw.unaryExpr([](Scalar x) { return sigmoid(x); });
  out.scales = raw.scales_raw.array().exp().matrix();
  out.rotations = raw.rotations.rowwise().normalized();
  out.colors = (Scalar(0.5) + Scalar(kSH0) * raw.colors_dc.array())
                   .cwiseMax(Scalar(0))
                   .cwiseMin(Scalar(1))
                   .matrix();
  return out;
}

/// Rotation matrix of a (w, x, y, z) quaternion, normalized first.
template <typename Scalar>
Mat3<Scalar> rotation_from_quaternion(const Vec4<Scalar>& q_in) {
  const Vec4<Scalar> q = q_in.normalized();
  const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<Scalar> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

/// Pulls dL/dR back to the raw (unnormalized) quaternion.
template <typename Scalar>
Vec4<Scalar> rotation_from_quaternion_backward(const Vec4<Scalar>& q_in,
                                               const Mat3<Scalar>& g) {
  const Scalar norm = q_in.norm();
  const Vec4<Scalar> q = q_in / norm;
  const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4<Scalar> dq;
  dq[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) -
               y * g(2, 0) + x * g(2, 1));
  dq[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) -
               w * g(1, 2) + z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  dq[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) +
               z * g(1, 2) - w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  dq[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
               2 * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  // through q / |q|
  return (dq - q * q.dot(dq)) / norm;
}

/// Sigma = R S S^T R^T.
template <typename Scalar>
Mat3<Scalar> covariance_from_scale_rotation(const Vec3<Scalar>& scale,
                                            const Vec4<Scalar>& rotation) {
  if (!scale.allFinite() || !rotation.allFinite())
    throw Error(ErrorKind::InvalidParameter, "non-finite scale or rotation");
  if (rotation.squaredNorm() == Scalar(0))
    throw Error(ErrorKind::InvalidParameter, "zero-length quaternion");
  const Mat3<Scalar> m = rotation_from_quaternion(rotation) * scale.asDiagonal();
  const Mat3<Scalar> cov = m * m.transpose();
  return cov.template selfadjointView<Eigen::Upper>();
}

/// exp(-1/2 x^T cov^-1 x).
template <typename Derived, typename DerivedCov>
typename Derived::Scalar gaussian_weight(const Eigen::MatrixBase<Derived>& offset,
                                         const Eigen::MatrixBase<DerivedCov>& cov) {
  using Scalar = typename Derived::Scalar;
  const Eigen::LDLT<typename DerivedCov::PlainObject> ldlt(cov);
  const Scalar power = offset.dot(ldlt.solve(offset.derived()));
  return std::exp(Scalar(-0.5) * power);
}

Aabb aabb_of(const Rows3<float>& points);

}  // namespace splatforge
