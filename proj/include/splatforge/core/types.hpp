#pragma once

#include <Eigen/Core>

#include <optional>

#include "splatforge/error.hpp"

namespace splatforge {

using Index = Eigen::Index;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

// N x K attribute tables; rows are contiguous so a row is one point.
template <typename Scalar>
using Rows3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
template <typename Scalar>
using Rows4 = Eigen::Matrix<Scalar, Eigen::Dynamic, 4, Eigen::RowMajor>;
template <typename Scalar>
using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Rgb = Eigen::Vector3f;

/// The optimizable asset. Every attribute is stored pre-activation so the
/// optimizer works on unconstrained values; see activations in math.hpp.
/// Quaternions are (w, x, y, z).
template <typename Scalar>
struct GaussianCloud {
  Rows3<Scalar> positions;
  Rows3<Scalar> colors_dc;
  Column<Scalar> opacities_raw;
  Rows3<Scalar> scales_raw;
  Rows4<Scalar> rotations;

  GaussianCloud() = default;
  explicit GaussianCloud(Index n) { resize(n); }

  Index size() const { return positions.rows(); }

  void resize(Index n) {
    positions.resize(n, 3);
    colors_dc.resize(n, 3);
    opacities_raw.resize(n);
    scales_raw.resize(n, 3);
    rotations.resize(n, 4);
  }

  void setZero(Index n) {
    resize(n);
    positions.setZero();
    colors_dc.setZero();
    opacities_raw.setZero();
    scales_raw.setZero();
    rotations.setZero();
  }

  template <typename Other>
  GaussianCloud<Other> cast() const {
    GaussianCloud<Other> out;
    out.positions = positions.template cast<Other>();
    out.colors_dc = colors_dc.template cast<Other>();
    out.opacities_raw = opacities_raw.template cast<Other>();
    out.scales_raw = scales_raw.template cast<Other>();
    out.rotations = rotations.template cast<Other>();
    return out;
  }

  bool operator==(const GaussianCloud& o) const {
    return positions == o.positions && colors_dc == o.colors_dc &&
           opacities_raw == o.opacities_raw && scales_raw == o.scales_raw &&
           rotations == o.rotations;
  }

  /// Throws InvalidParameter on shape mismatch, empty cloud, non-finite
  /// values or a zero quaternion.
  void validate() const {
    const Index n = size();
    if (n < 1) throw Error(ErrorKind::EmptyInput, "gaussian cloud is empty");
    if (colors_dc.rows() != n || opacities_raw.rows() != n ||
        scales_raw.rows() != n || rotations.rows() != n)
      throw Error(ErrorKind::InvalidParameter,
                  "gaussian cloud attribute arrays differ in length");
    if (!positions.allFinite() || !colors_dc.allFinite() ||
        !opacities_raw.allFinite() || !scales_raw.allFinite() ||
        !rotations.allFinite())
      throw Error(ErrorKind::InvalidParameter,
                  "gaussian cloud contains non-finite values");
    if ((rotations.rowwise().squaredNorm().array() == Scalar(0)).any())
      throw Error(ErrorKind::InvalidParameter, "zero-length rotation quaternion");
  }
};

using GaussianCloudf = GaussianCloud<float>;
using GaussianCloudd = GaussianCloud<double>;

/// Positions plus RGB colors in [0,1].
struct ColoredPointCloud {
  Rows3<float> positions;
  Rows3<float> colors;

  Index size() const { return positions.rows(); }
  bool empty() const { return positions.rows() == 0; }
};

struct TriangleMesh {
  Rows3<float> vertices;
  std::optional<Rows3<float>> vertex_colors;
  Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> faces;

  void validate() const;
};

struct Aabb {
  Eigen::Vector3f min_bound;
  Eigen::Vector3f max_bound;

  Eigen::Vector3f center() const { return 0.5f * (min_bound + max_bound); }
  Eigen::Vector3f extent() const { return max_bound - min_bound; }
  bool contains(const Eigen::Vector3f& p) const {
    return (p.array() >= min_bound.array()).all() &&
           (p.array() <= max_bound.array()).all();
  }
};

/// Orbit camera. Angles in degrees; the world is z-up.
struct Camera {
  double radius = 2.5;
  double azimuth = 0.0;
  double elevation = 0.0;
  double fov_y = 49.0;
  int width = 512;
  int height = 512;
  Eigen::Vector3d look_at = Eigen::Vector3d::Zero();

  void validate() const;

  bool operator==(const Camera& o) const {
    return radius == o.radius && azimuth == o.azimuth &&
           elevation == o.elevation && fov_y == o.fov_y && width == o.width &&
           height == o.height && look_at == o.look_at;
  }
};

}  // namespace splatforge
