#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splatforge/core/camera.hpp"
#include "splatforge/core/math.hpp"
#include "splatforge/core/types.hpp"

namespace splatforge {

struct RenderSettings {
  double near_plane = 0.01;
  // px^2 added to the projected covariance diagonal
  double low_pass = 0.3;
  double max_alpha = 0.99;
  // tiled path stops a pixel once transmittance drops below this
  double min_transmittance = 1e-5;
  int tile_size = 16;
};

/// Mahalanobis radius^2 of the splat support. The kernel is exactly
/// exp(-m/2) up to kTaperStart and is blended to zero by kSupportPower.
inline constexpr double kTaperStart = 4.5;
inline constexpr double kSupportPower = 9.0;

template <typename Scalar>
struct Splat2D {
  Vec2<Scalar> mean2d;
  Mat2<Scalar> cov2d;
  Vec3<Scalar> conic;  // (a, b, c) of cov2d^-1 = [[a, b], [b, c]]
  Scalar depth;
  Vec3<Scalar> color;
  Scalar opacity;
  Index source_index;
  // inclusive pixel rectangle holding the support, clipped to the image
  int x_min, x_max, y_min, y_max;
};

template <typename Scalar>
std::optional<Splat2D<Scalar>> project_gaussian(const CameraModel<Scalar>& camera,
                                                const Vec3<Scalar>& position,
                                                const Mat3<Scalar>& cov3d,
                                                const Vec3<Scalar>& color,
                                                Scalar opacity,
                                                const RenderSettings& settings = {});

struct KernelSample {
  double alpha = 0;    // after clamping
  double weight = 0;   // tapered Gaussian value
  double dweight_dpower = 0;
  bool clamped = false;
};

/// sigma = min(max_alpha, opacity * G(x)) at pixel center (px, py).
template <typename Scalar>
KernelSample evaluate_splat(const Splat2D<Scalar>& splat, Scalar px, Scalar py,
                            double max_alpha);

struct RaySample {
  Eigen::Vector3d color;
  double alpha;
};

struct CompositeResult {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double transmittance = 1.0;
  double weight_sum = 0.0;
  int count = 0;
  bool terminated = false;
};

/// Front-to-back alpha compositing of depth-ordered samples. Alphas are
/// clamped to [0, max_alpha]. Stops after the sample that takes
/// transmittance below min_transmittance (0 disables termination).
CompositeResult composite_ray(std::span<const RaySample> samples,
                              double min_transmittance = 0.0,
                              double max_alpha = 0.99);

template <typename Scalar>
struct RenderedImage {
  int width = 0;
  int height = 0;
  Rows3<Scalar> rgb;                   // row y * width + x
  Column<Scalar> final_transmittance;
  Column<Scalar> weight_sum;           // sum of compositing weights
  Eigen::VectorXi contrib_count;       // tile-list entries traversed
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> terminated;

  // identifies the render call the buffers belong to
  Index num_gaussians = 0;
  Camera camera;

  Index pixel_index(int x, int y) const { return Index(y) * width + x; }
};

using RenderedImagef = RenderedImage<float>;

template <typename Scalar>
RenderedImage<Scalar> render(const GaussianCloud<Scalar>& cloud, const Camera& camera,
                             const Rgb& background, const RenderSettings& settings = {});

/// Untiled oracle: every pixel composites every projected splat in global
/// depth order, without early termination.
template <typename Scalar>
RenderedImage<Scalar> reference_render(const GaussianCloud<Scalar>& cloud,
                                       const Camera& camera, const Rgb& background,
                                       const RenderSettings& settings = {});

/// Gradient container; fields hold dL/d(raw field) with the same layout.
template <typename Scalar>
using CloudGradients = GaussianCloud<Scalar>;

/// Gradient of <grad_rgb, render(cloud)> w.r.t. every raw parameter.
/// `forward` must come from render() with the same cloud, camera,
/// background and settings.
template <typename Scalar>
CloudGradients<Scalar> render_backward(const GaussianCloud<Scalar>& cloud,
                                       const Camera& camera, const Rgb& background,
                                       const RenderedImage<Scalar>& forward,
                                       const Rows3<Scalar>& grad_rgb,
                                       const RenderSettings& settings = {});

}  // namespace splatforge
