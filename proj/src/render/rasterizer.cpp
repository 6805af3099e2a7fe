#include "splatforge/render/rasterizer.hpp"

#include <algorithm>
#include <cmath>

namespace splatforge {

namespace {

struct CompositeState {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double transmittance = 1.0;
  double weight_sum = 0.0;

  void step(const Eigen::Vector3d& c, double alpha) {
    const double w = alpha * transmittance;
    color += w * c;
    weight_sum += w;
    transmittance *= 1.0 - alpha;
  }
};

template <typename Scalar>
bool in_rect(const Splat2D<Scalar>& s, int x, int y) {
  return x >= s.x_min && x <= s.x_max && y >= s.y_min && y <= s.y_max;
}

template <typename Scalar>
struct Frame {
  CameraModel<Scalar> camera;
  std::vector<Splat2D<Scalar>> splats;  // sorted by (depth, source_index)
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::uint32_t> tile_offsets;
  std::vector<std::uint32_t> tile_entries;  // indices into splats

  std::span<const std::uint32_t> tile(int t) const {
    return {tile_entries.data() + tile_offsets[t],
            tile_entries.data() + tile_offsets[t + 1]};
  }
};

template <typename Scalar>
Frame<Scalar> project_all(const GaussianCloud<Scalar>& cloud, const Camera& camera,
                          const RenderSettings& settings) {
  cloud.validate();
  Frame<Scalar> frame;
  frame.camera = camera_model<Scalar>(camera);
  const Index n = cloud.size();

  std::vector<std::optional<Splat2D<Scalar>>> projected(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const Vec3<Scalar> scale = cloud.scales_raw.row(i).transpose().array().exp();
    const Vec4<Scalar> rot = cloud.rotations.row(i).transpose();
    const Mat3<Scalar> cov = covariance_from_scale_rotation<Scalar>(scale, rot);
    const Vec3<Scalar> color = (Scalar(0.5) + Scalar(kSH0) * cloud.colors_dc.row(i).array())
                                   .cwiseMax(Scalar(0))
                                   .cwiseMin(Scalar(1))
                                   .transpose();
    auto splat = project_gaussian<Scalar>(frame.camera, cloud.positions.row(i).transpose(),
                                          cov, color, sigmoid(cloud.opacities_raw[i]),
                                          settings);
    if (splat) splat->source_index = i;
    projected[static_cast<size_t>(i)] = splat;
  }
  std::vector<std::pair<Scalar, Index>> order;  // (depth, source index)
  order.reserve(projected.size());
  for (const auto& s : projected)
    if (s) order.emplace_back(s->depth, s->source_index);
  std::sort(order.begin(), order.end());
  frame.splats.reserve(order.size());
  for (const auto& [depth, i] : order) frame.splats.push_back(*projected[static_cast<size_t>(i)]);
  return frame;
}

// Splats are binned in global depth order, so each tile list comes out sorted.
template <typename Scalar>
void bin_tiles(Frame<Scalar>& frame, int width, int height, int tile_size) {
  frame.tiles_x = (width + tile_size - 1) / tile_size;
  frame.tiles_y = (height + tile_size - 1) / tile_size;
  const int ntiles = frame.tiles_x * frame.tiles_y;
  std::vector<std::uint32_t> counts(static_cast<size_t>(ntiles) + 1, 0);
  for (const auto& s : frame.splats)
    for (int ty = s.y_min / tile_size; ty <= s.y_max / tile_size; ++ty)
      for (int tx = s.x_min / tile_size; tx <= s.x_max / tile_size; ++tx)
        ++counts[static_cast<size_t>(ty * frame.tiles_x + tx) + 1];
  for (int t = 0; t < ntiles; ++t) counts[t + 1] += counts[t];
  frame.tile_offsets = counts;
  frame.tile_entries.resize(counts.back());
  std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
  for (std::uint32_t k = 0; k < frame.splats.size(); ++k) {
    const auto& s = frame.splats[k];
    for (int ty = s.y_min / tile_size; ty <= s.y_max / tile_size; ++ty)
      for (int tx = s.x_min / tile_size; tx <= s.x_max / tile_size; ++tx)
        frame.tile_entries[cursor[static_cast<size_t>(ty * frame.tiles_x + tx)]++] = k;
  }
}

template <typename Scalar>
inline KernelSample kernel_sample(const Splat2D<Scalar>& s, Scalar px, Scalar py,
                                  double max_alpha) {
  KernelSample out;
  const Scalar dx = s.mean2d.x() - px;
  const Scalar dy = s.mean2d.y() - py;
  const Scalar power =
      s.conic[0] * dx * dx + Scalar(2) * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
  if (!(power < Scalar(kSupportPower))) return out;
  const double m = double(power);
  double g = double(std::exp(Scalar(-0.5) * power));
  double dg = -0.5 * g;
  if (m > kTaperStart) {
    // C2 smootherstep down to zero at the support boundary
    const double width = kSupportPower - kTaperStart;
    const double u = (m - kTaperStart) / width;
    const double taper = 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    const double dtaper = -30.0 * u * u * (1.0 - u) * (1.0 - u) / width;
    dg = dg * taper + g * dtaper;
    g *= taper;
  }
  out.weight = g;
  out.dweight_dpower = dg;
  const double a = double(s.opacity) * g;
  if (a > max_alpha) {
    out.alpha = max_alpha;
    out.clamped = true;
  } else {
    out.alpha = std::max(a, 0.0);
  }
  return out;
}

struct RowEntry {
  int index;
  int x_min, x_max;
};

// Pixel columns of one row whose centers may lie inside the support ellipse,
// padded by a small margin and clipped to the splat rectangle.
template <typename Scalar>
std::pair<int, int> support_span(const Splat2D<Scalar>& s, double py) {
  const double a = s.conic[0], b = s.conic[1], c = s.conic[2];
  const double dy = double(s.mean2d.y()) - py;
  const double disc = b * b * dy * dy - a * (c * dy * dy - kSupportPower);
  if (!(a > 0.0)) return {s.x_min, s.x_max};
  if (disc < 0.0) return {1, 0};
  const double root = std::sqrt(disc);
  const double mx = double(s.mean2d.x());
  const double lo = mx - (-b * dy + root) / a - 0.5;
  const double hi = mx - (-b * dy - root) / a - 0.5;
  constexpr double margin = 1e-3;
  const double x_lo = std::max(double(s.x_min), std::ceil(lo - margin));
  const double x_hi = std::min(double(s.x_max), std::floor(hi + margin));
  if (!(x_lo <= x_hi)) return {1, 0};
  return {static_cast<int>(x_lo), static_cast<int>(x_hi)};
}

template <typename Scalar>
RenderedImage<Scalar> allocate_image(const GaussianCloud<Scalar>& cloud,
                                     const Camera& camera) {
  RenderedImage<Scalar> img;
  img.width = camera.width;
  img.height = camera.height;
  const Index npix = Index(camera.width) * camera.height;
  img.rgb.resize(npix, 3);
  img.final_transmittance.resize(npix);
  img.weight_sum.resize(npix);
  img.contrib_count.resize(npix);
  img.terminated.resize(npix);
  img.num_gaussians = cloud.size();
  img.camera = camera;
  return img;
}

template <typename Scalar>
void store_pixel(RenderedImage<Scalar>& img, Index idx, const CompositeState& st,
                 const Eigen::Vector3d& bg, int count, bool terminated) {
  img.rgb.row(idx) = (st.color + st.transmittance * bg).cast<Scalar>().transpose();
  img.final_transmittance[idx] = Scalar(st.transmittance);
  img.weight_sum[idx] = Scalar(st.weight_sum);
  img.contrib_count[idx] = count;
  img.terminated[idx] = terminated ? 1 : 0;
}

struct SplatGrad {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector3d conic = Eigen::Vector3d::Zero();
  double opacity = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();

  SplatGrad& operator+=(const SplatGrad& o) {
    mean += o.mean;
    conic += o.conic;
    opacity += o.opacity;
    color += o.color;
    return *this;
  }
};

}  // namespace

template <typename Scalar>
std::optional<Splat2D<Scalar>> project_gaussian(const CameraModel<Scalar>& camera,
                                                const Vec3<Scalar>& position,
                                                const Mat3<Scalar>& cov3d,
                                                const Vec3<Scalar>& color,
                                                Scalar opacity,
                                                const RenderSettings& settings) {
  const Vec3<Scalar> t = camera.to_camera(position);
  if (!(t.z() > Scalar(settings.near_plane))) return std::nullopt;
  const Scalar inv_z = Scalar(1) / t.z();

  Eigen::Matrix<Scalar, 2, 3> jac;
  jac << camera.fx * inv_z, 0, -camera.fx * t.x() * inv_z * inv_z,  //
      0, camera.fy * inv_z, -camera.fy * t.y() * inv_z * inv_z;
  const Mat3<Scalar> view_cov = camera.rotation * cov3d * camera.rotation.transpose();

  Splat2D<Scalar> s;
  s.cov2d = jac * view_cov * jac.transpose();
  s.cov2d(0, 0) += Scalar(settings.low_pass);
  s.cov2d(1, 1) += Scalar(settings.low_pass);
  s.cov2d(1, 0) = s.cov2d(0, 1);
  const Scalar det = s.cov2d.determinant();
  if (!(det > Scalar(0)) || !s.cov2d.allFinite()) return std::nullopt;
  s.conic = Vec3<Scalar>(s.cov2d(1, 1) / det, -s.cov2d(0, 1) / det, s.cov2d(0, 0) / det);
  s.mean2d = Vec2<Scalar>(camera.fx * t.x() * inv_z + camera.cx,
                          camera.fy * t.y() * inv_z + camera.cy);
  s.depth = t.z();
  s.color = color;
  s.opacity = opacity;
  s.source_index = -1;

  const double support = std::sqrt(kSupportPower);
  const double rx = support * std::sqrt(double(s.cov2d(0, 0)));
  const double ry = support * std::sqrt(double(s.cov2d(1, 1)));
  const double mx = double(s.mean2d.x());
  const double my = double(s.mean2d.y());
  if (!std::isfinite(mx + my + rx + ry)) return std::nullopt;
  const auto clip = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, -1.0, double(hi)));
  };
  s.x_min = std::max(0, clip(std::ceil(mx - rx - 0.5) - 1, camera.width));
  s.x_max = std::min(camera.width - 1, clip(std::floor(mx + rx - 0.5) + 1, camera.width));
  s.y_min = std::max(0, clip(std::ceil(my - ry - 0.5) - 1, camera.height));
  s.y_max = std::min(camera.height - 1, clip(std::floor(my + ry - 0.5) + 1, camera.height));
  if (s.x_min > s.x_max || s.y_min > s.y_max) return std::nullopt;
  return s;
}

template <typename Scalar>
KernelSample evaluate_splat(const Splat2D<Scalar>& s, Scalar px, Scalar py,
                            double max_alpha) {
  return kernel_sample(s, px, py, max_alpha);
}

CompositeResult composite_ray(std::span<const RaySample> samples, double min_transmittance,
                              double max_alpha) {
  CompositeState st;
  CompositeResult out;
  for (const auto& sample : samples) {
    ++out.count;
    const double alpha = std::clamp(sample.alpha, 0.0, max_alpha);
    if (alpha <= 0.0) continue;
    st.step(sample.color, alpha);
    if (st.transmittance < min_transmittance) {
      out.terminated = true;
      break;
    }
  }
  out.color = st.color;
  out.transmittance = st.transmittance;
  out.weight_sum = st.weight_sum;
  return out;
}

template <typename Scalar>
RenderedImage<Scalar> render(const GaussianCloud<Scalar>& cloud, const Camera& camera,
                             const Rgb& background, const RenderSettings& settings) {
  Frame<Scalar> frame = project_all(cloud, camera, settings);
  const int ts = settings.tile_size;
  bin_tiles(frame, camera.width, camera.height, ts);
  RenderedImage<Scalar> img = allocate_image(cloud, camera);
  const Eigen::Vector3d bg = background.cast<double>();
  const int ntiles = frame.tiles_x * frame.tiles_y;

#pragma omp parallel
  {
    std::vector<Splat2D<Scalar>> local;  // tile list gathered contiguously
    std::vector<RowEntry> row;           // entries of `local` covering the current row
    std::vector<CompositeState> states;
    std::vector<int> counts;
#pragma omp for schedule(dynamic)
    for (int t = 0; t < ntiles; ++t) {
      const int x0 = (t % frame.tiles_x) * ts;
      const int y0 = (t / frame.tiles_x) * ts;
      const auto list = frame.tile(t);
      const int n = static_cast<int>(list.size());
      local.clear();
      for (const auto k : list) local.push_back(frame.splats[k]);
      for (int y = y0; y < std::min(y0 + ts, camera.height); ++y) {
        row.clear();
        const double py_center = double(y) + 0.5;
        for (int k = 0; k < n; ++k) {
          const auto& s = local[static_cast<size_t>(k)];
          if (y < s.y_min || y > s.y_max) continue;
          const auto span = support_span(s, py_center);
          if (span.first <= span.second) row.push_back({k, span.first, span.second});
        }
        // scanline: each entry updates the pixels of its span, in depth order
        const int x1 = std::min(x0 + ts, camera.width);
        const int row_width = x1 - x0;
        const Scalar py = Scalar(y) + Scalar(0.5);
        states.assign(static_cast<size_t>(row_width), CompositeState{});
        counts.assign(static_cast<size_t>(row_width), n);
        int active = row_width;
        for (const RowEntry& e : row) {
          const int k = e.index;
          const auto& s = local[static_cast<size_t>(k)];
          const int lo = std::max(e.x_min, x0);
          const int hi = std::min(e.x_max, x1 - 1);
          for (int x = lo; x <= hi; ++x) {
            const auto p = static_cast<size_t>(x - x0);
            if (states[p].transmittance < settings.min_transmittance) continue;
            const KernelSample ks = kernel_sample(s, Scalar(x) + Scalar(0.5), py,
                                                  settings.max_alpha);
            if (ks.alpha <= 0.0) continue;
            states[p].step(s.color.template cast<double>(), ks.alpha);
            if (states[p].transmittance < settings.min_transmittance) {
              counts[p] = k + 1;
              --active;
            }
          }
          if (active == 0) break;
        }
        for (int x = x0; x < x1; ++x) {
          const auto p = static_cast<size_t>(x - x0);
          store_pixel(img, img.pixel_index(x, y), states[p], bg, counts[p],
                      states[p].transmittance < settings.min_transmittance);
        }
      }
    }
  }
  return img;
}

template <typename Scalar>
RenderedImage<Scalar> reference_render(const GaussianCloud<Scalar>& cloud,
                                       const Camera& camera, const Rgb& background,
                                       const RenderSettings& settings) {
  const Frame<Scalar> frame = project_all(cloud, camera, settings);
  RenderedImage<Scalar> img = allocate_image(cloud, camera);
  const Eigen::Vector3d bg = background.cast<double>();
  const int n = static_cast<int>(frame.splats.size());

#pragma omp parallel
  {
    std::vector<RaySample> samples(frame.splats.size());
#pragma omp for schedule(static)
    for (int y = 0; y < camera.height; ++y) {
      for (int x = 0; x < camera.width; ++x) {
        const Scalar px = Scalar(x) + Scalar(0.5);
        const Scalar py = Scalar(y) + Scalar(0.5);
        for (int k = 0; k < n; ++k) {
          const auto& s = frame.splats[k];
          samples[k] = {s.color.template cast<double>(),
                        evaluate_splat(s, px, py, settings.max_alpha).alpha};
        }
        const CompositeResult r = composite_ray(samples, 0.0, settings.max_alpha);
        CompositeState st;
        st.color = r.color;
        st.transmittance = r.transmittance;
        st.weight_sum = r.weight_sum;
        store_pixel(img, img.pixel_index(x, y), st, bg, r.count, false);
      }
    }
  }
  return img;
}

template <typename Scalar>
CloudGradients<Scalar> render_backward(const GaussianCloud<Scalar>& cloud,
                                       const Camera& camera, const Rgb& background,
                                       const RenderedImage<Scalar>& forward,
                                       const Rows3<Scalar>& grad_rgb,
                                       const RenderSettings& settings) {
  const Index npix = Index(camera.width) * camera.height;
  if (forward.num_gaussians != cloud.size() || !(forward.camera == camera) ||
      forward.rgb.rows() != npix || forward.contrib_count.rows() != npix)
    throw Error(ErrorKind::ContractViolation,
                "render_backward: forward buffers do not match this cloud/camera");
  if (grad_rgb.rows() != npix)
    throw Error(ErrorKind::ContractViolation, "render_backward: grad_rgb has wrong size");

  Frame<Scalar> frame = project_all(cloud, camera, settings);
  const int ts = settings.tile_size;
  bin_tiles(frame, camera.width, camera.height, ts);
  const Eigen::Vector3d bg = background.cast<double>();
  const int ntiles = frame.tiles_x * frame.tiles_y;

  // One slot per (tile, entry); reduced in a fixed order below.
  std::vector<SplatGrad> entry_grads(frame.tile_entries.size());

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < ntiles; ++t) {
    const int x0 = (t % frame.tiles_x) * ts;
    const int y0 = (t / frame.tiles_x) * ts;
    const auto list = frame.tile(t);
    const std::uint32_t base = frame.tile_offsets[t];
    for (int y = y0; y < std::min(y0 + ts, camera.height); ++y) {
      for (int x = x0; x < std::min(x0 + ts, camera.width); ++x) {
        const Index idx = forward.pixel_index(x, y);
        const Eigen::Vector3d g = grad_rgb.row(idx).transpose().template cast<double>();
        if (g.isZero(0.0)) continue;
        const Scalar px = Scalar(x) + Scalar(0.5);
        const Scalar py = Scalar(y) + Scalar(0.5);
        const int count = std::min<int>(forward.contrib_count[idx], int(list.size()));

        double transmittance = double(forward.final_transmittance[idx]);
        Eigen::Vector3d behind = bg;  // normalized color of everything behind
        for (int k = count - 1; k >= 0; --k) {
          const auto& s = frame.splats[list[k]];
          if (!in_rect(s, x, y)) continue;
          const KernelSample ks = evaluate_splat(s, px, py, settings.max_alpha);
          if (ks.alpha <= 0.0) continue;
          const Eigen::Vector3d c = s.color.template cast<double>();
          const double t_before = transmittance / (1.0 - ks.alpha);

          SplatGrad& sg = entry_grads[base + k];
          sg.color += ks.alpha * t_before * g;
          const double dl_dalpha = t_before * (c - behind).dot(g);
          behind = ks.alpha * c + (1.0 - ks.alpha) * behind;
          transmittance = t_before;
          if (ks.clamped) continue;

          sg.opacity += dl_dalpha * ks.weight;
          const double dl_dpower = dl_dalpha * double(s.opacity) * ks.dweight_dpower;
          const double dx = double(s.mean2d.x() - px);
          const double dy = double(s.mean2d.y() - py);
          const double a = s.conic[0], b = s.conic[1], cc = s.conic[2];
          sg.mean += dl_dpower * 2.0 * Eigen::Vector2d(a * dx + b * dy, b * dx + cc * dy);
          sg.conic += dl_dpower * Eigen::Vector3d(dx * dx, 2.0 * dx * dy, dy * dy);
        }
      }
    }
  }

  std::vector<SplatGrad> splat_grads(frame.splats.size());
  for (size_t e = 0; e < frame.tile_entries.size(); ++e)
    splat_grads[frame.tile_entries[e]] += entry_grads[e];

  CloudGradients<Scalar> grads;
  grads.setZero(cloud.size());
  const CameraModel<double> cam = camera_model<double>(camera);
  const int nsplats = static_cast<int>(frame.splats.size());

#pragma omp parallel for schedule(static)
  for (int k = 0; k < nsplats; ++k) {
    const Splat2D<Scalar>& s = frame.splats[k];
    const SplatGrad& sg = splat_grads[k];
    const Index i = s.source_index;

    // conic -> cov2d
    Eigen::Matrix2d conic;
    conic << s.conic[0], s.conic[1], s.conic[1], s.conic[2];
    Eigen::Matrix2d g_conic;
    g_conic << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
    const Eigen::Matrix2d g_cov2d = -conic * g_conic * conic;

    const Eigen::Vector3d mu = cloud.positions.row(i).transpose().template cast<double>();
    const Eigen::Vector3d t = cam.to_camera(mu);
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx * iz, 0, -cam.fx * t.x() * iz2, 0, cam.fy * iz, -cam.fy * t.y() * iz2;

    const Eigen::Vector3d scale =
        cloud.scales_raw.row(i).transpose().template cast<double>().array().exp();
    const Eigen::Vector4d q = cloud.rotations.row(i).transpose().template cast<double>();
    const Eigen::Matrix3d rq = rotation_from_quaternion<double>(q);
    const Eigen::Matrix3d m3 = rq * scale.asDiagonal();
    const Eigen::Matrix3d cov3d = m3 * m3.transpose();
    const Eigen::Matrix3d view_cov = cam.rotation * cov3d * cam.rotation.transpose();

    const Eigen::Matrix3d g_view = jac.transpose() * g_cov2d * jac;
    const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g_cov2d * jac * view_cov;

    Eigen::Vector3d g_t(cam.fx * iz * sg.mean.x(), cam.fy * iz * sg.mean.y(),
                        -cam.fx * t.x() * iz2 * sg.mean.x() -
                            cam.fy * t.y() * iz2 * sg.mean.y());
    g_t.x() += g_jac(0, 2) * (-cam.fx * iz2);
    g_t.y() += g_jac(1, 2) * (-cam.fy * iz2);
    g_t.z() += g_jac(0, 0) * (-cam.fx * iz2) + g_jac(1, 1) * (-cam.fy * iz2) +
               g_jac(0, 2) * (2.0 * cam.fx * t.x() * iz2 * iz) +
               g_jac(1, 2) * (2.0 * cam.fy * t.y() * iz2 * iz);
    grads.positions.row(i) = (cam.rotation.transpose() * g_t).cast<Scalar>().transpose();

    const Eigen::Matrix3d g_cov3d = cam.rotation.transpose() * g_view * cam.rotation;
    const Eigen::Matrix3d g_m3 = 2.0 * g_cov3d * m3;
    const Eigen::Vector3d g_scale = (rq.array() * g_m3.array()).colwise().sum().transpose();
    grads.scales_raw.row(i) = (g_scale.array() * scale.array()).cast<Scalar>().transpose();
    const Eigen::Matrix3d g_rq = g_m3 * scale.asDiagonal();
    grads.rotations.row(i) =
        rotation_from_quaternion_backward<double>(q, g_rq).cast<Scalar>().transpose();

    const double opacity = sigmoid(double(cloud.opacities_raw[i]));
    grads.opacities_raw[i] = Scalar(sg.opacity * opacity * (1.0 - opacity));

    for (int ch = 0; ch < 3; ++ch) {
      const double raw = 0.5 + kSH0 * double(cloud.colors_dc(i, ch));
      grads.colors_dc(i, ch) = (raw > 0.0 && raw < 1.0) ? Scalar(kSH0 * sg.color[ch]) : Scalar(0);
    }
  }
  return grads;
}

#define SPLATFORGE_INSTANTIATE(S)                                                        \
  template std::optional<Splat2D<S>> project_gaussian<S>(                                \
      const CameraModel<S>&, const Vec3<S>&, const Mat3<S>&, const Vec3<S>&, S,          \
      const RenderSettings&);                                                            \
  template KernelSample evaluate_splat<S>(const Splat2D<S>&, S, S, double);              \
  template RenderedImage<S> render<S>(const GaussianCloud<S>&, const Camera&, const Rgb&, \
                                      const RenderSettings&);                            \
  template RenderedImage<S> reference_render<S>(const GaussianCloud<S>&, const Camera&,  \
                                                const Rgb&, const RenderSettings&);      \
  template CloudGradients<S> render_backward<S>(const GaussianCloud<S>&, const Camera&,  \
                                                const Rgb&, const RenderedImage<S>&,     \
                                                const Rows3<S>&, const RenderSettings&);

SPLATFORGE_INSTANTIATE(float)
SPLATFORGE_INSTANTIATE(double)

#undef SPLATFORGE_INSTANTIATE

}  // namespace splatforge
