#include "splatforge/init/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "splatforge/core/math.hpp"
#include "splatforge/init/kdtree.hpp"

namespace splatforge {

void GrowConfig::validate() const {
  if (!(keep_distance > 0.0))
    throw Error(ErrorKind::InvalidParameter, "keep_distance must be > 0");
  if (!(perturb_max >= 0.0))
    throw Error(ErrorKind::InvalidParameter, "perturb_max must be >= 0");
  if (!(bbox_scale > 0.0)) throw Error(ErrorKind::InvalidParameter, "bbox_scale must be > 0");
}

ColoredPointCloud mesh_to_point_cloud(const TriangleMesh& mesh) {
  if (!mesh.vertex_colors)
    throw Error(ErrorKind::MissingAttribute, "mesh has no vertex colors; use random_colors");
  return {mesh.vertices, *mesh.vertex_colors};
}

ColoredPointCloud random_colors(const Rows3<float>& positions, std::uint64_t rng_seed) {
  if (positions.rows() == 0) throw Error(ErrorKind::EmptyInput, "random_colors on an empty cloud");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  ColoredPointCloud out{positions, Rows3<float>(positions.rows(), 3)};
  for (Index i = 0; i < out.colors.size(); ++i) out.colors.data()[i] = unit(rng);
  return out;
}

namespace {

// independent streams for candidate positions and color offsets
constexpr std::uint64_t kCandidateStream = 1;
constexpr std::uint64_t kOffsetStream = 2;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(id)};
  return std::mt19937_64(seq);
}

}  // namespace

Aabb sampling_box(const ColoredPointCloud& seeds, double bbox_scale) {
  const Aabb box = aabb_of(seeds.positions);
  const Eigen::Vector3f center = box.center();
  const Eigen::Vector3f half = 0.5f * float(bbox_scale) * box.extent();
  return {center - half, center + half};
}

Rows3<float> sample_candidates(const Aabb& box, std::size_t count, std::uint64_t rng_seed) {
  std::mt19937_64 rng = stream(rng_seed, kCandidateStream);
  std::uniform_real_distribution<float> axis[3];
  for (int k = 0; k < 3; ++k)
    axis[k] = std::uniform_real_distribution<float>(box.min_bound[k], box.max_bound[k]);
  const Index n = static_cast<Index>(count);
  Rows3<float> out(n, 3);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      out(i, k) = box.max_bound[k] > box.min_bound[k] ? axis[k](rng) : box.min_bound[k];
  return out;
}

GrowResult grow_from_candidates(const ColoredPointCloud& seeds, const Rows3<float>& candidates,
                                const GrowConfig& config) {
  config.validate();
  if (seeds.empty()) throw Error(ErrorKind::EmptyInput, "grow_and_perturb needs seed points");

  GrowResult result;
  result.num_seeds = seeds.size();
  result.sample_box = sampling_box(seeds, config.bbox_scale);

  const KdTree tree(seeds.positions);
  const double keep2 = config.keep_distance * config.keep_distance;
  const Index n = candidates.rows();
  std::vector<Index> nearest(static_cast<std::size_t>(n), -1);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const Neighbor nb = tree.nearest(candidates.row(i).transpose());
    if (nb.squared_distance < keep2) nearest[static_cast<std::size_t>(i)] = nb.index;
  }

  std::vector<Index> kept;
  for (Index i = 0; i < n; ++i)
    if (nearest[static_cast<std::size_t>(i)] >= 0) kept.push_back(i);
  const Index m = seeds.size();
  const Index g = static_cast<Index>(kept.size());

  result.cloud.positions.resize(m + g, 3);
  result.cloud.colors.resize(m + g, 3);
  result.cloud.positions.topRows(m) = seeds.positions;
  result.cloud.colors.topRows(m) = seeds.colors;
  result.offsets.resize(g, 3);
  result.nearest_seed.resize(static_cast<std::size_t>(g));

  std::mt19937_64 rng = stream(config.rng_seed, kOffsetStream);
  std::uniform_real_distribution<float> jitter(0.0f, float(config.perturb_max));
  for (Index j = 0; j < g; ++j) {
    const Index cand = kept[static_cast<std::size_t>(j)];
    const Index seed = nearest[static_cast<std::size_t>(cand)];
    result.nearest_seed[static_cast<std::size_t>(j)] = seed;
    for (int k = 0; k < 3; ++k)
      result.offsets(j, k) = config.perturb_max > 0.0 ? jitter(rng) : 0.0f;
    result.cloud.positions.row(m + j) = candidates.row(cand);
    result.cloud.colors.row(m + j) =
        (seeds.colors.row(seed) + result.offsets.row(j)).cwiseMax(0.0f).cwiseMin(1.0f);
  }
  return result;
}

GrowResult grow_and_perturb(const ColoredPointCloud& seeds, const GrowConfig& config) {
  config.validate();
  if (seeds.empty()) throw Error(ErrorKind::EmptyInput, "grow_and_perturb needs seed points");
  return grow_from_candidates(
      seeds, sample_candidates(sampling_box(seeds, config.bbox_scale), config.num_candidates, config.rng_seed),
      config);
}

std::pair<ColoredPointCloud, Eigen::Vector3f> center_at_origin(const ColoredPointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "center_at_origin on an empty cloud");
  const Eigen::Vector3d mean = cloud.positions.cast<double>().colwise().mean().transpose();
  const Eigen::Vector3f center = mean.cast<float>();
  ColoredPointCloud out = cloud;
  out.positions.rowwise() -= center.transpose();
  return {std::move(out), center};
}

ColoredPointCloud add_ground_plane(const ColoredPointCloud& cloud, double density,
                                   double margin, std::uint64_t rng_seed) {
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "add_ground_plane on an empty cloud");
  if (!(density > 0.0)) throw Error(ErrorKind::InvalidParameter, "ground density must be > 0");
  if (!(margin >= 0.0)) throw Error(ErrorKind::InvalidParameter, "ground margin must be >= 0");

  const Aabb box = aabb_of(cloud.positions);
  const double x0 = box.min_bound.x() - margin, x1 = box.max_bound.x() + margin;
  const double y0 = box.min_bound.y() - margin, y1 = box.max_bound.y() + margin;
  const double area = (x1 - x0) * (y1 - y0);
  const Index count = std::max<Index>(1, static_cast<Index>(std::llround(density * area)));

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index m = cloud.size();
  ColoredPointCloud out;
  out.positions.resize(m + count, 3);
  out.colors.resize(m + count, 3);
  out.positions.topRows(m) = cloud.positions;
  out.colors.topRows(m) = cloud.colors;
  for (Index i = m; i < m + count; ++i) {
    out.positions.row(i) << float(x0 + (x1 - x0) * unit(rng)),
        float(y0 + (y1 - y0) * unit(rng)), box.min_bound.z();
    out.colors.row(i) << float(unit(rng)), float(unit(rng)), float(unit(rng));
  }
  return out;
}

std::vector<double> nearest_neighbor_distances(const Rows3<float>& points) {
  if (points.rows() < 2)
    throw Error(ErrorKind::InsufficientPoints, "nearest-neighbor distance needs >= 2 points");
  const KdTree tree(points);
  std::vector<double> out(static_cast<std::size_t>(points.rows()));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < points.rows(); ++i)
    out[static_cast<std::size_t>(i)] =
        std::sqrt(tree.nearest(points.row(i).transpose(), i).squared_distance);
  return out;
}

GaussianCloudf init_gaussians(const ColoredPointCloud& cloud) {
  if (cloud.size() < 2)
    throw Error(ErrorKind::InsufficientPoints, "init_gaussians needs at least 2 points");
  const std::vector<double> nn = nearest_neighbor_distances(cloud.positions);

  GaussianCloudf g(cloud.size());
  g.positions = cloud.positions;
  g.colors_dc = cloud.colors.unaryExpr([](float c) { return dc_from_rgb(c); });
  g.opacities_raw.setConstant(logit(kInitialOpacity));
  for (Index i = 0; i < g.size(); ++i)
    g.scales_raw.row(i).setConstant(
        std::log(std::max(float(nn[static_cast<std::size_t>(i)]), kMinInitialScale)));
  g.rotations.setZero();
  g.rotations.col(0).setOnes();
  return g;
}

}  // namespace splatforge
