#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "splatforge/core/types.hpp"

namespace splatforge {

struct GrowConfig {
  std::size_t num_candidates = 500000;
  // candidates farther than this from every seed are dropped
  double keep_distance = 0.01;
  // per-channel color offset is drawn from [0, perturb_max)
  double perturb_max = 0.2;
  // bounding box scaled about its center before sampling
  double bbox_scale = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct GrowResult {
  /// seeds followed by the kept grown points
  ColoredPointCloud cloud;
  Index num_seeds = 0;
  /// for each grown point: index of its nearest seed
  std::vector<Index> nearest_seed;
  /// for each grown point: color offset before clamping to [0,1]
  Rows3<float> offsets;
  Aabb sample_box;

  Index num_grown() const { return static_cast<Index>(nearest_seed.size()); }
};

ColoredPointCloud mesh_to_point_cloud(const TriangleMesh& mesh);

/// Uniform [0,1) colors for an uncolored prior.
ColoredPointCloud random_colors(const Rows3<float>& positions, std::uint64_t rng_seed);

/// Seed box scaled by bbox_scale about its center.
Aabb sampling_box(const ColoredPointCloud& seeds, double bbox_scale);

/// Uniform candidates inside `box`; deterministic in `rng_seed`.
Rows3<float> sample_candidates(const Aabb& box, std::size_t count, std::uint64_t rng_seed);

/// Keeps candidates closer than keep_distance to a seed and gives each the
/// nearest seed's color plus a uniform [0, perturb_max) offset per channel.
GrowResult grow_from_candidates(const ColoredPointCloud& seeds, const Rows3<float>& candidates,
                                const GrowConfig& config);

/// Noisy point growing and color perturbation around a seed cloud.
GrowResult grow_and_perturb(const ColoredPointCloud& seeds, const GrowConfig& config);

/// Subtracts the mean position; returns the shifted cloud and the mean.
std::pair<ColoredPointCloud, Eigen::Vector3f> center_at_origin(const ColoredPointCloud& cloud);

/// Appends a randomly colored layer at the bottom (min z) of the cloud,
/// covering its XY footprint grown by `margin` on every side.
ColoredPointCloud add_ground_plane(const ColoredPointCloud& cloud, double density,
                                   double margin, std::uint64_t rng_seed);

inline constexpr float kInitialOpacity = 0.1f;
inline constexpr float kMinInitialScale = 1e-7f;

/// Opacity 0.1, isotropic scale equal to each point's nearest-neighbor
/// distance, identity rotation, colors from the points.
GaussianCloudf init_gaussians(const ColoredPointCloud& cloud);

/// Nearest-neighbor distance of every point to the rest of the cloud.
std::vector<double> nearest_neighbor_distances(const Rows3<float>& points);

}  // namespace splatforge
