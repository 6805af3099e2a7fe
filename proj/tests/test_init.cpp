#include <doctest.h>

#include <cmath>
#include <random>

#include "splatforge/core/math.hpp"
#include "splatforge/init/initialization.hpp"
#include "splatforge/init/kdtree.hpp"
#include "splatforge/io/ply.hpp"
#include "support/brute_force.hpp"

using namespace splatforge;
using splatforge::testing::brute_nearest;

namespace {

Rows3<float> uniform_points(std::uint64_t seed, Index n, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Rows3<float> p(n, 3);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

ColoredPointCloud colored(Rows3<float> positions, std::uint64_t seed) {
  return random_colors(positions, seed);
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::ContractViolation;
}

}  // namespace

TEST_CASE("kd-tree agrees with brute force exactly") {
  const Rows3<float> points = uniform_points(1, 1000);
  const Rows3<float> queries = uniform_points(2, 1000, -0.1f, 1.1f);
  const KdTree tree(points);
  for (Index i = 0; i < queries.rows(); ++i) {
    const Eigen::Vector3f q = queries.row(i).transpose();
    const Neighbor a = tree.nearest(q);
    const Neighbor b = brute_nearest(points, q);
    CHECK(a.index == b.index);
    CHECK(a.squared_distance == b.squared_distance);
  }
  for (Index i = 0; i < points.rows(); i += 7) {
    const Neighbor a = tree.nearest(points.row(i).transpose(), i);
    const Neighbor b = brute_nearest(points, points.row(i).transpose(), i);
    CHECK(a.index == b.index);
  }
}

TEST_CASE("kd-tree breaks ties by smallest index") {
  // integer lattice with duplicates: many equidistant candidates
  Rows3<float> grid(2 * 125, 3);
  for (int copy = 0; copy < 2; ++copy)
    for (int i = 0; i < 125; ++i) grid.row(copy * 125 + i) << float(i % 5), float((i / 5) % 5), float(i / 25);
  const KdTree tree(grid, 2);
  const Rows3<float> queries = uniform_points(3, 2000, -1.0f, 5.0f);
  for (Index i = 0; i < queries.rows(); ++i) {
    Eigen::Vector3f q = queries.row(i).transpose();
    if (i % 2 == 0) q = (2.0f * q).array().round() / 2.0f;  // lattice midpoints
    const Neighbor a = tree.nearest(q);
    const Neighbor b = brute_nearest(grid, q);
    CHECK(a.index == b.index);
    CHECK(a.squared_distance == b.squared_distance);
  }
  CHECK(kind_of([] { KdTree(Rows3<float>(0, 3)).nearest(Eigen::Vector3f::Zero()); }) == ErrorKind::EmptyInput);
}

TEST_CASE("mesh to point cloud") {
  TriangleMesh cube;
  cube.vertices.resize(8, 3);
  for (int i = 0; i < 8; ++i) cube.vertices.row(i) << float(i & 1), float((i >> 1) & 1), float(i >> 2);
  cube.vertex_colors = Rows3<float>(8, 3);
  cube.vertex_colors->rowwise() = Eigen::RowVector3f(1, 0, 0);
  const ColoredPointCloud pc = mesh_to_point_cloud(cube);
  CHECK(pc.size() == 8);
  CHECK(pc.positions == cube.vertices);
  CHECK((pc.colors.col(0).array() == 1.0f).all());
  CHECK((pc.colors.rightCols(2).array() == 0.0f).all());

  TriangleMesh big;
  big.vertices = uniform_points(4, 100);
  big.vertex_colors = uniform_points(5, 100);
  const ColoredPointCloud from_big = mesh_to_point_cloud(big);
  CHECK(from_big.size() == 100);
  CHECK(from_big.positions == big.vertices);

  const TriangleMesh reread = io::mesh_from_ply(io::parse_ply(
      io::encode_mesh_ply(big, io::PlyFormat::BinaryLittleEndian)));
  CHECK(mesh_to_point_cloud(reread).positions == from_big.positions);

  big.vertex_colors.reset();
  CHECK(kind_of([&] { mesh_to_point_cloud(big); }) == ErrorKind::MissingAttribute);
}

TEST_CASE("random colors") {
  const Rows3<float> p = uniform_points(6, 4);
  CHECK(random_colors(p, 7).colors == random_colors(p, 7).colors);
  CHECK(random_colors(p, 7).positions == p);

  const ColoredPointCloud many = random_colors(uniform_points(8, 10000), 9);
  for (int c = 0; c < 3; ++c) {
    const double mean = many.colors.col(c).cast<double>().mean();
    CHECK(mean >= 0.45);
    CHECK(mean <= 0.55);
  }
  CHECK(many.colors.minCoeff() >= 0.0f);
  CHECK(many.colors.maxCoeff() < 1.0f);
  CHECK(kind_of([] { random_colors(Rows3<float>(0, 3), 1); }) == ErrorKind::EmptyInput);
}

TEST_CASE("grow and perturb") {
  const ColoredPointCloud seeds = colored(uniform_points(10, 1000), 11);

  SUBCASE("no candidates leaves the seeds untouched") {
    GrowConfig cfg;
    cfg.num_candidates = 0;
    const GrowResult r = grow_and_perturb(seeds, cfg);
    CHECK(r.cloud.positions == seeds.positions);
    CHECK(r.cloud.colors == seeds.colors);
    CHECK(r.num_grown() == 0);
  }

  SUBCASE("candidates beyond the threshold are all dropped") {
    ColoredPointCloud one{Rows3<float>::Zero(1, 3), Rows3<float>::Constant(1, 3, 0.5f)};
    Rows3<float> sphere(500, 3);
    std::mt19937_64 rng(12);
    std::normal_distribution<float> normal;
    for (Index i = 0; i < sphere.rows(); ++i) {
      Eigen::Vector3f d(normal(rng), normal(rng), normal(rng));
      sphere.row(i) = 0.02f * d.normalized().transpose();
    }
    const GrowResult r = grow_from_candidates(one, sphere, GrowConfig{});
    CHECK(r.num_grown() == 0);
    CHECK(r.cloud.size() == 1);
  }

  SUBCASE("kept set equals the brute-force filter exactly") {
    GrowConfig cfg;
    cfg.num_candidates = 100000;
    cfg.keep_distance = 0.03;
    cfg.rng_seed = 13;
    const GrowResult r = grow_and_perturb(seeds, cfg);
    const Rows3<float> candidates =
        sample_candidates(sampling_box(seeds, cfg.bbox_scale), cfg.num_candidates, cfg.rng_seed);

    std::vector<Index> kept, nearest;
    for (Index i = 0; i < candidates.rows(); ++i) {
      const Neighbor nb = brute_nearest(seeds.positions, candidates.row(i).transpose());
      if (nb.squared_distance < cfg.keep_distance * cfg.keep_distance) {
        kept.push_back(i);
        nearest.push_back(nb.index);
      }
    }
    REQUIRE(r.num_grown() == Index(kept.size()));
    CHECK(r.num_grown() > 100);
    CHECK(r.cloud.size() == seeds.size() + r.num_grown());
    CHECK(r.cloud.positions.topRows(seeds.size()) == seeds.positions);
    CHECK(r.cloud.colors.topRows(seeds.size()) == seeds.colors);
    int mismatches = 0;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const Index row = seeds.size() + Index(j);
      mismatches += r.cloud.positions.row(row) != candidates.row(kept[j]);
      mismatches += r.nearest_seed[j] != nearest[j];
      const Eigen::Vector3f seed_pos = seeds.positions.row(nearest[j]).transpose();
      mismatches += !(std::sqrt(squared_distance(r.cloud.positions.row(row).transpose(), seed_pos)) <
                      cfg.keep_distance);
      const Eigen::RowVector3f off = r.offsets.row(Index(j));
      mismatches += (off.array() < 0.0f).any() || (off.array() > float(cfg.perturb_max)).any();
      const Eigen::RowVector3f expected =
          (seeds.colors.row(nearest[j]) + off).cwiseMax(0.0f).cwiseMin(1.0f);
      mismatches += r.cloud.colors.row(row) != expected;
    }
    CHECK(mismatches == 0);
    CHECK(r.cloud.colors.minCoeff() >= 0.0f);
    CHECK(r.cloud.colors.maxCoeff() <= 1.0f);

    const GrowResult again = grow_and_perturb(seeds, cfg);
    CHECK(again.cloud.positions == r.cloud.positions);
    CHECK(again.cloud.colors == r.cloud.colors);
    for (Index i = 0; i < candidates.rows(); ++i)
      CHECK(r.sample_box.contains(candidates.row(i).transpose()));
  }

  SUBCASE("bbox scale widens the sampling box about its center") {
    const Aabb unit = sampling_box(seeds, 1.0);
    const Aabb wide = sampling_box(seeds, 2.0);
    CHECK((wide.center() - unit.center()).norm() < 1e-6f);
    CHECK((wide.extent() - 2.0f * unit.extent()).norm() < 1e-5f);
  }

  SUBCASE("errors") {
    CHECK(kind_of([] { grow_and_perturb(ColoredPointCloud{}, GrowConfig{}); }) == ErrorKind::EmptyInput);
    GrowConfig bad;
    bad.keep_distance = 0;
    CHECK(kind_of([&] { grow_and_perturb(seeds, bad); }) == ErrorKind::InvalidParameter);
  }
}

TEST_CASE("center at origin") {
  ColoredPointCloud two{Rows3<float>(2, 3), Rows3<float>::Zero(2, 3)};
  two.positions << 1, 1, 1, 3, 1, 1;
  const auto [centered, center] = center_at_origin(two);
  CHECK(center == Eigen::Vector3f(2, 1, 1));
  CHECK(centered.positions.row(0) == Eigen::RowVector3f(-1, 0, 0));
  CHECK(centered.positions.row(1) == Eigen::RowVector3f(1, 0, 0));

  const ColoredPointCloud cloud = colored(uniform_points(14, 500, 2.0f, 5.0f), 15);
  const auto [once, c1] = center_at_origin(cloud);
  CHECK(once.positions.cast<double>().colwise().mean().norm() < 1e-5);
  const auto [twice, c2] = center_at_origin(once);
  CHECK(c2.norm() < 1e-5f);
  CHECK((twice.positions - once.positions).cwiseAbs().maxCoeff() < 1e-5f);
  CHECK(kind_of([] { center_at_origin(ColoredPointCloud{}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("ground plane") {
  ColoredPointCloud square{Rows3<float>(4, 3), Rows3<float>::Constant(4, 3, 0.3f)};
  square.positions << 0, 0, 0.5f, 1, 0, 1, 0, 1, 2, 1, 1, 0.25f;
  const ColoredPointCloud g = add_ground_plane(square, 100.0, 0.0, 1);
  REQUIRE(g.size() == 104);
  CHECK(g.positions.topRows(4) == square.positions);
  CHECK(g.colors.topRows(4) == square.colors);
  for (Index i = 4; i < g.size(); ++i) {
    CHECK(g.positions(i, 2) == 0.25f);
    CHECK(g.positions(i, 0) >= 0.0f);
    CHECK(g.positions(i, 0) <= 1.0f);
  }
  CHECK(g.colors.bottomRows(100).minCoeff() >= 0.0f);
  CHECK(g.colors.bottomRows(100).maxCoeff() <= 1.0f);

  const ColoredPointCloud margin = add_ground_plane(square, 100.0, 0.5, 1);
  CHECK(margin.size() == 4 + 400);
  CHECK(margin.positions.bottomRows(400).col(0).minCoeff() < 0.0f);
  CHECK(add_ground_plane(square, 1e-9, 0.0, 1).size() == 5);
  CHECK(kind_of([&] { add_ground_plane(square, 0.0, 0.0, 1); }) == ErrorKind::InvalidParameter);
  CHECK(kind_of([&] { add_ground_plane(square, -1.0, 0.0, 1); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("gaussian initialization") {
  ColoredPointCloud two{Rows3<float>(2, 3), Rows3<float>(2, 3)};
  two.positions << 0, 0, 0, 0.5f, 0, 0;
  two.colors << 0.2f, 0.4f, 0.6f, 1, 0, 0.5f;
  const GaussianCloudf g = init_gaussians(two);
  const auto act = activate_params(g);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(act.opacities[i] - 0.1f) < 1e-6f);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(act.scales(i, k) - 0.5f) < 1e-6f);
    CHECK(g.rotations.row(i) == Eigen::RowVector4f(1, 0, 0, 0));
  }
  CHECK((act.colors - two.colors).cwiseAbs().maxCoeff() < 1e-6f);
  CHECK(g.positions == two.positions);

  ColoredPointCloud lattice{Rows3<float>(64, 3), Rows3<float>::Constant(64, 3, 0.5f)};
  for (int i = 0; i < 64; ++i) lattice.positions.row(i) << 0.25f * float(i % 4), 0.25f * float((i / 4) % 4), 0.25f * float(i / 16);
  const auto lat = activate_params(init_gaussians(lattice));
  CHECK((lat.scales.array() - 0.25f).abs().maxCoeff() < 1e-6f);

  const ColoredPointCloud random = colored(uniform_points(16, 500), 17);
  const auto act_r = activate_params(init_gaussians(random));
  int mismatches = 0;
  for (Index i = 0; i < random.size(); ++i) {
    const double d = std::sqrt(brute_nearest(random.positions, random.positions.row(i).transpose(), i).squared_distance);
    for (int k = 0; k < 3; ++k) mismatches += std::abs(act_r.scales(i, k) - d) > 1e-6;
    mismatches += std::abs(act_r.opacities[i] - 0.1f) > 1e-6f;
  }
  CHECK(mismatches == 0);

  ColoredPointCloud dup{Rows3<float>::Zero(3, 3), Rows3<float>::Zero(3, 3)};
  const auto act_d = activate_params(init_gaussians(dup));
  CHECK(((act_d.scales.array() - kMinInitialScale).abs() < 1e-6f * kMinInitialScale).all());

  CHECK(kind_of([] {
          init_gaussians({Rows3<float>::Zero(1, 3), Rows3<float>::Zero(1, 3)});
        }) == ErrorKind::InsufficientPoints);
}
