#include <doctest.h>

#include <atomic>
#include <cmath>

#include "splatforge/cli/pipeline.hpp"
#include "splatforge/optim/resample.hpp"
#include "splatforge/optim/train.hpp"
#include "support/scenes.hpp"
#include "support/temp_dir.hpp"

using namespace splatforge;
using splatforge::testing::random_cloud;
using splatforge::testing::TempDir;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

/// Small fixed-view training setup at 32^2 render, 16^2 guidance.
TrainConfig small_config(int iterations) {
  TrainConfig c;
  c.iterations = iterations;
  c.batch_size = 2;
  c.render_resolution = 32;
  c.guidance_resolution = 16;
  c.background_mode = BackgroundMode::Fixed;
  c.background = Rgb(0.5f, 0.5f, 0.5f);
  c.rng_seed = 11;
  for (int i = 0; i < 4; ++i) {
    Camera v;
    v.radius = 3.0;
    v.elevation = 20.0;
    v.azimuth = -180.0 + 90.0 * i;
    c.camera.views.push_back(v);
  }
  return c;
}

std::vector<Camera> training_views(const TrainConfig& c) {
  std::vector<Camera> out;
  for (const Camera& v : c.camera.views) out.push_back(training_camera(v, c));
  return out;
}

Rows3<float> guidance_image(const GaussianCloudf& cloud, const Camera& cam, const TrainConfig& c) {
  const RenderedImagef img = render(cloud, cam, c.background, c.render);
  return downscale(img.rgb, cam.width, cam.height, c.guidance_resolution, c.guidance_resolution)
      .cwiseMax(0.0f)
      .cwiseMin(1.0f);
}

void register_targets(MockPredictor& mock, const GaussianCloudf& target, const TrainConfig& c) {
  for (const Camera& cam : training_views(c))
    mock.set_target(cam, guidance_image(target, cam, c), c.guidance_resolution, c.guidance_resolution);
}

double photometric_loss(const GaussianCloudf& cloud, const GaussianCloudf& target, const TrainConfig& c) {
  double loss = 0.0;
  for (const Camera& cam : training_views(c))
    loss += (guidance_image(cloud, cam, c) - guidance_image(target, cam, c)).cast<double>().squaredNorm();
  return loss;
}

float max_abs_diff(const GaussianCloudf& a, const GaussianCloudf& b) {
  float d = 0.0f;
  for (ParamGroup g : kParamGroups)
    d = std::max(d, (group_values(a, g) - group_values(b, g)).abs().maxCoeff());
  return d;
}

bool bit_equal(const GaussianCloudf& a, const GaussianCloudf& b) {
  for (ParamGroup g : kParamGroups) {
    const auto x = group_values(a, g), y = group_values(b, g);
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), std::size_t(x.size()) * 4) != 0)
      return false;
  }
  return true;
}

class FlakyGuidance final : public GuidanceModel {
 public:
  FlakyGuidance(const GuidanceModel& inner, int fail_every) : inner_(inner), fail_every_(fail_every) {}
  ImageBatch pixel_gradient(const GuidanceRequest& r) const override {
    const int n = calls_++;
    if (fail_every_ > 0 && n % fail_every_ == 0) throw Error(ErrorKind::GuidanceFailure, "flaky");
    return inner_.pixel_gradient(r);
  }

 private:
  const GuidanceModel& inner_;
  int fail_every_;
  mutable std::atomic<int> calls_{0};
};

class NanGuidance final : public GuidanceModel {
 public:
  ImageBatch pixel_gradient(const GuidanceRequest& r) const override {
    ImageBatch g(r.images.batch, r.images.height, r.images.width);
    g.data.setConstant(std::numeric_limits<float>::quiet_NaN());
    return g;
  }
};

}  // namespace

TEST_CASE("default training constants") {
  const TrainConfig c;
  CHECK(c.iterations == 1200);
  CHECK(c.batch_size == 4);
  CHECK(c.guidance_scale == 100.0);
  CHECK(c.render_resolution == 1024);
  CHECK(c.guidance_resolution == 512);
  CHECK(c.learning_rates.opacity == 1e-2);
  CHECK(c.learning_rates.position == 5e-5);
  CHECK(c.learning_rates.color == 1.25e-2);
  CHECK(c.learning_rates.scaling == 1e-3);
  CHECK(c.learning_rates.rotation == 1e-2);
  CHECK(c.camera.radius.min == 1.5);
  CHECK(c.camera.radius.max == 4.0);
  CHECK(c.camera.azimuth.min == -180.0);
  CHECK(c.camera.azimuth.max == 180.0);
  CHECK(c.camera.elevation.min == -10.0);
  CHECK(c.camera.elevation.max == 60.0);
  CHECK(c.timesteps.t_min == 0.02);
  CHECK(c.timesteps.t_max == 0.98);
  CHECK(c.timesteps.late_t_max == 0.55);
  CHECK(c.timesteps.switch_iteration == 500);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("shipped default config") {
  const PipelineConfig p =
      load_pipeline_config(std::filesystem::path(SPLATFORGE_SOURCE_DIR) / "configs" / "default.json");
  CHECK(to_json(p.train) == to_json(TrainConfig{}));
  CHECK(p.train.learning_rates.opacity == 1e-2);
  CHECK(p.train.learning_rates.position == 5e-5);
  CHECK(p.train.learning_rates.color == 1.25e-2);
  CHECK(p.train.learning_rates.scaling == 1e-3);
  CHECK(p.train.learning_rates.rotation == 1e-2);
  CHECK(p.train.iterations == 1200);
  CHECK(p.train.batch_size == 4);
  CHECK(p.train.guidance_scale == 100.0);
  CHECK(p.grow.keep_distance == 0.01);
  CHECK(p.grow.perturb_max == 0.2);
}

TEST_CASE("train config json") {
  TrainConfig c = small_config(7);
  c.learning_rates.color = 0.5;
  c.weighting = SdsWeighting::Unit;
  c.timesteps.switch_iteration = 3;
  c.checkpoint_every = 2;
  c.prompt = "a lamp";
  const nlohmann::json doc = to_json(c);
  const TrainConfig back = train_config_from_json(doc);
  CHECK(to_json(back) == doc);
  CHECK(back.camera.views.size() == 4);
  CHECK(back.background_mode == BackgroundMode::Fixed);
  CHECK(back.background == c.background);

  CHECK(to_json(train_config_from_json(nlohmann::json::object())) == to_json(TrainConfig{}));

  const auto config_error = [](nlohmann::json d) {
    return kind_of([&] { train_config_from_json(d); });
  };
  CHECK(config_error({{"iterationz", 3}}) == ErrorKind::Config);
  CHECK(config_error({{"learning_rates", {{"colour", 1.0}}}}) == ErrorKind::Config);
  CHECK(config_error({{"learning_rates", {{"color", -1.0}}}}) == ErrorKind::Config);
  CHECK(config_error({{"guidance_resolution", 2048}}) == ErrorKind::Config);
  CHECK(config_error({{"render_resolution", 1000}}) == ErrorKind::Config);
  CHECK(config_error({{"batch_size", 0}}) == ErrorKind::Config);
  CHECK(config_error({{"background", "plaid"}}) == ErrorKind::Config);
  CHECK(config_error({{"weighting", "cubic"}}) == ErrorKind::Config);
  CHECK(config_error({{"iterations", "many"}}) == ErrorKind::Config);
  CHECK(config_error({{"camera", {{"radius_range", {4.0, 1.5}}}}}) == ErrorKind::Config);
}

TEST_CASE("camera sampling") {
  const TrainConfig c;
  std::mt19937_64 rng(5);
  double az_sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Camera cam = sample_camera(rng, c);
    CHECK(cam.radius >= 1.5);
    CHECK(cam.radius <= 4.0);
    CHECK(cam.elevation >= -10.0);
    CHECK(cam.elevation <= 60.0);
    CHECK(cam.azimuth >= -180.0);
    CHECK(cam.azimuth <= 180.0);
    CHECK(cam.look_at == Eigen::Vector3d::Zero());
    CHECK(cam.width == 1024);
    CHECK(cam.fov_y == 49.0);
    az_sum += cam.azimuth;
  }
  CHECK(std::abs(az_sum / 10000) < 2.0);

  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 50; ++i) CHECK(sample_camera(a, c) == sample_camera(b, c));

  const TrainConfig fixed = small_config(1);
  const std::vector<Camera> views = training_views(fixed);
  std::vector<int> seen(views.size(), 0);
  for (int i = 0; i < 400; ++i) {
    const Camera cam = sample_camera(rng, fixed);
    const auto it = std::find(views.begin(), views.end(), cam);
    REQUIRE(it != views.end());
    ++seen[std::size_t(it - views.begin())];
  }
  for (int n : seen) CHECK(n > 50);
}

TEST_CASE("downscale") {
  CHECK(downscale_factor(1024, 1024, 512, 512) == 2);
  CHECK(downscale_factor(64, 32, 16, 8) == 4);
  CHECK(kind_of([] { downscale_factor(64, 64, 30, 30); }) == ErrorKind::InvalidParameter);
  CHECK(kind_of([] { downscale_factor(64, 64, 32, 16); }) == ErrorKind::InvalidParameter);
  CHECK(kind_of([] { downscale_factor(64, 64, 0, 0); }) == ErrorKind::InvalidParameter);

  const Rows3<float> flat = Rows3<float>::Constant(16 * 16, 3, 0.37f);
  CHECK(downscale(flat, 16, 16, 8, 8).isApproxToConstant(0.37f, 1e-7f));

  Rows3<float> checker(16 * 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) checker.row(y * 16 + x).setConstant(float((x + y) % 2));
  CHECK((downscale(checker, 16, 16, 8, 8).array() == 0.5f).all());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Rows3<float> img(64 * 64, 3);
  for (Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  const Rows3<float> small = downscale(img, 64, 64, 32, 32);
  CHECK(std::abs(small.cast<double>().mean() - img.cast<double>().mean()) < 1e-6);
  // explicit block oracle
  for (int y : {0, 7, 31})
    for (int x : {0, 13, 31}) {
      const Eigen::RowVector3f mean =
          (img.row((2 * y) * 64 + 2 * x) + img.row((2 * y) * 64 + 2 * x + 1) +
           img.row((2 * y + 1) * 64 + 2 * x) + img.row((2 * y + 1) * 64 + 2 * x + 1)) /
          4.0f;
      CHECK((small.row(y * 32 + x) - mean).cwiseAbs().maxCoeff() < 1e-6f);
    }
  CHECK(downscale(img, 64, 64, 64, 64) == img);

  Rows3<float> coarse(32 * 32, 3);
  for (Index i = 0; i < coarse.size(); ++i) coarse.data()[i] = u(rng) - 0.5f;
  const double lhs = (small.cast<double>().array() * coarse.cast<double>().array()).sum();
  const double rhs =
      (img.cast<double>().array() * downscale_adjoint(coarse, 32, 32, 64, 64).cast<double>().array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  CHECK(kind_of([&] { downscale(img, 64, 63, 32, 32); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("adam step") {
  const GaussianCloudf start = random_cloud<float>(1, {.num_gaussians = 6});
  const LearningRates rates;

  SUBCASE("zero gradient leaves parameters") {
    GaussianCloudf p = start, g;
    g.setZero(p.size());
    AdamState s(p.size());
    adam_step(p, g, s, rates);
    CHECK(bit_equal(p, start));
    for (auto n : s.steps) CHECK(n == 1);
  }

  SUBCASE("first step moves by the learning rate against the sign") {
    GaussianCloudf p = start, g = random_cloud<float>(2, {.num_gaussians = 6});
    AdamState s(p.size());
    adam_step(p, g, s, rates);
    for (ParamGroup grp : kParamGroups) {
      const Eigen::ArrayXf expected =
          group_values(start, grp) - float(rates[grp]) * group_values(g, grp).sign();
      CHECK((group_values(p, grp) - expected).abs().maxCoeff() <= 1e-6f * (1.0f + expected.abs().maxCoeff()));
    }
  }

  SUBCASE("matches a scalar recurrence over several steps") {
    GaussianCloudf p = start;
    AdamState s(p.size());
    std::vector<GaussianCloudf> grads;
    for (int k = 0; k < 6; ++k) grads.push_back(random_cloud<float>(10 + std::uint64_t(k), {.num_gaussians = 6}));
    for (const auto& g : grads) adam_step(p, g, s, rates);
    for (ParamGroup grp : kParamGroups) {
      const auto p0 = group_values(start, grp);
      for (Index i = 0; i < p0.size(); ++i) {
        double x = p0[i], m = 0, v = 0;
        for (int k = 0; k < 6; ++k) {
          const double gk = group_values(grads[std::size_t(k)], grp)[i];
          m = 0.9 * m + 0.1 * gk;
          v = 0.999 * v + 0.001 * gk * gk;
          const double mhat = m / (1 - std::pow(0.9, k + 1)), vhat = v / (1 - std::pow(0.999, k + 1));
          x -= rates[grp] * mhat / (std::sqrt(vhat) + 1e-15);
        }
        CHECK(std::abs(group_values(p, grp)[i] - x) <= 1e-5 * (1 + std::abs(x)));
      }
    }
  }

  SUBCASE("non-finite group is skipped alone") {
    GaussianCloudf p = start, g = random_cloud<float>(2, {.num_gaussians = 6});
    g.scales_raw(3, 1) = std::numeric_limits<float>::infinity();
    AdamState s(p.size());
    const AdamStepResult r = adam_step(p, g, s, rates);
    CHECK(r.num_skipped() == 1);
    CHECK(r.skipped[3]);
    CHECK(p.scales_raw == start.scales_raw);
    CHECK(s.first.scales_raw.isZero(0));
    CHECK(s.steps[3] == 0);
    CHECK(s.steps[0] == 1);
    CHECK(p.positions != start.positions);
  }

  GaussianCloudf p = start, g;
  g.setZero(3);
  AdamState s(p.size());
  CHECK(kind_of([&] { adam_step(p, g, s, rates); }) == ErrorKind::ContractViolation);
}

TEST_CASE("batch gradient is the mean of per-view gradients") {
  const TrainConfig c = small_config(1);
  const GaussianCloudf cloud = random_cloud<float>(4, {.num_gaussians = 12});
  std::vector<Camera> cams = training_views(c);
  cams.resize(3);
  const std::vector<Rgb> bgs = {Rgb(0, 0, 0), Rgb(1, 1, 1), Rgb(0.2f, 0.7f, 0.1f)};
  std::vector<RenderedImagef> renders;
  for (std::size_t b = 0; b < 3; ++b) renders.push_back(render(cloud, cams[b], bgs[b]));
  ImageBatch pg = standard_normal(3, 16, 16, 8);

  const GaussianCloudf mean = batch_gradient(cloud, cams, bgs, renders, pg);
  GaussianCloudf sum;
  sum.setZero(cloud.size());
  for (std::size_t b = 0; b < 3; ++b) {
    ImageBatch one(1, 16, 16);
    one.image(0) = pg.image(int(b));
    const GaussianCloudf g = batch_gradient(cloud, {cams[b]}, {bgs[b]}, {renders[b]}, one);
    for (ParamGroup grp : kParamGroups) group_values(sum, grp) += group_values(g, grp) / 3.0f;
  }
  for (ParamGroup grp : kParamGroups) {
    const float scale = 1.0f + group_values(mean, grp).abs().maxCoeff();
    CHECK((group_values(mean, grp) - group_values(sum, grp)).abs().maxCoeff() <= 1e-6f * scale);
  }
  CHECK(kind_of([&] { batch_gradient(cloud, cams, {bgs[0]}, renders, pg); }) == ErrorKind::ContractViolation);
}

TEST_CASE("training loop") {
  const GaussianCloudf cloud = random_cloud<float>(6, {.num_gaussians = 10, .min_scale = 0.1, .max_scale = 0.3,
                                                       .min_opacity = 0.4, .max_opacity = 0.8});

  SUBCASE("zero iterations is the identity") {
    MockPredictor mock;
    const TrainConfig c = small_config(0);
    register_targets(mock, cloud, c);
    CHECK(bit_equal(train(cloud, SdsGuidance(mock), c), cloud));
  }

  SUBCASE("targets equal to the renders are a fixed point") {
    MockPredictor mock;
    const TrainConfig c = small_config(50);
    register_targets(mock, cloud, c);
    const GaussianCloudf out = train(cloud, SdsGuidance(mock, c.schedule()), c);
    CHECK(max_abs_diff(out, cloud) < 1e-4f);
  }

  SUBCASE("photometric descent") {
    GaussianCloudf target = cloud;
    std::mt19937_64 rng(2);
    std::normal_distribution<float> n(0.0f, 0.6f);
    for (Index i = 0; i < target.colors_dc.size(); ++i) target.colors_dc.data()[i] += n(rng);
    for (Index i = 0; i < target.positions.size(); ++i) target.positions.data()[i] += 0.05f * n(rng);

    TrainConfig c = small_config(0);
    MockPredictor mock;
    register_targets(mock, target, c);
    const SdsGuidance guidance(mock, c.schedule(), SdsWeighting::Unit);
    c.weighting = SdsWeighting::Unit;
    const double start = photometric_loss(cloud, target, c);
    double previous = start;
    for (int k : {10, 100}) {
      c.iterations = k;
      const double loss = photometric_loss(train(cloud, guidance, c), target, c);
      CAPTURE(k);
      CHECK(loss < start);
      CHECK(loss < previous);
      previous = loss;
    }
  }
}

TEST_CASE("skipped iterations") {
  const GaussianCloudf cloud = random_cloud<float>(6, {.num_gaussians = 8});
  TrainConfig c = small_config(40);
  MockPredictor mock;
  register_targets(mock, random_cloud<float>(7, {.num_gaussians = 8}), c);
  const SdsGuidance inner(mock, c.schedule());

  SUBCASE("transient failures are counted and tolerated") {
    const FlakyGuidance flaky(inner, 10);
    Trainer trainer(cloud, flaky, c);
    std::vector<IterationMetrics> lines;
    trainer.run({.on_iteration = [&](const IterationMetrics& m) { lines.push_back(m); }});
    CHECK(trainer.state().iteration == 40);
    CHECK(trainer.state().skips == 4);
    CHECK(lines.size() == 40);
    CHECK(lines[0].skipped);
    CHECK(lines[0].grad_norms[0] == 0.0);
    CHECK(!lines[1].skipped);
    CHECK(lines[1].grad_norms[1] > 0.0);
    CHECK(lines.back().skips == 4);
  }

  SUBCASE("persistent failures abort") {
    const FlakyGuidance broken(inner, 1);
    Trainer trainer(cloud, broken, c);
    CHECK(kind_of([&] { trainer.run(); }) == ErrorKind::Aborted);
    CHECK(trainer.state().skips == 5);
    CHECK(bit_equal(trainer.cloud(), cloud));
  }

  SUBCASE("non-finite gradients count as skips") {
    const NanGuidance nan;
    Trainer trainer(cloud, nan, c);
    const IterationMetrics m = trainer.step();
    CHECK(m.skipped);
    CHECK(m.skips == 1);
    CHECK(!m.note.empty());
    CHECK(bit_equal(trainer.cloud(), cloud));
  }

  SUBCASE("other errors propagate") {
    MockPredictor empty;
    CHECK(kind_of([&] { train(cloud, SdsGuidance(empty), c); }) == ErrorKind::MissingTarget);
  }
}

TEST_CASE("metrics line") {
  IterationMetrics m;
  m.iter = 3;
  m.t = 0.25;
  m.grad_norms = {1, 2, 3, 4, 5};
  m.skips = 1;
  const auto doc = nlohmann::json::parse(metrics_line(m));
  CHECK(doc["iter"] == 3);
  CHECK(doc["t"] == 0.25);
  CHECK(doc["grad_norms"]["scaling"] == 4.0);
  CHECK(doc["skips"] == 1);
  CHECK(doc["skipped"] == false);
  CHECK(doc.contains("ms"));
  CHECK(!doc.contains("note"));
}

TEST_CASE("determinism and resume") {
  const GaussianCloudf cloud = random_cloud<float>(8, {.num_gaussians = 10});
  TrainConfig c = small_config(30);
  c.background_mode = BackgroundMode::Random;
  MockPredictor mock;
  register_targets(mock, random_cloud<float>(9, {.num_gaussians = 10}), c);
  const SdsGuidance guidance(mock, c.schedule());

  const GaussianCloudf a = train(cloud, guidance, c);
  const GaussianCloudf b = train(cloud, guidance, c);
  CHECK(bit_equal(a, b));
  CHECK(!bit_equal(a, cloud));

  TempDir dir;
  TrainConfig half = c;
  half.checkpoint_every = 10;
  std::vector<int> saved;
  Trainer first(cloud, guidance, half);
  first.run({.on_checkpoint = [&](const TrainState& s) {
    saved.push_back(s.iteration);
    if (s.iteration == 10) save_checkpoint(dir.path() / "ck.ply", s);
  }});
  CHECK(saved == std::vector<int>{10, 20, 30});
  CHECK(bit_equal(first.cloud(), a));

  const TrainState loaded = load_checkpoint(dir.path() / "ck.ply");
  CHECK(loaded.iteration == 10);
  Trainer second(cloud, guidance, c);
  second.restore(loaded);
  second.run();
  CHECK(second.state().iteration == 30);
  CHECK(bit_equal(second.cloud(), a));

  std::filesystem::remove(checkpoint_state_path(dir.path() / "ck.ply"));
  CHECK(kind_of([&] { load_checkpoint(dir.path() / "ck.ply"); }) == ErrorKind::Io);
}
