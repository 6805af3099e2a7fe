#include "splatforge/cli/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include "splatforge/core/math.hpp"
#include "splatforge/io/image.hpp"
#include "splatforge/io/ply.hpp"
#include "splatforge/optim/resample.hpp"
#include "splatforge/util/json_fields.hpp"

namespace splatforge {

using nlohmann::json;
using util::read_field;
using util::reject_unknown;

namespace {

std::string branch_name(PriorBranch b) {
  return b == PriorBranch::TextToMotion ? "text-to-motion" : "text-to-3d";
}

PriorBranch parse_branch(const std::string& s) {
  if (s == "text-to-3d") return PriorBranch::TextTo3d;
  if (s == "text-to-motion") return PriorBranch::TextToMotion;
  throw Error(ErrorKind::Config, "prior branch must be 'text-to-3d' or 'text-to-motion'");
}

json vec_json(const Eigen::Vector3f& v) { return {v.x(), v.y(), v.z()}; }

std::string numbered(const char* prefix, int digits, int i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*d%s", prefix, digits, i, suffix);
  return buf;
}

ClientOptions client_options(const GuidanceConfig& g) {
  return {resolve_guidance_url(g.url), g.timeout_seconds, g.attempts, g.backoff_seconds};
}

ColoredPointCloud load_prior(const PipelineConfig& config) {
  const PriorConfig& prior = config.prior;
  const bool motion = prior.branch == PriorBranch::TextToMotion;
  if (prior.source == "remote") {
    const GuidanceClient client(client_options(config.guidance));
    client.health();
    const std::string& prompt =
        motion && !config.motion_prompt.empty() ? config.motion_prompt : config.prompt;
    if (prompt.empty()) throw Error(ErrorKind::Config, "remote prior needs a prompt");
    const PriorResult result = client.generate_prior(prompt, branch_name(prior.branch), config.seed);
    io::PlyData ply;
    try {
      ply = io::parse_ply(result.ply);
    } catch (const Error& e) {
      throw Error(ErrorKind::Service, std::string("prior service returned an invalid PLY: ") + e.what());
    }
    if (result.colors_present) return io::point_cloud_from_ply(ply);
    return random_colors(io::mesh_from_ply(ply).vertices, config.seed + 1);
  }
  const TriangleMesh mesh = io::read_mesh(prior.source);
  if (motion || !mesh.vertex_colors) {
    if (!motion)
      throw Error(ErrorKind::MissingAttribute,
                  prior.source + " has no vertex colors; use the text-to-motion branch for uncolored priors");
    return random_colors(mesh.vertices, config.seed + 1);
  }
  return mesh_to_point_cloud(mesh);
}

}  // namespace

void PipelineConfig::validate() const {
  if (prior.source.empty()) throw Error(ErrorKind::Config, "prior.source is required");
  if (!(prior.ground_density > 0.0)) throw Error(ErrorKind::Config, "ground_density must be > 0");
  if (!(prior.ground_margin >= 0.0)) throw Error(ErrorKind::Config, "ground_margin must be >= 0");
  try {
    grow.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  train.validate();
  if (guidance.attempts < 1) throw Error(ErrorKind::Config, "guidance attempts must be >= 1");
  if (!(guidance.timeout_seconds > 0.0)) throw Error(ErrorKind::Config, "guidance timeout must be > 0");
  if (guidance.mock_views < 1) throw Error(ErrorKind::Config, "mock views must be >= 1");
  if (output_dir.empty()) throw Error(ErrorKind::Config, "output_dir must not be empty");
}

json to_json(const PipelineConfig& c) {
  return {
      {"prompt", c.prompt},
      {"motion_prompt", c.motion_prompt},
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"prior",
       {{"source", c.prior.source},
        {"branch", branch_name(c.prior.branch)},
        {"ground", c.prior.ground},
        {"ground_density", c.prior.ground_density},
        {"ground_margin", c.prior.ground_margin}}},
      {"grow",
       {{"num_candidates", c.grow.num_candidates},
        {"keep_distance", c.grow.keep_distance},
        {"perturb_max", c.grow.perturb_max},
        {"bbox_scale", c.grow.bbox_scale}}},
      {"train", to_json(c.train)},
      {"guidance",
       {{"mode", c.guidance.mode == GuidanceMode::Mock ? "mock" : "remote"},
        {"url", c.guidance.url},
        {"timeout_seconds", c.guidance.timeout_seconds},
        {"attempts", c.guidance.attempts},
        {"backoff_seconds", c.guidance.backoff_seconds},
        {"mock_strength", c.guidance.mock_strength},
        {"mock_target", c.guidance.mock_target},
        {"mock_views", c.guidance.mock_views}}},
  };
}

PipelineConfig pipeline_config_from_json(const json& doc) {
  PipelineConfig c;
  try {
    reject_unknown(doc, {"prompt", "motion_prompt", "seed", "output_dir", "prior", "grow", "train", "guidance"},
                   "config");
    read_field(doc, "prompt", c.prompt);
    read_field(doc, "motion_prompt", c.motion_prompt);
    read_field(doc, "seed", c.seed);
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("prior")) {
      const json& p = doc.at("prior");
      reject_unknown(p, {"source", "branch", "ground", "ground_density", "ground_margin"}, "prior");
      read_field(p, "source", c.prior.source);
      if (p.contains("branch")) c.prior.branch = parse_branch(p.at("branch").get<std::string>());
      read_field(p, "ground", c.prior.ground);
      read_field(p, "ground_density", c.prior.ground_density);
      read_field(p, "ground_margin", c.prior.ground_margin);
    }
    if (doc.contains("grow")) {
      const json& g = doc.at("grow");
      reject_unknown(g, {"num_candidates", "keep_distance", "perturb_max", "bbox_scale"}, "grow");
      read_field(g, "num_candidates", c.grow.num_candidates);
      read_field(g, "keep_distance", c.grow.keep_distance);
      read_field(g, "perturb_max", c.grow.perturb_max);
      read_field(g, "bbox_scale", c.grow.bbox_scale);
    }
    if (doc.contains("train")) c.train = train_config_from_json(doc.at("train"));
    if (doc.contains("guidance")) {
      const json& g = doc.at("guidance");
      reject_unknown(g, {"mode", "url", "timeout_seconds", "attempts", "backoff_seconds", "mock_strength",
                         "mock_target", "mock_views"},
                     "guidance");
      if (g.contains("mode")) {
        const std::string mode = g.at("mode").get<std::string>();
        if (mode != "mock" && mode != "remote")
          throw Error(ErrorKind::Config, "guidance mode must be 'mock' or 'remote'");
        c.guidance.mode = mode == "mock" ? GuidanceMode::Mock : GuidanceMode::Remote;
      }
      read_field(g, "url", c.guidance.url);
      read_field(g, "timeout_seconds", c.guidance.timeout_seconds);
      read_field(g, "attempts", c.guidance.attempts);
      read_field(g, "backoff_seconds", c.guidance.backoff_seconds);
      read_field(g, "mock_strength", c.guidance.mock_strength);
      read_field(g, "mock_target", c.guidance.mock_target);
      read_field(g, "mock_views", c.guidance.mock_views);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(doc);
}

json InitReport::to_json() const {
  json out = {
      {"seed_count", seed_count},
      {"grown_count", grown_count},
      {"ground_count", ground_count},
      {"num_gaussians", num_gaussians},
      {"bbox", {{"min", vec_json(bbox.min_bound)}, {"max", vec_json(bbox.max_bound)}}},
      {"nn_distance", {{"min", nn_min}, {"max", nn_max}, {"mean", nn_mean}}},
  };
  if (center) out["center"] = vec_json(*center);
  return out;
}

InitReport cmd_init(const PipelineConfig& config) {
  config.validate();
  InitReport report;
  ColoredPointCloud prior = load_prior(config);
  if (config.prior.branch == PriorBranch::TextToMotion) {
    auto [centered, center] = center_at_origin(prior);
    prior = std::move(centered);
    report.center = center;
  }
  if (config.prior.ground) {
    const Index before = prior.size();
    prior = add_ground_plane(prior, config.prior.ground_density, config.prior.ground_margin,
                             config.seed + 2);
    report.ground_count = prior.size() - before;
  }

  GrowConfig grow = config.grow;
  grow.rng_seed = config.seed;
  const GrowResult grown = grow_and_perturb(prior, grow);
  const GaussianCloudf cloud = init_gaussians(grown.cloud);
  const std::vector<double> nn = nearest_neighbor_distances(grown.cloud.positions);

  report.seed_count = grown.num_seeds;
  report.grown_count = grown.num_grown();
  report.num_gaussians = cloud.size();
  report.bbox = aabb_of(grown.cloud.positions);
  report.nn_min = *std::min_element(nn.begin(), nn.end());
  report.nn_max = *std::max_element(nn.begin(), nn.end());
  double sum = 0.0;
  for (double d : nn) sum += d;
  report.nn_mean = sum / double(nn.size());

  io::write_splat_ply(config.output_dir / "init.ply", cloud);
  io::write_file(config.output_dir / "init_report.json", report.to_json().dump(2) + "\n");
  return report;
}

TrainOutcome cmd_train(const PipelineConfig& config, const std::filesystem::path& input,
                       const std::optional<std::filesystem::path>& resume) {
  config.train.validate();
  TrainConfig train = config.train;
  if (train.prompt.empty()) train.prompt = config.prompt;
  std::optional<TrainState> restored;
  GaussianCloudf cloud;
  if (resume) {
    restored = load_checkpoint(*resume);
    cloud = restored->cloud;
  } else {
    cloud = io::read_splat_ply(input);
  }

  std::unique_ptr<MockPredictor> mock;
  std::unique_ptr<GuidanceClient> client;
  std::unique_ptr<GuidanceModel> model;
  if (config.guidance.mode == GuidanceMode::Mock) {
    if (train.camera.views.empty()) {
      const int n = config.guidance.mock_views;
      for (int i = 0; i < n; ++i) {
        Camera view;
        view.radius = 0.5 * (train.camera.radius.min + train.camera.radius.max);
        view.elevation = 0.5 * (train.camera.elevation.min + train.camera.elevation.max);
        view.azimuth = -180.0 + 360.0 * i / n;
        train.camera.views.push_back(view);
      }
    }
    const GaussianCloudf target = config.guidance.mock_target.empty()
                                      ? (resume ? io::read_splat_ply(input) : cloud)
                                      : io::read_splat_ply(config.guidance.mock_target);
    mock = std::make_unique<MockPredictor>(config.guidance.mock_strength);
    for (const Camera& view : train.camera.views) {
      const Camera cam = training_camera(view, train);
      const RenderedImagef img = render(target, cam, train.background, train.render);
      mock->set_target(cam,
                       downscale(img.rgb, cam.width, cam.height, train.guidance_resolution,
                                 train.guidance_resolution),
                       train.guidance_resolution, train.guidance_resolution);
    }
    model = std::make_unique<SdsGuidance>(*mock, train.schedule(), train.weighting);
  } else {
    client = std::make_unique<GuidanceClient>(client_options(config.guidance));
    client->health();
    model = std::make_unique<RemotePixelGradient>(*client);
  }

  Trainer trainer(std::move(cloud), *model, train);
  if (restored) trainer.restore(std::move(*restored));

  const std::filesystem::path metrics_path = config.output_dir / "metrics.ndjson";
  std::filesystem::create_directories(config.output_dir);
  std::ofstream metrics(metrics_path, resume ? std::ios::app : std::ios::trunc);
  if (!metrics) throw Error(ErrorKind::Io, "cannot open " + metrics_path.string());

  TrainCallbacks callbacks;
  callbacks.on_iteration = [&](const IterationMetrics& m) {
    metrics << metrics_line(m) << '\n';
    metrics.flush();
  };
  callbacks.on_checkpoint = [&](const TrainState& state) {
    save_checkpoint(config.output_dir / "checkpoints" / numbered("iter_", 6, state.iteration, ".ply"), state);
  };
  trainer.run(callbacks);
  if (!metrics) throw Error(ErrorKind::Io, "failed writing " + metrics_path.string());

  TrainOutcome outcome;
  outcome.iterations_run = trainer.state().iteration;
  outcome.skips = trainer.state().skips;
  outcome.final_ply = config.output_dir / "final.ply";
  save_checkpoint(outcome.final_ply, trainer.state());
  return outcome;
}

std::vector<Camera> turntable_cameras(const RenderOptions& o) {
  if (o.size < 1) throw Error(ErrorKind::Config, "render size must be >= 1");
  if (o.views < 1) throw Error(ErrorKind::Config, "render views must be >= 1");
  Camera base;
  base.radius = o.radius;
  base.elevation = o.elevation;
  base.fov_y = o.fov_y;
  base.width = base.height = o.size;
  try {
    base.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  std::vector<Camera> cams;
  if (o.azimuth) {
    base.azimuth = *o.azimuth;
    cams.push_back(base);
    return cams;
  }
  for (int i = 0; i < o.views; ++i) {
    base.azimuth = -180.0 + 360.0 * i / o.views;
    cams.push_back(base);
  }
  return cams;
}

std::optional<double> cmd_render(const std::filesystem::path& input,
                                 const std::filesystem::path& output_dir, const RenderOptions& options,
                                 std::ostream& log) {
  const GaussianCloudf cloud = io::read_splat_ply(input);
  const std::vector<Camera> cams = turntable_cameras(options);
  if (options.bench) {
    if (options.bench_frames < 1) throw Error(ErrorKind::Config, "bench frames must be >= 1");
    render(cloud, cams.front(), options.background);  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < options.bench_frames; ++i) render(cloud, cams.front(), options.background);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double fps = options.bench_frames / secs;
    log << "bench: " << options.bench_frames << " frames of " << cloud.size() << " gaussians at "
        << options.size << "x" << options.size << " in " << secs << " s (" << fps << " fps)\n";
    return fps;
  }
  std::filesystem::create_directories(output_dir);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const RenderedImagef img = render(cloud, cams[i], options.background);
    const std::string stem = numbered("view_", 3, int(i), "");
    io::write_png(output_dir / (stem + ".png"), img.rgb, img.width, img.height);
    if (options.dump) {
      const std::size_t n = std::size_t(img.width) * std::size_t(img.height);
      io::write_raw_floats(output_dir / (stem + "_rgb.f32"), img.rgb.data(), 3 * n);
      io::write_raw_floats(output_dir / (stem + "_transmittance.f32"), img.final_transmittance.data(), n);
      const Eigen::VectorXf count = img.contrib_count.cast<float>();
      io::write_raw_floats(output_dir / (stem + "_contrib.f32"), count.data(), n);
    }
  }
  log << "wrote " << cams.size() << " views to " << output_dir.string() << "\n";
  return std::nullopt;
}

json cmd_info(const std::filesystem::path& input) {
  const GaussianCloudf cloud = io::read_splat_ply(input);
  const ActivatedGaussians<float> act = activate_params(cloud);
  const Aabb box = aabb_of(cloud.positions);
  auto stats = [](const auto& values) {
    return json{{"min", double(values.minCoeff())},
                {"max", double(values.maxCoeff())},
                {"mean", double(values.template cast<double>().mean())}};
  };
  return {
      {"file", input.string()},
      {"num_gaussians", cloud.size()},
      {"bbox", {{"min", vec_json(box.min_bound)}, {"max", vec_json(box.max_bound)}}},
      {"opacity", stats(act.opacities)},
      {"scale", stats(act.scales)},
  };
}

}  // namespace splatforge
