#include "splatforge/optim/train.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "splatforge/io/ply.hpp"
#include "splatforge/optim/resample.hpp"
#include "splatforge/util/base64.hpp"
#include "splatforge/util/json_fields.hpp"

namespace splatforge {

using nlohmann::json;
using util::read_field;
using util::reject_unknown;

namespace {

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || !(r.min < r.max))
    throw Error(ErrorKind::Config, std::string(name) + " range must satisfy min < max");
}

Range read_range(const json& obj, const char* key, Range fallback) {
  if (!obj.contains(key)) return fallback;
  const auto v = obj.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw Error(ErrorKind::Config, std::string(key) + " must have two entries");
  return {v[0], v[1]};
}

json floats_json(const GaussianCloudf& cloud) {
  json out = json::object();
  for (ParamGroup g : kParamGroups) {
    const auto values = group_values(cloud, g);
    out[std::string(group_name(g))] = util::base64_encode(
        util::float32_le_bytes({values.data(), std::size_t(values.size())}));
  }
  return out;
}

void floats_from_json(const json& obj, GaussianCloudf& cloud) {
  for (ParamGroup g : kParamGroups) {
    auto values = group_values(cloud, g);
    const std::vector<float> decoded = util::floats_from_float32_le(
        util::base64_decode(obj.at(std::string(group_name(g))).get<std::string>()));
    if (Index(decoded.size()) != values.size())
      throw Error(ErrorKind::Parse, "checkpoint moments do not match the cloud size");
    values = Eigen::Map<const Eigen::ArrayXf>(decoded.data(), values.size());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) throw Error(ErrorKind::Config, "iterations must be >= 0");
  if (batch_size < 1) throw Error(ErrorKind::Config, "batch_size must be >= 1");
  if (!(guidance_scale >= 0.0)) throw Error(ErrorKind::Config, "guidance_scale must be >= 0");
  if (render_resolution < 1 || guidance_resolution < 1 || guidance_resolution > render_resolution)
    throw Error(ErrorKind::Config, "resolutions must satisfy 1 <= guidance <= render");
  if (render_resolution % guidance_resolution != 0)
    throw Error(ErrorKind::Config, "render_resolution must be a multiple of guidance_resolution");
  if (camera.views.empty()) {
    check_range(camera.radius, "radius");
    check_range(camera.azimuth, "azimuth");
    check_range(camera.elevation, "elevation");
    if (!(camera.radius.min > 0.0)) throw Error(ErrorKind::Config, "radius must be > 0");
  }
  if (!(camera.fov_y > 0.0 && camera.fov_y < 180.0))
    throw Error(ErrorKind::Config, "fov_y must lie in (0, 180)");
  learning_rates.validate();
  adam.validate();
  try {
    timesteps.validate();
    schedule();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  if (!(max_skip_fraction >= 0.0)) throw Error(ErrorKind::Config, "max_skip_fraction must be >= 0");
  if (checkpoint_every < 0) throw Error(ErrorKind::Config, "checkpoint_every must be >= 0");
  if (background_mode == BackgroundMode::Fixed &&
      ((background.array() < 0.0f).any() || (background.array() > 1.0f).any()))
    throw Error(ErrorKind::Config, "background color must lie in [0,1]");
}

json to_json(const TrainConfig& c) {
  json views = json::array();
  for (const Camera& v : c.camera.views)
    views.push_back({{"radius", v.radius}, {"azimuth", v.azimuth}, {"elevation", v.elevation}});
  return {
      {"iterations", c.iterations},
      {"batch_size", c.batch_size},
      {"guidance_scale", c.guidance_scale},
      {"render_resolution", c.render_resolution},
      {"guidance_resolution", c.guidance_resolution},
      {"camera",
       {{"radius_range", {c.camera.radius.min, c.camera.radius.max}},
        {"azimuth_range", {c.camera.azimuth.min, c.camera.azimuth.max}},
        {"elevation_range", {c.camera.elevation.min, c.camera.elevation.max}},
        {"fov_y", c.camera.fov_y},
        {"views", views}}},
      {"learning_rates",
       {{"opacity", c.learning_rates.opacity},
        {"position", c.learning_rates.position},
        {"color", c.learning_rates.color},
        {"scaling", c.learning_rates.scaling},
        {"rotation", c.learning_rates.rotation}}},
      {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
      {"timesteps",
       {{"t_min", c.timesteps.t_min},
        {"t_max", c.timesteps.t_max},
        {"late_t_max", c.timesteps.late_t_max},
        {"switch_iteration", c.timesteps.switch_iteration}}},
      {"noise_schedule",
       {{"num_train_steps", c.num_train_steps},
        {"beta_start", c.beta_start},
        {"beta_end", c.beta_end}}},
      {"weighting", c.weighting == SdsWeighting::Unit ? "unit" : "one_minus_alpha_bar"},
      {"rng_seed", c.rng_seed},
      {"background", c.background_mode == BackgroundMode::Random
                         ? json("random")
                         : json{c.background.x(), c.background.y(), c.background.z()}},
      {"prompt", c.prompt},
      {"max_skip_fraction", c.max_skip_fraction},
      {"checkpoint_every", c.checkpoint_every},
  };
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig c;
  try {
    reject_unknown(doc,
                   {"iterations", "batch_size", "guidance_scale", "render_resolution",
                    "guidance_resolution", "camera", "learning_rates", "adam", "timesteps",
                    "noise_schedule", "weighting", "rng_seed", "background", "prompt",
                    "max_skip_fraction", "checkpoint_every"},
                   "train config");
    read_field(doc, "iterations", c.iterations);
    read_field(doc, "batch_size", c.batch_size);
    read_field(doc, "guidance_scale", c.guidance_scale);
    read_field(doc, "render_resolution", c.render_resolution);
    read_field(doc, "guidance_resolution", c.guidance_resolution);
    read_field(doc, "rng_seed", c.rng_seed);
    read_field(doc, "prompt", c.prompt);
    read_field(doc, "max_skip_fraction", c.max_skip_fraction);
    read_field(doc, "checkpoint_every", c.checkpoint_every);
    if (doc.contains("camera")) {
      const json& cam = doc.at("camera");
      reject_unknown(cam, {"radius_range", "azimuth_range", "elevation_range", "fov_y", "views"},
                     "camera");
      c.camera.radius = read_range(cam, "radius_range", c.camera.radius);
      c.camera.azimuth = read_range(cam, "azimuth_range", c.camera.azimuth);
      c.camera.elevation = read_range(cam, "elevation_range", c.camera.elevation);
      read_field(cam, "fov_y", c.camera.fov_y);
      if (cam.contains("views"))
        for (const json& v : cam.at("views")) {
          reject_unknown(v, {"radius", "azimuth", "elevation"}, "camera view");
          Camera view;
          view.radius = v.at("radius").get<double>();
          view.azimuth = v.at("azimuth").get<double>();
          view.elevation = v.at("elevation").get<double>();
          c.camera.views.push_back(view);
        }
    }
    if (doc.contains("learning_rates")) {
      const json& lr = doc.at("learning_rates");
      reject_unknown(lr, {"opacity", "position", "color", "scaling", "rotation"}, "learning_rates");
      read_field(lr, "opacity", c.learning_rates.opacity);
      read_field(lr, "position", c.learning_rates.position);
      read_field(lr, "color", c.learning_rates.color);
      read_field(lr, "scaling", c.learning_rates.scaling);
      read_field(lr, "rotation", c.learning_rates.rotation);
    }
    if (doc.contains("adam")) {
      const json& a = doc.at("adam");
      reject_unknown(a, {"beta1", "beta2", "epsilon"}, "adam");
      read_field(a, "beta1", c.adam.beta1);
      read_field(a, "beta2", c.adam.beta2);
      read_field(a, "epsilon", c.adam.epsilon);
    }
    if (doc.contains("timesteps")) {
      const json& t = doc.at("timesteps");
      reject_unknown(t, {"t_min", "t_max", "late_t_max", "switch_iteration"}, "timesteps");
      read_field(t, "t_min", c.timesteps.t_min);
      read_field(t, "t_max", c.timesteps.t_max);
      read_field(t, "late_t_max", c.timesteps.late_t_max);
      read_field(t, "switch_iteration", c.timesteps.switch_iteration);
    }
    if (doc.contains("noise_schedule")) {
      const json& s = doc.at("noise_schedule");
      reject_unknown(s, {"num_train_steps", "beta_start", "beta_end"}, "noise_schedule");
      read_field(s, "num_train_steps", c.num_train_steps);
      read_field(s, "beta_start", c.beta_start);
      read_field(s, "beta_end", c.beta_end);
    }
    if (doc.contains("weighting")) {
      const std::string w = doc.at("weighting").get<std::string>();
      if (w == "unit")
        c.weighting = SdsWeighting::Unit;
      else if (w == "one_minus_alpha_bar")
        c.weighting = SdsWeighting::OneMinusAlphaBar;
      else
        throw Error(ErrorKind::Config, "weighting must be 'unit' or 'one_minus_alpha_bar'");
    }
    if (doc.contains("background")) {
      const json& bg = doc.at("background");
      if (bg.is_string()) {
        if (bg.get<std::string>() != "random")
          throw Error(ErrorKind::Config, "background must be 'random' or an RGB triple");
        c.background_mode = BackgroundMode::Random;
      } else {
        const auto rgb = bg.get<std::vector<float>>();
        if (rgb.size() != 3) throw Error(ErrorKind::Config, "background must have three channels");
        c.background_mode = BackgroundMode::Fixed;
        c.background = Rgb(rgb[0], rgb[1], rgb[2]);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Camera training_camera(const Camera& view, const TrainConfig& config) {
  Camera cam;
  cam.radius = view.radius;
  cam.azimuth = view.azimuth;
  cam.elevation = view.elevation;
  cam.look_at = view.look_at;
  cam.fov_y = config.camera.fov_y;
  cam.width = cam.height = config.render_resolution;
  return cam;
}

Camera sample_camera(std::mt19937_64& rng, const TrainConfig& config) {
  const CameraSampling& s = config.camera;
  if (!s.views.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, s.views.size() - 1);
    return training_camera(s.views[pick(rng)], config);
  }
  Camera view;
  view.radius = std::uniform_real_distribution<double>(s.radius.min, s.radius.max)(rng);
  view.azimuth = std::uniform_real_distribution<double>(s.azimuth.min, s.azimuth.max)(rng);
  view.elevation = std::uniform_real_distribution<double>(s.elevation.min, s.elevation.max)(rng);
  return training_camera(view, config);
}

std::string metrics_line(const IterationMetrics& m) {
  json norms = json::object();
  for (int g = 0; g < kNumParamGroups; ++g)
    norms[std::string(group_name(kParamGroups[std::size_t(g)]))] = m.grad_norms[std::size_t(g)];
  json line = {{"iter", m.iter}, {"t", m.t},         {"grad_norms", norms},
               {"skips", m.skips}, {"skipped", m.skipped}, {"ms", m.ms}};
  if (!m.note.empty()) line["note"] = m.note;
  return line.dump();
}

GaussianCloudf batch_gradient(const GaussianCloudf& cloud, const std::vector<Camera>& cameras,
                              const std::vector<Rgb>& backgrounds,
                              const std::vector<RenderedImagef>& renders,
                              const ImageBatch& pixel_grads, const RenderSettings& settings) {
  const std::size_t batch = cameras.size();
  if (batch == 0 || backgrounds.size() != batch || renders.size() != batch ||
      pixel_grads.batch != int(batch))
    throw Error(ErrorKind::ContractViolation, "batch_gradient: batch sizes differ");
  GaussianCloudf sum;
  sum.setZero(cloud.size());
  for (std::size_t b = 0; b < batch; ++b) {
    const Rows3<float> coarse = pixel_grads.image(int(b));
    const Rows3<float> fine = downscale_adjoint(coarse, pixel_grads.width, pixel_grads.height,
                                                cameras[b].width, cameras[b].height);
    const GaussianCloudf g =
        render_backward(cloud, cameras[b], backgrounds[b], renders[b], fine, settings);
    sum.positions += g.positions;
    sum.colors_dc += g.colors_dc;
    sum.opacities_raw += g.opacities_raw;
    sum.scales_raw += g.scales_raw;
    sum.rotations += g.rotations;
  }
  const float inv = 1.0f / float(batch);
  sum.positions *= inv;
  sum.colors_dc *= inv;
  sum.opacities_raw *= inv;
  sum.scales_raw *= inv;
  sum.rotations *= inv;
  return sum;
}

Trainer::Trainer(GaussianCloudf cloud, const GuidanceModel& guidance, TrainConfig config)
    : guidance_(guidance), config_(std::move(config)) {
  config_.validate();
  cloud.validate();
  state_.adam = AdamState(cloud.size());
  state_.cloud = std::move(cloud);
  state_.rng.seed(config_.rng_seed);
}

void Trainer::restore(TrainState state) {
  state.cloud.validate();
  if (state.adam.first.size() != state.cloud.size() || state.adam.second.size() != state.cloud.size())
    throw Error(ErrorKind::Parse, "checkpoint optimizer state does not match the cloud");
  state_ = std::move(state);
}

IterationMetrics Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  IterationMetrics m;
  m.iter = state_.iteration;
  std::mt19937_64& rng = state_.rng;
  const int batch = config_.batch_size;

  m.t = sample_timestep(state_.iteration, rng, config_.timesteps);
  std::vector<Camera> cameras(static_cast<std::size_t>(batch));
  std::vector<Rgb> backgrounds(std::size_t(batch), config_.background);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (int b = 0; b < batch; ++b) {
    cameras[std::size_t(b)] = sample_camera(rng, config_);
    if (config_.background_mode == BackgroundMode::Random)
      for (int k = 0; k < 3; ++k) backgrounds[std::size_t(b)][k] = unit(rng);
  }
  const std::uint64_t noise_seed = rng();

  const int res = config_.render_resolution, gres = config_.guidance_resolution;
  GuidanceRequest request;
  request.images = ImageBatch(batch, gres, gres);
  request.cameras = cameras;
  request.prompt = config_.prompt;
  request.t = m.t;
  request.guidance_scale = config_.guidance_scale;
  request.seed = noise_seed;
  std::vector<RenderedImagef> renders;
  renders.reserve(std::size_t(batch));
  for (int b = 0; b < batch; ++b) {
    renders.push_back(render(state_.cloud, cameras[std::size_t(b)], backgrounds[std::size_t(b)],
                             config_.render));
    request.images.image(b) =
        downscale(renders.back().rgb, res, res, gres, gres).cwiseMax(0.0f).cwiseMin(1.0f);
  }

  bool skipped = false;
  try {
    const ImageBatch pixel_grads = guidance_.pixel_gradient(request);
    if (!pixel_grads.same_shape(request.images))
      throw Error(ErrorKind::GuidanceFailure, "guidance gradient has the wrong shape");
    const GaussianCloudf grads =
        batch_gradient(state_.cloud, cameras, backgrounds, renders, pixel_grads, config_.render);
    for (int g = 0; g < kNumParamGroups; ++g)
      m.grad_norms[std::size_t(g)] =
          group_values(grads, kParamGroups[std::size_t(g)]).cast<double>().matrix().norm();
    const AdamStepResult step =
        adam_step(state_.cloud, grads, state_.adam, config_.learning_rates, config_.adam);
    if (step.num_skipped() > 0) {
      skipped = true;
      m.note = "non-finite gradient in " + std::to_string(step.num_skipped()) + " group(s)";
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GuidanceFailure) throw;
    skipped = true;
    for (double& n : m.grad_norms) n = 0.0;
    m.note = e.what();
  }

  ++state_.iteration;
  if (skipped) ++state_.skips;
  m.skipped = skipped;
  m.skips = state_.skips;
  m.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return m;
}

void Trainer::run(const TrainCallbacks& callbacks) {
  const double max_skips = config_.max_skip_fraction * config_.iterations;
  while (state_.iteration < config_.iterations) {
    const IterationMetrics m = step();
    if (callbacks.on_iteration) callbacks.on_iteration(m);
    if (state_.skips > max_skips)
      throw Error(ErrorKind::Aborted, "aborting: " + std::to_string(state_.skips) +
                                          " skipped iterations exceed " +
                                          std::to_string(config_.max_skip_fraction * 100.0) +
                                          "% of " + std::to_string(config_.iterations) +
                                          "; last: " + m.note);
    if (callbacks.on_checkpoint && config_.checkpoint_every > 0 &&
        state_.iteration % config_.checkpoint_every == 0)
      callbacks.on_checkpoint(state_);
  }
}

GaussianCloudf train(GaussianCloudf cloud, const GuidanceModel& guidance, const TrainConfig& config,
                     const TrainCallbacks& callbacks) {
  Trainer trainer(std::move(cloud), guidance, config);
  trainer.run(callbacks);
  return trainer.state().cloud;
}

std::filesystem::path checkpoint_state_path(const std::filesystem::path& ply_path) {
  std::filesystem::path p = ply_path;
  p += ".state.json";
  return p;
}

void save_checkpoint(const std::filesystem::path& ply_path, const TrainState& state) {
  io::write_splat_ply(ply_path, state.cloud);
  std::ostringstream rng;
  rng << state.rng;
  const json doc = {
      {"iteration", state.iteration},
      {"skips", state.skips},
      {"rng", rng.str()},
      {"adam",
       {{"steps", state.adam.steps},
        {"first", floats_json(state.adam.first)},
        {"second", floats_json(state.adam.second)}}},
  };
  const std::string text = doc.dump();
  io::write_file(checkpoint_state_path(ply_path), text);
}

TrainState load_checkpoint(const std::filesystem::path& ply_path) {
  TrainState state;
  state.cloud = io::read_splat_ply(ply_path);
  const std::filesystem::path side = checkpoint_state_path(ply_path);
  const std::string text = io::read_file(side);
  try {
    const json doc = json::parse(text);
    state.iteration = doc.at("iteration").get<int>();
    state.skips = doc.at("skips").get<int>();
    std::istringstream rng(doc.at("rng").get<std::string>());
    rng >> state.rng;
    if (!rng) throw Error(ErrorKind::Parse, "invalid RNG state");
    state.adam = AdamState(state.cloud.size());
    const json& adam = doc.at("adam");
    state.adam.steps = adam.at("steps").get<std::array<std::int64_t, kNumParamGroups>>();
    floats_from_json(adam.at("first"), state.adam.first);
    floats_from_json(adam.at("second"), state.adam.second);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, side.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Parse, side.string() + ": " + e.what());
  }
  return state;
}

}  // namespace splatforge
