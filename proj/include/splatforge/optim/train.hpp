#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "splatforge/guidance/predictor.hpp"
#include "splatforge/optim/adam.hpp"
#include "splatforge/render/rasterizer.hpp"

namespace splatforge {

struct Range {
  double min;
  double max;
};

struct CameraSampling {
  Range radius{1.5, 4.0};
  Range azimuth{-180.0, 180.0};  // degrees
  Range elevation{-10.0, 60.0};  // degrees
  double fov_y = 49.0;
  /// When non-empty, views are drawn uniformly from this list instead of
  /// the ranges. Only radius, azimuth, elevation and look_at are used.
  std::vector<Camera> views;
};

enum class BackgroundMode { Random, Fixed };

struct TrainConfig {
  int iterations = 1200;
  int batch_size = 4;
  double guidance_scale = 100.0;
  int render_resolution = 1024;
  int guidance_resolution = 512;
  CameraSampling camera;
  LearningRates learning_rates;
  AdamSettings adam;
  TimestepRange timesteps;
  int num_train_steps = 1000;
  double beta_start = 0.00085;
  double beta_end = 0.012;
  SdsWeighting weighting = SdsWeighting::OneMinusAlphaBar;
  std::uint64_t rng_seed = 0;
  BackgroundMode background_mode = BackgroundMode::Random;
  Rgb background = Rgb::Ones();
  std::string prompt;
  // abort once more than this fraction of the configured iterations is skipped
  double max_skip_fraction = 0.1;
  int checkpoint_every = 0;  // 0 disables
  RenderSettings render;

  void validate() const;
  NoiseSchedule schedule() const { return {num_train_steps, beta_start, beta_end}; }
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys and bad values throw Config.
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// Applies the configured fov and render resolution to a view.
Camera training_camera(const Camera& view, const TrainConfig& config);

Camera sample_camera(std::mt19937_64& rng, const TrainConfig& config);

struct IterationMetrics {
  int iter = 0;
  double t = 0.0;
  std::array<double, kNumParamGroups> grad_norms{};
  bool skipped = false;
  int skips = 0;  // cumulative
  double ms = 0.0;
  std::string note;
};

std::string metrics_line(const IterationMetrics& metrics);

struct TrainState {
  GaussianCloudf cloud;
  AdamState adam;
  std::mt19937_64 rng;
  int iteration = 0;
  int skips = 0;
};

struct TrainCallbacks {
  std::function<void(const IterationMetrics&)> on_iteration;
  std::function<void(const TrainState&)> on_checkpoint;
};

class Trainer {
 public:
  Trainer(GaussianCloudf cloud, const GuidanceModel& guidance, TrainConfig config);

  /// Continues from a saved state instead of the fresh one.
  void restore(TrainState state);

  /// Runs until the configured iteration count; throws Aborted when too
  /// many iterations were skipped.
  void run(const TrainCallbacks& callbacks = {});
  IterationMetrics step();

  const TrainState& state() const { return state_; }
  const GaussianCloudf& cloud() const { return state_.cloud; }
  const TrainConfig& config() const { return config_; }

 private:
  const GuidanceModel& guidance_;
  TrainConfig config_;
  TrainState state_;
};

GaussianCloudf train(GaussianCloudf cloud, const GuidanceModel& guidance, const TrainConfig& config,
                     const TrainCallbacks& callbacks = {});

/// Mean over views of render_backward after the downscale adjoint.
/// `pixel_grads` holds dL/dx at guidance resolution for each view.
GaussianCloudf batch_gradient(const GaussianCloudf& cloud, const std::vector<Camera>& cameras,
                              const std::vector<Rgb>& backgrounds,
                              const std::vector<RenderedImagef>& renders,
                              const ImageBatch& pixel_grads, const RenderSettings& settings = {});

/// Splat PLY at `ply_path` plus optimizer state in `<ply_path>.state.json`.
void save_checkpoint(const std::filesystem::path& ply_path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& ply_path);
std::filesystem::path checkpoint_state_path(const std::filesystem::path& ply_path);

}  // namespace splatforge
