#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "splatforge/guidance/remote.hpp"
#include "splatforge/init/initialization.hpp"
#include "splatforge/optim/train.hpp"

namespace splatforge {

enum class PriorBranch { TextTo3d, TextToMotion };
enum class GuidanceMode { Mock, Remote };

struct PriorConfig {
  /// path to a PLY/OBJ prior, or "remote" to ask the prior service
  std::string source;
  PriorBranch branch = PriorBranch::TextTo3d;
  bool ground = false;
  double ground_density = 2000.0;  // points per unit^2
  double ground_margin = 0.1;
};

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::Remote;
  std::string url;
  double timeout_seconds = 300.0;
  int attempts = 3;
  double backoff_seconds = 0.5;
  double mock_strength = 1.0;
  /// splat PLY rendered as mock targets; empty uses the input cloud
  std::string mock_target;
  /// orbit views for mock targets when train.camera.views is empty
  int mock_views = 8;
};

struct PipelineConfig {
  std::string prompt;
  std::string motion_prompt;
  std::uint64_t seed = 0;
  PriorConfig prior;
  GrowConfig grow;
  TrainConfig train;
  GuidanceConfig guidance;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys and bad values throw Config.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct InitReport {
  Index seed_count = 0;
  Index grown_count = 0;
  Index ground_count = 0;
  Index num_gaussians = 0;
  Aabb bbox;
  std::optional<Eigen::Vector3f> center;
  double nn_min = 0.0;
  double nn_max = 0.0;
  double nn_mean = 0.0;

  nlohmann::json to_json() const;
};

/// Prior -> colored point cloud -> growing -> Gaussians. Writes
/// `<output_dir>/init.ply` and `<output_dir>/init_report.json`.
InitReport cmd_init(const PipelineConfig& config);

struct TrainOutcome {
  int iterations_run = 0;
  int skips = 0;
  std::filesystem::path final_ply;
};

/// Trains the splat PLY at `input` (or resumes from a checkpoint PLY).
/// Writes final.ply, metrics.ndjson and checkpoints under output_dir.
TrainOutcome cmd_train(const PipelineConfig& config, const std::filesystem::path& input,
                       const std::optional<std::filesystem::path>& resume = std::nullopt);

struct RenderOptions {
  double radius = 2.5;
  double elevation = 15.0;
  double fov_y = 49.0;
  int size = 512;
  int views = 120;  // evenly spaced azimuths over [-180, 180)
  std::optional<double> azimuth;  // single view instead of a turntable
  Rgb background = Rgb::Ones();
  bool bench = false;
  /// also write rgb, transmittance and contribution-count buffers as raw float32
  bool dump = false;
  int bench_frames = 100;
};

/// Turntable azimuths: -180 + 360 i / n.
std::vector<Camera> turntable_cameras(const RenderOptions& options);

/// Writes view_XXX.png files; with bench set, times bench_frames renders of
/// the first view and returns frames per second.
std::optional<double> cmd_render(const std::filesystem::path& input,
                                 const std::filesystem::path& output_dir,
                                 const RenderOptions& options, std::ostream& log);

nlohmann::json cmd_info(const std::filesystem::path& input);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace splatforge
