#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "splatforge/cli/pipeline.hpp"

namespace splatforge {
namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("--config", flags.config, "pipeline JSON config")->check(CLI::ExistingFile);
  cmd.add_option("--seed", flags.seed, "random seed (overrides the config)");
  cmd.add_option("--out", flags.out, "output directory");
}

PipelineConfig base_config(const CommonFlags& flags) {
  PipelineConfig config = flags.config.empty() ? PipelineConfig{} : load_pipeline_config(flags.config);
  if (flags.seed) {
    config.seed = *flags.seed;
    config.train.rng_seed = *flags.seed;
  }
  if (!flags.out.empty()) config.output_dir = flags.out;
  return config;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"splatforge: text-to-3D generation with 3D Gaussian splatting"};
  app.require_subcommand(1);

  CommonFlags init_flags, train_flags, render_flags;
  std::string prior, prompt, motion_prompt, branch, init_url;
  bool ground = false;
  CLI::App* init = app.add_subcommand("init", "initialize Gaussians from a 3D prior");
  add_common(*init, init_flags);
  init->add_option("--prior", prior, "prior mesh/point cloud (.ply/.obj) or 'remote'");
  init->add_option("--prompt", prompt, "text prompt for the remote prior");
  init->add_option("--motion-prompt", motion_prompt, "simplified prompt for the text-to-motion prior");
  init->add_option("--branch", branch, "text-to-3d or text-to-motion")
      ->check(CLI::IsMember({"text-to-3d", "text-to-motion"}));
  init->add_flag("--ground", ground, "add a ground layer below the prior");
  init->add_option("--guidance-url", init_url, "service endpoint");

  std::string train_input, guidance_mode, train_url, resume;
  std::optional<int> iters;
  CLI::App* train = app.add_subcommand("train", "optimize Gaussians with score distillation");
  add_common(*train, train_flags);
  train->add_option("input", train_input, "initialized splat PLY");
  train->add_option("--guidance", guidance_mode, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  train->add_option("--guidance-url", train_url, "service endpoint");
  train->add_option("--iters", iters, "iteration count (overrides the config)")->check(CLI::NonNegativeNumber);
  train->add_option("--resume", resume, "checkpoint PLY to continue from");

  std::string render_input;
  RenderOptions ropts;
  std::optional<double> azimuth;
  CLI::App* rend = app.add_subcommand("render", "render a turntable or single view to PNG");
  add_common(*rend, render_flags);
  rend->add_option("input", render_input, "splat PLY")->required();
  rend->add_option("--radius", ropts.radius, "camera distance");
  rend->add_option("--elevation", ropts.elevation, "elevation in degrees");
  rend->add_option("--fov", ropts.fov_y, "vertical field of view in degrees");
  rend->add_option("--size", ropts.size, "image width and height");
  rend->add_option("--views", ropts.views, "turntable view count");
  rend->add_option("--azimuth", azimuth, "render one view at this azimuth");
  rend->add_flag("--bench", ropts.bench, "report frames per second instead of writing images");
  rend->add_flag("--dump", ropts.dump, "also write raw float32 render buffers");
  rend->add_option("--frames", ropts.bench_frames, "renders timed by --bench");

  std::string info_input;
  CLI::App* info = app.add_subcommand("info", "print splat PLY statistics");
  info->add_option("input", info_input, "splat PLY")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_code(ErrorKind::Config);
  }

  try {
    if (*init) {
      PipelineConfig config = base_config(init_flags);
      if (!prior.empty()) config.prior.source = prior;
      if (!prompt.empty()) config.prompt = prompt;
      if (!motion_prompt.empty()) config.motion_prompt = motion_prompt;
      if (!branch.empty())
        config.prior.branch = branch == "text-to-motion" ? PriorBranch::TextToMotion : PriorBranch::TextTo3d;
      if (ground) config.prior.ground = true;
      if (!init_url.empty()) config.guidance.url = init_url;
      const InitReport report = cmd_init(config);
      std::cout << report.to_json().dump(2) << "\n";
    } else if (*train) {
      PipelineConfig config = base_config(train_flags);
      if (!guidance_mode.empty())
        config.guidance.mode = guidance_mode == "mock" ? GuidanceMode::Mock : GuidanceMode::Remote;
      if (!train_url.empty()) config.guidance.url = train_url;
      if (iters) config.train.iterations = *iters;
      if (train_input.empty() && resume.empty())
        throw Error(ErrorKind::Config, "train needs an input PLY or --resume");
      std::optional<std::filesystem::path> resume_path;
      if (!resume.empty()) resume_path = resume;
      const TrainOutcome outcome = cmd_train(config, train_input, resume_path);
      std::cout << nlohmann::json{{"iterations", outcome.iterations_run},
                                  {"skips", outcome.skips},
                                  {"final", outcome.final_ply.string()}}
                       .dump(2)
                << "\n";
    } else if (*rend) {
      ropts.azimuth = azimuth;
      const std::filesystem::path out = render_flags.out.empty() ? "renders" : render_flags.out;
      cmd_render(render_input, out, ropts, std::cout);
    } else if (*info) {
      std::cout << cmd_info(info_input).dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  }
  return 0;
}

}  // namespace splatforge
