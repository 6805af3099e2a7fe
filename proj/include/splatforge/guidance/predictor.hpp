#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "splatforge/guidance/schedule.hpp"

namespace splatforge {

struct GuidanceRequest {
  /// clean renders x in [0,1]
  ImageBatch images;
  /// camera of each image; used by predictors keyed on the view
  std::vector<Camera> cameras;
  std::string prompt;
  double t = 0.5;
  double guidance_scale = 100.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// eps_hat(z_t; y, t). Implementations are evaluated only, never
/// differentiated, and must be safe to call concurrently.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual ImageBatch predict_noise(const GuidanceRequest& request, const ImageBatch& epsilon,
                                   const NoiseSchedule& schedule) const = 0;
};

/// Produces dL/dx for a rendered batch.
class GuidanceModel {
 public:
  virtual ~GuidanceModel() = default;
  virtual ImageBatch pixel_gradient(const GuidanceRequest& request) const = 0;
};

/// Local SDS: draws eps from the request seed, queries the predictor and
/// returns w(t) (eps_hat - eps).
class SdsGuidance final : public GuidanceModel {
 public:
  SdsGuidance(const NoisePredictor& predictor, NoiseSchedule schedule = {},
              SdsWeighting weighting = SdsWeighting::OneMinusAlphaBar)
      : predictor_(predictor), schedule_(std::move(schedule)), weighting_(weighting) {}

  ImageBatch pixel_gradient(const GuidanceRequest& request) const override;
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  const NoisePredictor& predictor_;
  NoiseSchedule schedule_;
  SdsWeighting weighting_;
};

/// Deterministic photometric oracle: eps_hat = eps + strength (x - target),
/// with one target image per registered camera.
class MockPredictor final : public NoisePredictor {
 public:
  explicit MockPredictor(double strength = 1.0) : strength_(strength) {}

  /// rgb has one row per pixel in row-major pixel order.
  void set_target(const Camera& camera, Rows3<float> rgb, int width, int height);
  bool has_target(const Camera& camera) const { return find(camera) != nullptr; }
  std::size_t num_targets() const { return targets_.size(); }
  const std::vector<Camera>& cameras() const { return cameras_; }

  ImageBatch predict_noise(const GuidanceRequest& request, const ImageBatch& epsilon,
                           const NoiseSchedule& schedule) const override;

 private:
  struct Target {
    Rows3<float> rgb;
    int width;
    int height;
  };
  const Target* find(const Camera& camera) const;

  double strength_;
  std::vector<Camera> cameras_;
  std::vector<Target> targets_;
};

}  // namespace splatforge
