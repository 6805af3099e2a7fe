#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "splatforge/core/types.hpp"

namespace splatforge {

/// B x H x W x 3 float images, stored contiguously in that order.
struct ImageBatch {
  int batch = 0;
  int height = 0;
  int width = 0;
  Eigen::VectorXf data;

  ImageBatch() = default;
  ImageBatch(int b, int h, int w);

  Index pixels() const { return Index(height) * width; }
  Eigen::Map<Rows3<float>> image(int b);
  Eigen::Map<const Rows3<float>> image(int b) const;
  bool same_shape(const ImageBatch& o) const {
    return batch == o.batch && height == o.height && width == o.width;
  }
};

/// Standard normal batch drawn from its own seeded generator.
ImageBatch standard_normal(int batch, int height, int width, std::uint64_t seed);

/// Scaled-linear variance schedule: betas are linear in sqrt(beta) and
/// alpha_bar is their running product of (1 - beta).
class NoiseSchedule {
 public:
  NoiseSchedule(int num_train_steps = 1000, double beta_start = 0.00085,
                double beta_end = 0.012);

  int num_train_steps() const { return static_cast<int>(alphas_cumprod_.size()); }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }
  const std::vector<double>& alphas_cumprod() const { return alphas_cumprod_; }

  /// floor(t * steps), clamped to a valid index.
  int index(double t) const;
  double alpha_bar(double t) const { return alphas_cumprod_[std::size_t(index(t))]; }

 private:
  double beta_start_;
  double beta_end_;
  std::vector<double> alphas_cumprod_;
};

struct TimestepRange {
  double t_min = 0.02;
  double t_max = 0.98;
  double late_t_max = 0.55;
  int switch_iteration = 500;

  void validate() const;
  double upper(int iteration) const { return iteration < switch_iteration ? t_max : late_t_max; }
};

double sample_timestep(int iteration, std::mt19937_64& rng, const TimestepRange& range = {});

enum class SdsWeighting { OneMinusAlphaBar, Unit };

double sds_weight(const NoiseSchedule& schedule, double t, SdsWeighting mode);

/// z_t = sqrt(alpha_bar) x + sqrt(1 - alpha_bar) eps
Eigen::VectorXf add_noise(const Eigen::VectorXf& x, double t, const Eigen::VectorXf& epsilon,
                          const NoiseSchedule& schedule);
ImageBatch add_noise(const ImageBatch& x, double t, const ImageBatch& epsilon,
                     const NoiseSchedule& schedule);

/// w (eps_hat - eps). Throws GuidanceFailure if eps_hat is not finite.
Eigen::VectorXf sds_gradient(const Eigen::VectorXf& epsilon_hat, const Eigen::VectorXf& epsilon,
                             double w);

}  // namespace splatforge
