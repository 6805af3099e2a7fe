#include "splatforge/guidance/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace splatforge {

ImageBatch::ImageBatch(int b, int h, int w) : batch(b), height(h), width(w) {
  if (b < 0 || h < 0 || w < 0)
    throw Error(ErrorKind::InvalidParameter, "image batch dimensions must be >= 0");
  data = Eigen::VectorXf::Zero(Index(b) * h * w * 3);
}

Eigen::Map<Rows3<float>> ImageBatch::image(int b) {
  return {data.data() + Index(b) * pixels() * 3, pixels(), 3};
}

Eigen::Map<const Rows3<float>> ImageBatch::image(int b) const {
  return {data.data() + Index(b) * pixels() * 3, pixels(), 3};
}

ImageBatch standard_normal(int batch, int height, int width, std::uint64_t seed) {
  ImageBatch out(batch, height, width);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (Index i = 0; i < out.data.size(); ++i) out.data[i] = normal(rng);
  return out;
}

NoiseSchedule::NoiseSchedule(int num_train_steps, double beta_start, double beta_end)
    : beta_start_(beta_start), beta_end_(beta_end) {
  if (num_train_steps < 2)
    throw Error(ErrorKind::InvalidParameter, "noise schedule needs >= 2 steps");
  if (!(beta_start > 0.0) || !(beta_end > beta_start) || !(beta_end < 1.0))
    throw Error(ErrorKind::InvalidParameter, "noise schedule needs 0 < beta_start < beta_end < 1");
  alphas_cumprod_.resize(std::size_t(num_train_steps));
  const double s0 = std::sqrt(beta_start), s1 = std::sqrt(beta_end);
  double prod = 1.0;
  for (int i = 0; i < num_train_steps; ++i) {
    const double s = s0 + (s1 - s0) * i / (num_train_steps - 1);
    prod *= 1.0 - s * s;
    alphas_cumprod_[std::size_t(i)] = prod;
  }
}

int NoiseSchedule::index(double t) const {
  const int n = num_train_steps();
  return std::clamp(static_cast<int>(std::floor(t * n)), 0, n - 1);
}

void TimestepRange::validate() const {
  if (!(0.0 <= t_min && t_min < t_max && t_max <= 1.0 && t_min < late_t_max &&
        late_t_max <= 1.0))
    throw Error(ErrorKind::InvalidParameter, "timestep range must satisfy 0 <= t_min < t_max <= 1");
  if (switch_iteration < 0)
    throw Error(ErrorKind::InvalidParameter, "timestep switch iteration must be >= 0");
}

double sample_timestep(int iteration, std::mt19937_64& rng, const TimestepRange& range) {
  if (iteration < 0) throw Error(ErrorKind::InvalidParameter, "iteration must be >= 0");
  std::uniform_real_distribution<double> u(range.t_min, range.upper(iteration));
  return u(rng);
}

double sds_weight(const NoiseSchedule& schedule, double t, SdsWeighting mode) {
  return mode == SdsWeighting::Unit ? 1.0 : 1.0 - schedule.alpha_bar(t);
}

Eigen::VectorXf add_noise(const Eigen::VectorXf& x, double t, const Eigen::VectorXf& epsilon,
                          const NoiseSchedule& schedule) {
  if (x.size() != epsilon.size())
    throw Error(ErrorKind::ContractViolation, "add_noise: image and noise sizes differ");
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::InvalidParameter, "add_noise: t must lie in (0,1)");
  const double ab = schedule.alpha_bar(t);
  const float a = float(std::sqrt(ab)), b = float(std::sqrt(1.0 - ab));
  return a * x + b * epsilon;
}

ImageBatch add_noise(const ImageBatch& x, double t, const ImageBatch& epsilon,
                     const NoiseSchedule& schedule) {
  if (!x.same_shape(epsilon))
    throw Error(ErrorKind::ContractViolation, "add_noise: image and noise shapes differ");
  ImageBatch out(x.batch, x.height, x.width);
  out.data = add_noise(x.data, t, epsilon.data, schedule);
  return out;
}

Eigen::VectorXf sds_gradient(const Eigen::VectorXf& epsilon_hat, const Eigen::VectorXf& epsilon,
                             double w) {
  if (epsilon_hat.size() != epsilon.size())
    throw Error(ErrorKind::ContractViolation, "sds_gradient: prediction and noise sizes differ");
  if (!epsilon_hat.allFinite())
    throw Error(ErrorKind::GuidanceFailure, "noise predictor returned non-finite values");
  return float(w) * (epsilon_hat - epsilon);
}

}  // namespace splatforge
