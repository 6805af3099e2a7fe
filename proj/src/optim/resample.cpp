#include "splatforge/optim/resample.hpp"

namespace splatforge {

int downscale_factor(int width, int height, int target_width, int target_height) {
  if (width < 1 || height < 1 || target_width < 1 || target_height < 1)
    throw Error(ErrorKind::InvalidParameter, "image sizes must be positive");
  if (width % target_width != 0 || height % target_height != 0 ||
      width / target_width != height / target_height)
    throw Error(ErrorKind::InvalidParameter,
                std::to_string(width) + "x" + std::to_string(height) + " does not downscale evenly to " +
                    std::to_string(target_width) + "x" + std::to_string(target_height));
  return width / target_width;
}

Rows3<float> downscale(const Rows3<float>& image, int width, int height, int target_width,
                       int target_height) {
  if (image.rows() != Index(width) * height)
    throw Error(ErrorKind::InvalidParameter, "image buffer does not match its size");
  const int k = downscale_factor(width, height, target_width, target_height);
  if (k == 1) return image;
  const double inv = 1.0 / (double(k) * k);
  Rows3<float> out(Index(target_width) * target_height, 3);
  for (int y = 0; y < target_height; ++y)
    for (int x = 0; x < target_width; ++x) {
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      for (int dy = 0; dy < k; ++dy)
        for (int dx = 0; dx < k; ++dx)
          sum += image.row(Index(y * k + dy) * width + x * k + dx).transpose().cast<double>();
      out.row(Index(y) * target_width + x) = (sum * inv).cast<float>().transpose();
    }
  return out;
}

Rows3<float> downscale_adjoint(const Rows3<float>& coarse, int width, int height, int fine_width,
                               int fine_height) {
  if (coarse.rows() != Index(width) * height)
    throw Error(ErrorKind::InvalidParameter, "gradient buffer does not match its size");
  const int k = downscale_factor(fine_width, fine_height, width, height);
  if (k == 1) return coarse;
  const float inv = 1.0f / float(k * k);
  Rows3<float> out(Index(fine_width) * fine_height, 3);
  for (int y = 0; y < fine_height; ++y)
    for (int x = 0; x < fine_width; ++x)
      out.row(Index(y) * fine_width + x) = inv * coarse.row(Index(y / k) * width + x / k);
  return out;
}

}  // namespace splatforge
