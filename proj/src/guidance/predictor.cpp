#include "splatforge/guidance/predictor.hpp"

namespace splatforge {

void GuidanceRequest::validate() const {
  if (images.batch < 1) throw Error(ErrorKind::ContractViolation, "guidance request has no images");
  if (images.data.size() != Index(images.batch) * images.pixels() * 3)
    throw Error(ErrorKind::ContractViolation, "guidance request image buffer has the wrong size");
  if (!cameras.empty() && cameras.size() != std::size_t(images.batch))
    throw Error(ErrorKind::ContractViolation, "guidance request needs one camera per image");
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::ContractViolation, "guidance t must lie in (0,1)");
  if (!images.data.allFinite() || images.data.minCoeff() < 0.0f || images.data.maxCoeff() > 1.0f)
    throw Error(ErrorKind::ContractViolation, "guidance images must lie in [0,1]");
}

ImageBatch SdsGuidance::pixel_gradient(const GuidanceRequest& request) const {
  request.validate();
  const ImageBatch& x = request.images;
  const ImageBatch eps = standard_normal(x.batch, x.height, x.width, request.seed);
  const ImageBatch eps_hat = predictor_.predict_noise(request, eps, schedule_);
  if (!eps_hat.same_shape(x) || eps_hat.data.size() != x.data.size())
    throw Error(ErrorKind::GuidanceFailure, "noise prediction has the wrong shape");
  ImageBatch grad(x.batch, x.height, x.width);
  grad.data = sds_gradient(eps_hat.data, eps.data, sds_weight(schedule_, request.t, weighting_));
  return grad;
}

void MockPredictor::set_target(const Camera& camera, Rows3<float> rgb, int width, int height) {
  if (width < 1 || height < 1 || rgb.rows() != Index(width) * height)
    throw Error(ErrorKind::InvalidParameter, "mock target size does not match its dimensions");
  for (std::size_t i = 0; i < cameras_.size(); ++i)
    if (cameras_[i] == camera) {
      targets_[i] = {std::move(rgb), width, height};
      return;
    }
  cameras_.push_back(camera);
  targets_.push_back({std::move(rgb), width, height});
}

const MockPredictor::Target* MockPredictor::find(const Camera& camera) const {
  for (std::size_t i = 0; i < cameras_.size(); ++i)
    if (cameras_[i] == camera) return &targets_[i];
  return nullptr;
}

ImageBatch MockPredictor::predict_noise(const GuidanceRequest& request, const ImageBatch& epsilon,
                                        const NoiseSchedule&) const {
  const ImageBatch& x = request.images;
  if (!epsilon.same_shape(x))
    throw Error(ErrorKind::ContractViolation, "mock predictor: noise and image shapes differ");
  if (request.cameras.size() != std::size_t(x.batch))
    throw Error(ErrorKind::ContractViolation, "mock predictor needs one camera per image");
  ImageBatch out = epsilon;
  for (int b = 0; b < x.batch; ++b) {
    const Target* target = find(request.cameras[std::size_t(b)]);
    if (target == nullptr)
      throw Error(ErrorKind::MissingTarget, "mock predictor has no target for the requested camera");
    if (target->width != x.width || target->height != x.height)
      throw Error(ErrorKind::ContractViolation, "mock target resolution differs from the request");
    out.image(b) += float(strength_) * (x.image(b) - target->rgb);
  }
  return out;
}

}  // namespace splatforge
