#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "splatforge/guidance/predictor.hpp"

namespace splatforge {

inline constexpr const char* kGuidanceUrlEnv = "SPLATFORGE_GUIDANCE_URL";

enum class ReturnMode { EpsilonHat, PixelGradient };

struct HealthInfo {
  std::string status;
  std::string model_2d;
  std::string model_3d;
};

struct PriorResult {
  std::string ply;  // raw PLY bytes
  bool colors_present = false;
};

namespace wire {

std::string return_mode_name(ReturnMode mode);

/// POST /v1/predict_noise body. `images` is sent instead of request.images
/// so the epsilon_hat mode can ship z_t.
std::string encode_predict_request(const GuidanceRequest& request, const ImageBatch& images,
                                   ReturnMode mode);
/// Throws GuidanceFailure unless the response holds a finite float32 array
/// of exactly B x H x W x 3.
ImageBatch decode_predict_response(std::string_view body, int batch, int height, int width);

HealthInfo decode_health(std::string_view body);

std::string encode_prior_request(const std::string& prompt, const std::string& branch,
                                 std::uint64_t seed);
PriorResult decode_prior_response(std::string_view body);

}  // namespace wire

struct ClientOptions {
  std::string url;  // http://host:port[/prefix]
  double timeout_seconds = 300.0;
  int attempts = 3;
  // sleep before retry k (1-based) is backoff_seconds * 2^(k-1)
  double backoff_seconds = 0.5;
};

/// Resolves the endpoint: explicit value first, then the environment.
/// Returns an empty string when neither is set.
std::string resolve_guidance_url(const std::string& explicit_url);

class GuidanceClient {
 public:
  explicit GuidanceClient(ClientOptions options);

  const std::string& url() const { return options_.url; }

  /// Throws Service when the endpoint is unreachable or unhealthy.
  HealthInfo health() const;
  /// Throws GuidanceFailure once every attempt has failed.
  ImageBatch predict(const GuidanceRequest& request, const ImageBatch& images,
                     ReturnMode mode) const;
  /// Throws Service once every attempt has failed.
  PriorResult generate_prior(const std::string& prompt, const std::string& branch,
                             std::uint64_t seed) const;

 private:
  template <typename Decode>
  auto post_with_retry(const std::string& path, const std::string& body, ErrorKind failure,
                       Decode&& decode) const;

  ClientOptions options_;
  std::string origin_;  // scheme://host:port
  std::string prefix_;  // path prefix without trailing slash
};

/// Sends z_t and returns the server's eps_hat.
class RemoteNoisePredictor final : public NoisePredictor {
 public:
  explicit RemoteNoisePredictor(const GuidanceClient& client) : client_(client) {}
  ImageBatch predict_noise(const GuidanceRequest& request, const ImageBatch& epsilon,
                           const NoiseSchedule& schedule) const override;

 private:
  const GuidanceClient& client_;
};

/// Sends the clean renders; the server adds noise, runs the predictor and
/// returns dL/dx directly.
class RemotePixelGradient final : public GuidanceModel {
 public:
  explicit RemotePixelGradient(const GuidanceClient& client) : client_(client) {}
  ImageBatch pixel_gradient(const GuidanceRequest& request) const override;

 private:
  const GuidanceClient& client_;
};

}  // namespace splatforge
