#include "splatforge/guidance/remote.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <span>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "splatforge/util/base64.hpp"

namespace splatforge {

using nlohmann::json;

namespace wire {

std::string return_mode_name(ReturnMode mode) {
  return mode == ReturnMode::EpsilonHat ? "epsilon_hat" : "pixel_gradient";
}

std::string encode_predict_request(const GuidanceRequest& request, const ImageBatch& images,
                                   ReturnMode mode) {
  const std::span<const float> values(images.data.data(), std::size_t(images.data.size()));
  json body = {
      {"prompt", request.prompt},
      {"t_fraction", request.t},
      {"guidance_scale", request.guidance_scale},
      {"seed", request.seed},
      {"shape", {images.batch, images.height, images.width, 3}},
      {"images", util::base64_encode(util::float32_le_bytes(values))},
      {"return", return_mode_name(mode)},
  };
  return body.dump();
}

ImageBatch decode_predict_response(std::string_view body, int batch, int height, int width) {
  try {
    const json doc = json::parse(body);
    const std::vector<int> shape = doc.at("shape").get<std::vector<int>>();
    if (shape != std::vector<int>{batch, height, width, 3})
      throw Error(ErrorKind::GuidanceFailure, "prediction shape " + doc.at("shape").dump() +
                                                  " does not match the request");
    const std::vector<float> values =
        util::floats_from_float32_le(util::base64_decode(doc.at("data").get<std::string>()));
    ImageBatch out(batch, height, width);
    if (Index(values.size()) != out.data.size())
      throw Error(ErrorKind::GuidanceFailure, "prediction payload length does not match its shape");
    out.data = Eigen::Map<const Eigen::VectorXf>(values.data(), Index(values.size()));
    if (!out.data.allFinite())
      throw Error(ErrorKind::GuidanceFailure, "prediction contains non-finite values");
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::GuidanceFailure, std::string("malformed prediction response: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::GuidanceFailure) throw;
    throw Error(ErrorKind::GuidanceFailure, std::string("malformed prediction response: ") + e.what());
  }
}

HealthInfo decode_health(std::string_view body) {
  try {
    const json doc = json::parse(body);
    return {doc.at("status").get<std::string>(), doc.value("model_2d", std::string()),
            doc.value("model_3d", std::string())};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Service, std::string("malformed health response: ") + e.what());
  }
}

std::string encode_prior_request(const std::string& prompt, const std::string& branch,
                                 std::uint64_t seed) {
  return json{{"prompt", prompt}, {"branch", branch}, {"seed", seed}}.dump();
}

PriorResult decode_prior_response(std::string_view body) {
  try {
    const json doc = json::parse(body);
    return {util::base64_decode(doc.at("ply").get<std::string>()),
            doc.at("colors_present").get<bool>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Service, std::string("malformed prior response: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Service, std::string("malformed prior response: ") + e.what());
  }
}

}  // namespace wire

std::string resolve_guidance_url(const std::string& explicit_url) {
  if (!explicit_url.empty()) return explicit_url;
  const char* env = std::getenv(kGuidanceUrlEnv);
  return env ? std::string(env) : std::string();
}

GuidanceClient::GuidanceClient(ClientOptions options) : options_(std::move(options)) {
  if (options_.url.empty())
    throw Error(ErrorKind::Config, std::string("no guidance endpoint configured; set --guidance-url or ") +
                                       kGuidanceUrlEnv);
  if (options_.attempts < 1) throw Error(ErrorKind::Config, "guidance attempts must be >= 1");
  const std::size_t scheme = options_.url.find("://");
  const std::size_t path = options_.url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin_ = options_.url.substr(0, path);
  if (path != std::string::npos) prefix_ = options_.url.substr(path);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

namespace {

httplib::Client make_client(const std::string& origin, double timeout) {
  httplib::Client cli(origin);
  const auto secs = static_cast<time_t>(timeout);
  const auto usecs = static_cast<time_t>((timeout - double(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  return cli;
}

}  // namespace

template <typename Decode>
auto GuidanceClient::post_with_retry(const std::string& path, const std::string& body,
                                     ErrorKind failure, Decode&& decode) const {
  std::string last_error;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    if (attempt > 1)
      std::this_thread::sleep_for(std::chrono::duration<double>(
          options_.backoff_seconds * std::ldexp(1.0, attempt - 2)));
    httplib::Client cli = make_client(origin_, options_.timeout_seconds);
    const httplib::Result res = cli.Post(prefix_ + path, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      continue;
    }
    try {
      return decode(res->body);
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error(failure, options_.url + path + " failed after " + std::to_string(options_.attempts) +
                           " attempts: " + last_error);
}

HealthInfo GuidanceClient::health() const {
  httplib::Client cli = make_client(origin_, options_.timeout_seconds);
  const httplib::Result res = cli.Get(prefix_ + "/v1/health");
  if (!res)
    throw Error(ErrorKind::Service, options_.url + "/v1/health unreachable: " +
                                        httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorKind::Service,
                options_.url + "/v1/health returned HTTP " + std::to_string(res->status));
  HealthInfo info = wire::decode_health(res->body);
  if (info.status != "ok")
    throw Error(ErrorKind::Service, options_.url + " reports status '" + info.status + "'");
  return info;
}

ImageBatch GuidanceClient::predict(const GuidanceRequest& request, const ImageBatch& images,
                                   ReturnMode mode) const {
  const std::string body = wire::encode_predict_request(request, images, mode);
  return post_with_retry("/v1/predict_noise", body, ErrorKind::GuidanceFailure,
                         [&](const std::string& text) {
                           return wire::decode_predict_response(text, images.batch, images.height,
                                                                images.width);
                         });
}

PriorResult GuidanceClient::generate_prior(const std::string& prompt, const std::string& branch,
                                           std::uint64_t seed) const {
  return post_with_retry("/v1/generate_prior", wire::encode_prior_request(prompt, branch, seed),
                         ErrorKind::Service,
                         [](const std::string& text) { return wire::decode_prior_response(text); });
}

ImageBatch RemoteNoisePredictor::predict_noise(const GuidanceRequest& request,
                                               const ImageBatch& epsilon,
                                               const NoiseSchedule& schedule) const {
  const ImageBatch z = add_noise(request.images, request.t, epsilon, schedule);
  return client_.predict(request, z, ReturnMode::EpsilonHat);
}

ImageBatch RemotePixelGradient::pixel_gradient(const GuidanceRequest& request) const {
  request.validate();
  return client_.predict(request, request.images, ReturnMode::PixelGradient);
}

}  // namespace splatforge
