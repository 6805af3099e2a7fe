#include "splatforge/optim/adam.hpp"

#include <cmath>

namespace splatforge {
namespace {

template <typename MapType, typename Cloud>
MapType flat(Cloud& cloud, ParamGroup group) {
  switch (group) {
    case ParamGroup::Position:
      return {cloud.positions.data(), cloud.positions.size()};
    case ParamGroup::Color:
      return {cloud.colors_dc.data(), cloud.colors_dc.size()};
    case ParamGroup::Opacity:
      return {cloud.opacities_raw.data(), cloud.opacities_raw.size()};
    case ParamGroup::Scaling:
      return {cloud.scales_raw.data(), cloud.scales_raw.size()};
    case ParamGroup::Rotation:
      return {cloud.rotations.data(), cloud.rotations.size()};
  }
  throw Error(ErrorKind::InvalidParameter, "unknown parameter group");
}

}  // namespace

std::string_view group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::Position: return "position";
    case ParamGroup::Color: return "color";
    case ParamGroup::Opacity: return "opacity";
    case ParamGroup::Scaling: return "scaling";
    case ParamGroup::Rotation: return "rotation";
  }
  return "unknown";
}

Eigen::Map<Eigen::ArrayXf> group_values(GaussianCloudf& cloud, ParamGroup group) {
  return flat<Eigen::Map<Eigen::ArrayXf>>(cloud, group);
}

Eigen::Map<const Eigen::ArrayXf> group_values(const GaussianCloudf& cloud, ParamGroup group) {
  return flat<Eigen::Map<const Eigen::ArrayXf>>(cloud, group);
}

double LearningRates::operator[](ParamGroup group) const {
  switch (group) {
    case ParamGroup::Position: return position;
    case ParamGroup::Color: return color;
    case ParamGroup::Opacity: return opacity;
    case ParamGroup::Scaling: return scaling;
    case ParamGroup::Rotation: return rotation;
  }
  return 0.0;
}

void LearningRates::validate() const {
  for (ParamGroup g : kParamGroups)
    if (!((*this)[g] > 0.0) || !std::isfinite((*this)[g]))
      throw Error(ErrorKind::Config, "learning rate for " + std::string(group_name(g)) + " must be > 0");
}

void AdamSettings::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorKind::Config, "adam betas must lie in [0,1)");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "adam epsilon must be > 0");
}

int AdamStepResult::num_skipped() const {
  int n = 0;
  for (bool s : skipped) n += s;
  return n;
}

AdamStepResult adam_step(GaussianCloudf& params, const GaussianCloudf& grads, AdamState& state,
                         const LearningRates& rates, const AdamSettings& settings) {
  const Index n = params.size();
  if (grads.size() != n || state.first.size() != n || state.second.size() != n)
    throw Error(ErrorKind::ContractViolation, "adam_step: state and gradient shapes differ from parameters");
  AdamStepResult result;
  for (int gi = 0; gi < kNumParamGroups; ++gi) {
    const ParamGroup group = kParamGroups[std::size_t(gi)];
    const auto g = group_values(grads, group);
    if (!g.allFinite()) {
      result.skipped[std::size_t(gi)] = true;
      continue;
    }
    auto p = group_values(params, group);
    auto m = group_values(state.first, group);
    auto v = group_values(state.second, group);
    const std::int64_t step = ++state.steps[std::size_t(gi)];
    const double c1 = 1.0 - std::pow(settings.beta1, double(step));
    const double c2 = 1.0 - std::pow(settings.beta2, double(step));
    const double lr = rates[group];
    for (Index i = 0; i < p.size(); ++i) {
      const double gd = g[i];
      const double mi = settings.beta1 * m[i] + (1.0 - settings.beta1) * gd;
      const double vi = settings.beta2 * v[i] + (1.0 - settings.beta2) * gd * gd;
      m[i] = float(mi);
      v[i] = float(vi);
      p[i] = float(p[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + settings.epsilon));
    }
  }
  return result;
}

}  // namespace splatforge
