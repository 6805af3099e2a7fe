#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "splatforge/core/types.hpp"

namespace splatforge {

enum class ParamGroup { Position, Color, Opacity, Scaling, Rotation };
inline constexpr int kNumParamGroups = 5;
inline constexpr std::array<ParamGroup, kNumParamGroups> kParamGroups = {
    ParamGroup::Position, ParamGroup::Color, ParamGroup::Opacity, ParamGroup::Scaling,
    ParamGroup::Rotation};

std::string_view group_name(ParamGroup group);

/// Flat view of one parameter group.
Eigen::Map<Eigen::ArrayXf> group_values(GaussianCloudf& cloud, ParamGroup group);
Eigen::Map<const Eigen::ArrayXf> group_values(const GaussianCloudf& cloud, ParamGroup group);

struct LearningRates {
  double position = 5e-5;
  double color = 1.25e-2;
  double opacity = 1e-2;
  double scaling = 1e-3;
  double rotation = 1e-2;

  double operator[](ParamGroup group) const;
  void validate() const;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-15;

  void validate() const;
};

/// First and second moments share the cloud layout; each group keeps its
/// own step count because a skipped group does not advance.
struct AdamState {
  GaussianCloudf first;
  GaussianCloudf second;
  std::array<std::int64_t, kNumParamGroups> steps{};

  AdamState() = default;
  explicit AdamState(Index n) { first.setZero(n); second.setZero(n); }
};

struct AdamStepResult {
  std::array<bool, kNumParamGroups> skipped{};
  int num_skipped() const;
};

/// One bias-corrected adaptive step per group. A group whose gradient has a
/// non-finite entry is left untouched (parameters and moments).
AdamStepResult adam_step(GaussianCloudf& params, const GaussianCloudf& grads, AdamState& state,
                         const LearningRates& rates, const AdamSettings& settings = {});

}  // namespace splatforge
