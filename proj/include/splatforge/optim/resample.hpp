#pragma once

#include "splatforge/core/types.hpp"

namespace splatforge {

/// Integer downscale factor between two square-pixel resolutions; throws
/// InvalidParameter unless both axes divide by the same factor.
int downscale_factor(int width, int height, int target_width, int target_height);

/// k x k box-filter average.
Rows3<float> downscale(const Rows3<float>& image, int width, int height, int target_width,
                       int target_height);

/// Adjoint of downscale: every coarse value is spread over its k x k block
/// divided by k^2.
Rows3<float> downscale_adjoint(const Rows3<float>& coarse, int width, int height, int fine_width,
                               int fine_height);

}  // namespace splatforge
