#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace splatforge::testing {

/// Kolmogorov-Smirnov distance between the sample and U(lo, hi).
inline double ks_uniform(std::vector<double> samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = std::clamp((samples[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (double(i) + 1.0) / n - cdf, cdf - double(i) / n});
  }
  return d;
}

inline double psnr(double mse) { return 10.0 * std::log10(1.0 / mse); }

}  // namespace splatforge::testing
