#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace rosplab {

struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean and its standard error (sample SD with n-1, over sqrt(n)),
/// accumulated in index order.
inline MeanSe mean_and_se(std::span<const double> values) {
  MeanSe out;
  out.count = values.size();
  if (values.empty()) return out;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double d = v - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (v - mean);
  }
  out.mean = mean;
  if (k > 1) out.std_error = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
  return out;
}

}  // namespace rosplab
