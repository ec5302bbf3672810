#pragma once

#include <algorithm>
#include <vector>

namespace gmi {

// Right-continuous nonincreasing step function on ratio thresholds, value 1
// before the first jump. values[k] holds the value on [thresholds[k],
// thresholds[k+1]).
struct SurvivalCurve {
  std::vector<double> thresholds;
  std::vector<double> values;

  double value_at(double r) const {
    const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), r);
    const auto k = it - thresholds.begin();
    return k == 0 ? 1.0 : values[static_cast<std::size_t>(k - 1)];
  }

  std::size_t size() const { return thresholds.size(); }
};

}  // namespace gmi
