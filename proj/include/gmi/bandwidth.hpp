#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gmi/subject.hpp"

namespace gmi {

// Bandwidth a_n = sd(log t0) * n^(-exponent). The default exponent 2/5
// satisfies n*a_n -> inf and n*a_n^4 -> 0; 1/3 and 1/2 are admissible too.
struct BandwidthRule {
  double exponent = 0.4;
};

inline double default_bandwidth(const std::vector<SubjectRecord>& data,
                                BandwidthRule rule = {}) {
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("default_bandwidth: need at least 2 records");
  if (!(rule.exponent > 0.0)) throw std::invalid_argument("default_bandwidth: exponent must be positive");
  double mean = 0.0;
  for (const auto& s : data) {
    if (!(s.t0 > 0.0)) throw data_error("default_bandwidth: t0 must be positive");
    mean += std::log(s.t0);
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& s : data) {
    const double d = std::log(s.t0) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0))
    throw data_error("default_bandwidth: zero sample SD of log t0 (all t0 equal)");
  return sd * std::pow(static_cast<double>(n), -rule.exponent);
}

}  // namespace gmi
