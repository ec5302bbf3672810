#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gmi/subject.hpp"
#include "gmi/survival_curve.hpp"

namespace gmi {

// Plain product-limit estimator on the observed ratios, treating them as
// independently censored, with pointwise Greenwood standard errors. This is
// the naive baseline; it ignores that the ratio and its censoring variable
// share t0.
struct KmCurve {
  SurvivalCurve curve;
  std::vector<double> se;  // Greenwood SE at each jump

  double value_at(double r) const { return curve.value_at(r); }

  // SE carries the last value past the final event (0 before the first jump)
  double se_at(double r) const {
    const auto it = std::upper_bound(curve.thresholds.begin(), curve.thresholds.end(), r);
    const auto k = it - curve.thresholds.begin();
    return k == 0 ? 0.0 : se[static_cast<std::size_t>(k - 1)];
  }
};

inline KmCurve km_naive(const std::vector<SubjectRecord>& data) {
  const int n = static_cast<int>(data.size());
  if (n < 1) throw std::invalid_argument("km_naive: empty dataset");
  std::vector<std::pair<double, int>> obs(n);
  for (int i = 0; i < n; ++i) {
    if (!(data[i].t0 > 0.0) || !(data[i].y1 > 0.0))
      throw data_error("km_naive: t0 and y1 must be positive");
    obs[i] = {data[i].ratio(), data[i].delta1};
  }
  std::sort(obs.begin(), obs.end());
  KmCurve out;
  double s = 1.0;
  double greenwood = 0.0;
  int i = 0;
  while (i < n) {
    const double t = obs[i].first;
    const int at_risk = n - i;
    int d = 0;
    int j = i;
    while (j < n && obs[j].first == t) {
      d += obs[j].second;
      ++j;
    }
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / at_risk;
      if (at_risk > d)
        greenwood += static_cast<double>(d) /
                     (static_cast<double>(at_risk) * (at_risk - d));
      else
        s = 0.0;
      out.curve.thresholds.push_back(t);
      out.curve.values.push_back(s);
      out.se.push_back(s > 0.0 ? s * std::sqrt(greenwood) : 0.0);
    }
    i = j;
  }
  return out;
}

}  // namespace gmi
