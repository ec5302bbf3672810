#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmi/kernel.hpp"
#include "gmi/subject.hpp"
#include "gmi/survival_curve.hpp"

namespace gmi {

// Per-subject contributions xi_i(r) whose empirical second moment estimates
// the variance of the averaged estimator: var ~= n^-2 sum xi_i^2.
struct InfluenceVector {
  double r = 0.0;
  std::vector<double> xi;
  std::vector<int> flagged;  // subjects whose plug-in at-risk fraction vanished
};

namespace detail {

// Sorted view of the observed ratios y1/t0 shared by all conditional curves.
// Exactly equal ratios (binary double equality) form one tie group.
struct RatioIndex {
  int n = 0;
  std::vector<double> log_t0;        // subject order
  std::vector<double> ratio;         // subject order
  std::vector<std::uint8_t> event;   // subject order
  std::vector<int> by_ratio;         // subject ids, ratio ascending
  std::vector<int> group_begin;      // offsets into by_ratio, size groups()+1
  std::vector<double> group_ratio;   // distinct ratios, ascending
  std::vector<int> group_of;         // subject -> group
  std::vector<int> event_group;      // groups holding at least one event

  int groups() const { return static_cast<int>(group_ratio.size()); }

  void build(const std::vector<SubjectRecord>& data) {
    n = static_cast<int>(data.size());
    if (n == 0) throw std::invalid_argument("estimator: empty dataset");
    log_t0.resize(n);
    ratio.resize(n);
    event.resize(n);
    for (int i = 0; i < n; ++i) {
      if (!(data[i].t0 > 0.0) || !(data[i].y1 > 0.0))
        throw data_error("estimator: t0 and y1 must be positive");
      log_t0[i] = std::log(data[i].t0);
      ratio[i] = data[i].y1 / data[i].t0;
      event[i] = static_cast<std::uint8_t>(data[i].delta1 != 0);
    }
    by_ratio.resize(n);
    std::iota(by_ratio.begin(), by_ratio.end(), 0);
    std::sort(by_ratio.begin(), by_ratio.end(),
              [&](int a, int b) { return ratio[a] < ratio[b]; });
    group_begin.clear();
    group_ratio.clear();
    event_group.clear();
    group_of.assign(n, -1);
    for (int pos = 0; pos < n; ++pos) {
      const double s = ratio[by_ratio[pos]];
      if (group_ratio.empty() || s != group_ratio.back()) {
        group_begin.push_back(pos);
        group_ratio.push_back(s);
      }
      group_of[by_ratio[pos]] = static_cast<int>(group_ratio.size()) - 1;
    }
    group_begin.push_back(n);
    for (int g = 0; g < groups(); ++g) {
      for (int pos = group_begin[g]; pos < group_begin[g + 1]; ++pos) {
        if (event[by_ratio[pos]]) {
          event_group.push_back(g);
          break;
        }
      }
    }
  }
};

// Scratch for one target point: kernel weights by subject, weighted event and
// total mass per tie group, and the weighted at-risk mass at each group ratio.
// At-risk masses are exact suffix sums, so they never go negative.
struct TargetScratch {
  std::vector<double> w;
  std::vector<double> group_mass, group_event_mass, at_risk;
  double total = 0.0;

  void accumulate(const RatioIndex& ix) {
    const int g_count = ix.groups();
    group_mass.assign(g_count, 0.0);
    group_event_mass.assign(g_count, 0.0);
    at_risk.assign(g_count, 0.0);
    for (int g = 0; g < g_count; ++g) {
      for (int pos = ix.group_begin[g]; pos < ix.group_begin[g + 1]; ++pos) {
        const int j = ix.by_ratio[pos];
        group_mass[g] += w[j];
        if (ix.event[j]) group_event_mass[g] += w[j];
      }
    }
    double s = 0.0;
    for (int g = g_count - 1; g >= 0; --g) {
      s += group_mass[g];
      at_risk[g] = s;
    }
    total = s;
  }
};

inline void log_t0_weights(const RatioIndex& ix, double target_log_t0, double a_n,
                           const KernelSpec& kernel, std::vector<double>& w) {
  w.resize(ix.n);
  const double inv = 1.0 / a_n;
  for (int j = 0; j < ix.n; ++j) w[j] = kernel((ix.log_t0[j] - target_log_t0) * inv);
}

// Weights for the covariate extension: Euclidean distance on (log t0, z),
// restricted to the target's categorical stratum. With no covariates this is
// bit-identical to log_t0_weights at the target subject.
inline void covariate_weights(const RatioIndex& ix, const std::vector<SubjectRecord>& data,
                              int target, double a_n, const KernelSpec& kernel,
                              std::vector<double>& w) {
  const SubjectRecord& ti = data[target];
  const int q = static_cast<int>(ti.z.size());
  const double inv = 1.0 / a_n;
  w.resize(ix.n);
  for (int j = 0; j < ix.n; ++j) {
    const SubjectRecord& sj = data[j];
    if (sj.v != ti.v) {
      w[j] = 0.0;
      continue;
    }
    double u;
    if (q == 0) {
      u = (ix.log_t0[j] - ix.log_t0[target]) * inv;
    } else {
      const double dl = ix.log_t0[j] - ix.log_t0[target];
      double ss = dl * dl;
      for (int k = 0; k < q; ++k) {
        const double dz = sj.z[k] - ti.z[k];
        ss += dz * dz;
      }
      u = std::sqrt(ss) * inv;
    }
    w[j] = kernel(u);
  }
}

// Weighted product-limit value at r. Tie groups with zero weighted at-risk
// mass are skipped: the last defined value is carried forward.
inline double product_limit_at(const RatioIndex& ix, const TargetScratch& ts, double r) {
  double s = 1.0;
  for (const int g : ix.event_group) {
    if (ix.group_ratio[g] > r) break;
    const double d = ts.group_event_mass[g];
    if (!(d > 0.0)) continue;
    const double risk = ts.at_risk[g];
    if (!(risk > 0.0)) continue;
    s *= 1.0 - d / risk;
    if (!(s > 0.0)) return 0.0;
  }
  return s;
}

// Curve value right after each event group (ascending), stopping once the
// group's ratio exceeds r_max.
inline void product_limit_path(const RatioIndex& ix, const TargetScratch& ts, double r_max,
                               std::vector<double>& out) {
  out.clear();
  double s = 1.0;
  for (const int g : ix.event_group) {
    if (ix.group_ratio[g] > r_max) break;
    const double d = ts.group_event_mass[g];
    const double risk = ts.at_risk[g];
    if (d > 0.0 && risk > 0.0) {
      s *= 1.0 - d / risk;
      if (!(s > 0.0)) s = 0.0;
    }
    out.push_back(s);
  }
}

inline void check_covariates(const std::vector<SubjectRecord>& data) {
  const std::size_t q = data.front().z.size();
  const std::size_t vq = data.front().v.size();
  if (q > 2)
    throw std::invalid_argument(
        "covariate_survival_gmi: more than 2 continuous covariates is not "
        "supported; reduce them to a single index first");
  for (const auto& s : data)
    if (s.z.size() != q || s.v.size() != vq)
      throw data_error("covariate_survival_gmi: covariate arity differs across records");
}

}  // namespace detail

// Conditional survival estimate of the ratio t1/t0 given T0 = t0: a weighted
// product-limit estimator with kernel weights on log t0 distances.
inline double conditional_survival_gmi(double r, double t0,
                                       const std::vector<SubjectRecord>& data, double a_n,
                                       const KernelSpec& kernel = silverman_kernel_spec()) {
  if (!(t0 > 0.0)) throw std::invalid_argument("conditional_survival_gmi: t0 must be positive");
  if (!(a_n > 0.0)) throw std::invalid_argument("conditional_survival_gmi: bandwidth must be positive");
  detail::RatioIndex ix;
  ix.build(data);
  detail::TargetScratch ts;
  detail::log_t0_weights(ix, std::log(t0), a_n, kernel, ts.w);
  ts.accumulate(ix);
  return detail::product_limit_at(ix, ts, r);
}

// Averaged estimator at several thresholds: mean over subjects of the
// conditional curve at their own t0.
inline std::vector<double> survival_gmi_at(const std::vector<double>& rs,
                                           const std::vector<SubjectRecord>& data, double a_n,
                                           const KernelSpec& kernel = silverman_kernel_spec()) {
  if (!(a_n > 0.0)) throw std::invalid_argument("survival_gmi: bandwidth must be positive");
  detail::RatioIndex ix;
  ix.build(data);
  double r_max = 0.0;
  for (const double r : rs) r_max = std::max(r_max, r);

  // event-group ratios up to r_max, to map each r onto a path position
  std::vector<double> jump_ratio;
  for (const int g : ix.event_group) {
    if (ix.group_ratio[g] > r_max) break;
    jump_ratio.push_back(ix.group_ratio[g]);
  }

  std::vector<double> mean_path(jump_ratio.size(), 0.0);
  detail::TargetScratch ts;
  std::vector<double> path;
  for (int i = 0; i < ix.n; ++i) {
    detail::log_t0_weights(ix, ix.log_t0[i], a_n, kernel, ts.w);
    ts.accumulate(ix);
    detail::product_limit_path(ix, ts, r_max, path);
    for (std::size_t k = 0; k < path.size(); ++k) mean_path[k] += path[k];
  }
  for (auto& v : mean_path) v /= static_cast<double>(ix.n);

  std::vector<double> out(rs.size());
  for (std::size_t t = 0; t < rs.size(); ++t) {
    const auto it = std::upper_bound(jump_ratio.begin(), jump_ratio.end(), rs[t]);
    const auto k = it - jump_ratio.begin();
    out[t] = k == 0 ? 1.0 : mean_path[static_cast<std::size_t>(k - 1)];
  }
  return out;
}

inline double survival_gmi(double r, const std::vector<SubjectRecord>& data, double a_n,
                           const KernelSpec& kernel = silverman_kernel_spec()) {
  return survival_gmi_at({r}, data, a_n, kernel)[0];
}

// Full step curve over all observed event ratios.
inline SurvivalCurve survival_gmi_curve(const std::vector<SubjectRecord>& data, double a_n,
                                        const KernelSpec& kernel = silverman_kernel_spec()) {
  detail::RatioIndex ix;
  ix.build(data);
  if (!(a_n > 0.0)) throw std::invalid_argument("survival_gmi_curve: bandwidth must be positive");
  SurvivalCurve curve;
  for (const int g : ix.event_group) curve.thresholds.push_back(ix.group_ratio[g]);
  curve.values.assign(curve.thresholds.size(), 0.0);
  detail::TargetScratch ts;
  std::vector<double> path;
  const double r_max =
      curve.thresholds.empty() ? 0.0 : curve.thresholds.back();
  for (int i = 0; i < ix.n; ++i) {
    detail::log_t0_weights(ix, ix.log_t0[i], a_n, kernel, ts.w);
    ts.accumulate(ix);
    detail::product_limit_path(ix, ts, r_max, path);
    for (std::size_t k = 0; k < path.size(); ++k) curve.values[k] += path[k];
  }
  for (auto& v : curve.values) v /= static_cast<double>(ix.n);
  return curve;
}

// Covariate extension: conditional curves computed inside the target's
// categorical stratum with kernel weights on the Euclidean distance of
// (log t0, z). Averaging over subjects as before. Reduces exactly to
// survival_gmi when no covariates are present.
inline std::vector<double> covariate_survival_gmi_at(
    const std::vector<double>& rs, const std::vector<SubjectRecord>& data, double a_n,
    const KernelSpec& kernel = silverman_kernel_spec(),
    std::vector<std::string>* warnings = nullptr) {
  if (!(a_n > 0.0)) throw std::invalid_argument("covariate_survival_gmi: bandwidth must be positive");
  if (data.empty()) throw std::invalid_argument("covariate_survival_gmi: empty dataset");
  detail::check_covariates(data);
  detail::RatioIndex ix;
  ix.build(data);
  double r_max = 0.0;
  for (const double r : rs) r_max = std::max(r_max, r);

  if (warnings && !data.front().v.empty()) {
    // stratum diagnostics: singleton strata and strata without events at or
    // below the largest requested threshold
    std::vector<std::vector<int>> strata;
    std::vector<std::vector<int>> members;
    for (int i = 0; i < ix.n; ++i) {
      std::size_t s = 0;
      for (; s < strata.size(); ++s)
        if (strata[s] == data[i].v) break;
      if (s == strata.size()) {
        strata.push_back(data[i].v);
        members.emplace_back();
      }
      members[s].push_back(i);
    }
    for (std::size_t s = 0; s < strata.size(); ++s) {
      std::string label;
      for (const int code : strata[s]) label += (label.empty() ? "" : ",") + std::to_string(code);
      if (members[s].size() == 1)
        warnings->push_back("covariate stratum {" + label +
                            "} has a single subject; its conditional curve is its own "
                            "one-point product-limit estimate");
      bool any_event = false;
      for (const int i : members[s])
        if (ix.event[i] && ix.ratio[i] <= r_max) any_event = true;
      if (!any_event)
        warnings->push_back("covariate stratum {" + label +
                            "} has no events at or below the requested threshold");
    }
  }

  std::vector<double> jump_ratio;
  for (const int g : ix.event_group) {
    if (ix.group_ratio[g] > r_max) break;
    jump_ratio.push_back(ix.group_ratio[g]);
  }
  std::vector<double> mean_path(jump_ratio.size(), 0.0);
  detail::TargetScratch ts;
  std::vector<double> path;
  for (int i = 0; i < ix.n; ++i) {
    detail::covariate_weights(ix, data, i, a_n, kernel, ts.w);
    ts.accumulate(ix);
    detail::product_limit_path(ix, ts, r_max, path);
    for (std::size_t k = 0; k < path.size(); ++k) mean_path[k] += path[k];
  }
  for (auto& v : mean_path) v /= static_cast<double>(ix.n);

  std::vector<double> out(rs.size());
  for (std::size_t t = 0; t < rs.size(); ++t) {
    const auto it = std::upper_bound(jump_ratio.begin(), jump_ratio.end(), rs[t]);
    const auto k = it - jump_ratio.begin();
    out[t] = k == 0 ? 1.0 : mean_path[static_cast<std::size_t>(k - 1)];
  }
  return out;
}

inline double covariate_survival_gmi(double r, const std::vector<SubjectRecord>& data,
                                     double a_n,
                                     const KernelSpec& kernel = silverman_kernel_spec(),
                                     std::vector<std::string>* warnings = nullptr) {
  return covariate_survival_gmi_at({r}, data, a_n, kernel, warnings)[0];
}

inline SurvivalCurve covariate_survival_gmi_curve(
    const std::vector<SubjectRecord>& data, double a_n,
    const KernelSpec& kernel = silverman_kernel_spec(),
    std::vector<std::string>* warnings = nullptr) {
  detail::RatioIndex ix;
  ix.build(data);
  std::vector<double> rs;
  for (const int g : ix.event_group) rs.push_back(ix.group_ratio[g]);
  SurvivalCurve curve;
  curve.thresholds = rs;
  if (rs.empty()) return curve;
  curve.values = covariate_survival_gmi_at(rs, data, a_n, kernel, warnings);
  return curve;
}

// Influence contributions for the averaged estimator. Plug-ins: the
// conditional curve for S_{G|T0}, its average for S_G, and the kernel-weighted
// at-risk fraction for H(s; t0). The dlog S integral is a finite sum over the
// jumps of the conditional curve: each jump contributes its increment divided
// by the post-jump value, and a subject is in the integral only strictly
// beyond the jump. With equal weights and no censoring this reduces exactly
// to 1{ratio_i > r} - S(r).
inline InfluenceVector influence_values(double r, const std::vector<SubjectRecord>& data,
                                        double a_n,
                                        const KernelSpec& kernel = silverman_kernel_spec()) {
  if (!(a_n > 0.0)) throw std::invalid_argument("influence_values: bandwidth must be positive");
  detail::RatioIndex ix;
  ix.build(data);
  InfluenceVector out;
  out.r = r;
  out.xi.resize(ix.n);
  std::vector<double> s_at_r(ix.n), braces(ix.n);
  std::vector<std::uint8_t> flag(ix.n, 0);
  detail::TargetScratch ts;
  for (int i = 0; i < ix.n; ++i) {
    detail::log_t0_weights(ix, ix.log_t0[i], a_n, kernel, ts.w);
    ts.accumulate(ix);
    double s = 1.0;
    double integral = 0.0;
    bool dead = false;
    const int gi = ix.group_of[i];
    for (const int g : ix.event_group) {
      if (ix.group_ratio[g] > r) break;
      const double d = ts.group_event_mass[g];
      if (!(d > 0.0)) continue;
      const double risk = ts.at_risk[g];
      if (!(risk > 0.0)) continue;
      s *= 1.0 - d / risk;
      if (!(s > 0.0)) {
        s = 0.0;
        dead = true;
        break;
      }
      if (gi > g) integral += (-d / (risk - d)) * (ts.total / risk);
    }
    double dterm = 0.0;
    if (!dead && ix.event[i] && ix.group_ratio[gi] <= r) {
      const double h = ts.at_risk[gi] / ts.total;
      if (h > 0.0)
        dterm = 1.0 / h;
      else
        flag[i] = 1;
    }
    s_at_r[i] = s;
    braces[i] = dead ? 0.0 : 1.0 - dterm - integral;
  }
  double s_bar = 0.0;
  for (int i = 0; i < ix.n; ++i) s_bar += s_at_r[i];
  s_bar /= static_cast<double>(ix.n);
  for (int i = 0; i < ix.n; ++i) {
    out.xi[i] = s_at_r[i] * braces[i] - s_bar;
    if (flag[i]) out.flagged.push_back(i);
  }
  return out;
}

inline double plugin_variance(double r, const std::vector<SubjectRecord>& data, double a_n,
                              const KernelSpec& kernel = silverman_kernel_spec()) {
  const InfluenceVector iv = influence_values(r, data, a_n, kernel);
  double ss = 0.0;
  for (const double x : iv.xi) ss += x * x;
  const double n = static_cast<double>(iv.xi.size());
  return ss / (n * n);
}

}  // namespace gmi
