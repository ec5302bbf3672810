#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gmi/bandwidth.hpp"
#include "gmi/distributions.hpp"
#include "gmi/estimator.hpp"
#include "gmi/rng.hpp"
#include "gmi/subject.hpp"

namespace gmi {

// Resampling unit is the subject (the pair), never the two times separately,
// so the t0-t1 dependence survives resampling. Bandwidths are data driven, so
// by default they are recomputed on every resample; set rebandwidth = false
// to freeze the full-data bandwidth instead.
struct BootstrapConfig {
  int resamples = 5000;
  std::uint64_t seed = 0;
  bool rebandwidth = true;
};

struct CiInterval {
  double low = 0.0;
  double high = 1.0;
  bool degenerate = false;  // estimate was exactly 0 or 1
};

struct WaldResult {
  double diff = 0.0;
  double se_diff = 0.0;
  double z = 0.0;
  double p = 1.0;
};

struct GmiEstimate {
  double r = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  Method method = Method::proposed;
  bool degenerate_ci = false;
};

using PointEstimator = std::function<double(const std::vector<SubjectRecord>&, double)>;

namespace detail {

constexpr std::uint64_t kBootstrapTag = 0x626f6f74ull;  // "boot"

inline double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (const double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double lo = v.front(), hi = v.front();
  for (const double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (lo == hi) return 0.0;  // constant draws: exactly zero spread
  const double m = mean_of(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// Indices of bootstrap iteration `iteration`; depends only on (seed,
// iteration), never on evaluation order.
inline void resample_indices(std::uint64_t seed, std::uint64_t iteration, int n,
                             std::vector<int>& out) {
  Rng rng(derive_stream(seed, iteration, detail::kBootstrapTag));
  out.resize(n);
  for (int i = 0; i < n; ++i)
    out[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(n)));
}

// Proposed-estimator closures for resampled data.
inline PointEstimator gmi_point_estimator(KernelSpec kernel, BandwidthRule rule = {}) {
  return [kernel, rule](const std::vector<SubjectRecord>& d, double r) {
    return survival_gmi(r, d, default_bandwidth(d, rule), kernel);
  };
}

inline PointEstimator gmi_point_estimator_fixed(KernelSpec kernel, double a_n) {
  return [kernel, a_n](const std::vector<SubjectRecord>& d, double r) {
    return survival_gmi(r, d, a_n, kernel);
  };
}

// Bootstrap standard error of `estimator` at threshold r. Resamples that
// throw or return non-finite values are skipped; it is an error when (almost)
// all of them do. Deterministic for a fixed seed.
inline double bootstrap_se(const PointEstimator& estimator,
                           const std::vector<SubjectRecord>& data, double r,
                           const BootstrapConfig& cfg) {
  const int n = static_cast<int>(data.size());
  if (n < 2) throw std::invalid_argument("bootstrap_se: need at least 2 records");
  if (cfg.resamples < 2) throw std::invalid_argument("bootstrap_se: need at least 2 resamples");
  std::vector<int> idx;
  std::vector<SubjectRecord> sample(n);
  std::vector<double> estimates;
  estimates.reserve(cfg.resamples);
  for (int b = 0; b < cfg.resamples; ++b) {
    resample_indices(cfg.seed, static_cast<std::uint64_t>(b), n, idx);
    for (int i = 0; i < n; ++i) sample[i] = data[idx[i]];
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
      value = estimator(sample, r);
    } catch (const std::exception&) {
    }
    if (std::isfinite(value)) estimates.push_back(value);
  }
  if (estimates.size() < 2)
    throw data_error("bootstrap_se: estimate undefined on (nearly) every resample");
  return detail::sample_sd(estimates);
}

// Log-log transformed confidence interval for a survival probability. The
// estimate is clamped away from {0,1} by 1e-10 before the transform; an
// exactly degenerate estimate yields the collapsed interval with a flag.
inline CiInterval loglog_ci(double estimate, double se, double level = 0.95) {
  if (!(se >= 0.0)) throw std::invalid_argument("loglog_ci: se must be nonnegative");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("loglog_ci: level in (0,1)");
  if (estimate <= 0.0 || estimate >= 1.0) {
    const double s = estimate <= 0.0 ? 0.0 : 1.0;
    return {s, s, true};
  }
  const double s = std::min(std::max(estimate, 1e-10), 1.0 - 1e-10);
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double a = z * se / (s * std::log(s));  // negative for s in (0,1)
  return {std::pow(s, std::exp(-a)), std::pow(s, std::exp(a)), false};
}

// Proposed estimate at one threshold with bootstrap SE and log-log CI.
inline GmiEstimate proposed_estimate(const std::vector<SubjectRecord>& data, double r,
                                     const BootstrapConfig& cfg, BandwidthRule rule = {},
                                     double level = 0.95,
                                     KernelSpec kernel = silverman_kernel_spec()) {
  GmiEstimate out;
  out.r = r;
  out.method = Method::proposed;
  out.estimate = survival_gmi(r, data, default_bandwidth(data, rule), kernel);
  const PointEstimator est = cfg.rebandwidth
                                 ? gmi_point_estimator(kernel, rule)
                                 : gmi_point_estimator_fixed(kernel, default_bandwidth(data, rule));
  out.se = bootstrap_se(est, data, r, cfg);
  const CiInterval ci = loglog_ci(out.estimate, out.se, level);
  out.ci_low = ci.low;
  out.ci_high = ci.high;
  out.degenerate_ci = ci.degenerate;
  return out;
}

// Wald test of the difference between two estimators at threshold r. Both
// estimators see the same resample within every bootstrap iteration; the SE
// of the difference is the sample SD of the paired differences.
inline WaldResult wald_difference(const PointEstimator& estimator_a,
                                  const PointEstimator& estimator_b,
                                  const std::vector<SubjectRecord>& data, double r,
                                  const BootstrapConfig& cfg) {
  const int n = static_cast<int>(data.size());
  if (n < 2) throw std::invalid_argument("wald_difference: need at least 2 records");
  if (cfg.resamples < 2) throw std::invalid_argument("wald_difference: need at least 2 resamples");
  std::vector<int> idx;
  std::vector<SubjectRecord> sample(n);
  std::vector<double> diffs;
  diffs.reserve(cfg.resamples);
  for (int b = 0; b < cfg.resamples; ++b) {
    resample_indices(cfg.seed, static_cast<std::uint64_t>(b), n, idx);
    for (int i = 0; i < n; ++i) sample[i] = data[idx[i]];
    double va = std::numeric_limits<double>::quiet_NaN();
    double vb = std::numeric_limits<double>::quiet_NaN();
    try {
      va = estimator_a(sample, r);
      vb = estimator_b(sample, r);
    } catch (const std::exception&) {
    }
    if (std::isfinite(va) && std::isfinite(vb)) diffs.push_back(va - vb);
  }
  if (diffs.size() < 2)
    throw data_error("wald_difference: estimates undefined on (nearly) every resample");
  WaldResult out;
  out.diff = estimator_a(data, r) - estimator_b(data, r);
  out.se_diff = detail::sample_sd(diffs);
  if (out.diff == 0.0) {
    out.z = 0.0;
    out.p = 1.0;
  } else if (out.se_diff > 0.0) {
    out.z = out.diff / out.se_diff;
    out.p = normal_two_sided_p(out.z);
  } else {
    out.z = out.diff > 0.0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
    out.p = 0.0;
  }
  return out;
}

}  // namespace gmi
