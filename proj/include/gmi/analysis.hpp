#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmi/aft.hpp"
#include "gmi/bandwidth.hpp"
#include "gmi/bootstrap.hpp"
#include "gmi/estimator.hpp"
#include "gmi/km.hpp"
#include "gmi/subject.hpp"

namespace gmi {

// One line of the four-method comparison at a threshold. pct_dif and the Wald
// test compare a traditional estimator against the proposed one; both are
// absent on the proposed (reference) rows.
struct EstimateRow {
  Method method = Method::proposed;
  double r = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  bool degenerate_ci = false;
  bool is_reference = false;
  double pct_dif = 0.0;
  double wald_z = 0.0;
  double wald_p = 1.0;
};

struct EstimateTable {
  std::vector<double> thresholds;
  std::vector<EstimateRow> rows;  // threshold-major, methods in enum order
  int n = 0;
  int events = 0;
  double censoring_rate = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

// Point estimates of all four methods at the given thresholds; NaN where a
// method is undefined on this sample. One shared evaluation keeps bootstrap
// iterations paired across methods.
struct MethodValues {
  std::array<std::vector<double>, kMethodCount> value;
};

inline MethodValues evaluate_methods(const std::vector<SubjectRecord>& data,
                                     const std::vector<double>& thresholds, double a_n,
                                     const KernelSpec& kernel, bool use_covariates) {
  const int n_thresh = static_cast<int>(thresholds.size());
  MethodValues out;
  for (auto& v : out.value)
    v.assign(n_thresh, std::numeric_limits<double>::quiet_NaN());
  try {
    out.value[static_cast<int>(Method::proposed)] =
        use_covariates ? covariate_survival_gmi_at(thresholds, data, a_n, kernel)
                       : survival_gmi_at(thresholds, data, a_n, kernel);
  } catch (const std::exception&) {
  }
  try {
    const KmCurve km = km_naive(data);
    for (int t = 0; t < n_thresh; ++t)
      out.value[static_cast<int>(Method::km)][t] = km.value_at(thresholds[t]);
  } catch (const std::exception&) {
  }
  for (const AftFamily family : {AftFamily::lognormal, AftFamily::loglogistic}) {
    const int m = family == AftFamily::lognormal ? static_cast<int>(Method::lognormal)
                                                 : static_cast<int>(Method::loglogistic);
    try {
      const AftFit fit = aft_fit(family, data);
      if (fit.converged)
        for (int t = 0; t < n_thresh; ++t)
          out.value[m][t] = aft_survival(fit, thresholds[t]);
    } catch (const std::exception&) {
    }
  }
  return out;
}

}  // namespace detail

// The full comparison workflow: all four estimators at the requested
// thresholds with SEs, log-log CIs, relative differences against the proposed
// estimator, and paired-bootstrap Wald tests. The KM standard error is
// Greenwood; the other three come from one shared bootstrap pass, so within
// each iteration all methods see the same resample.
inline EstimateTable estimate_table(const std::vector<SubjectRecord>& data,
                                    const std::vector<double>& thresholds,
                                    const BootstrapConfig& cfg, BandwidthRule rule = {},
                                    double level = 0.95, bool use_covariates = false) {
  validate_dataset(data);
  const int n = static_cast<int>(data.size());
  if (n < 2) throw data_error("estimate_table: need at least 2 records");
  if (thresholds.empty()) throw std::invalid_argument("estimate_table: no thresholds");
  const int n_thresh = static_cast<int>(thresholds.size());
  const KernelSpec kernel = silverman_kernel_spec();

  EstimateTable table;
  table.thresholds = thresholds;
  table.n = n;
  for (const auto& rec : data) table.events += rec.delta1;
  table.censoring_rate = 1.0 - static_cast<double>(table.events) / n;

  const double a_n = default_bandwidth(data, rule);
  const std::vector<double> proposed =
      use_covariates ? covariate_survival_gmi_at(thresholds, data, a_n, kernel, &table.warnings)
                     : survival_gmi_at(thresholds, data, a_n, kernel);

  const KmCurve km = km_naive(data);
  const AftFit fit_ln = aft_fit(AftFamily::lognormal, data);
  const AftFit fit_ll = aft_fit(AftFamily::loglogistic, data);
  if (!fit_ln.converged)
    throw data_error("estimate_table: lognormal fit did not converge (gradient norm " +
                     std::to_string(fit_ln.grad_norm) + ")");
  if (!fit_ll.converged)
    throw data_error("estimate_table: loglogistic fit did not converge (gradient norm " +
                     std::to_string(fit_ll.grad_norm) + ")");

  std::array<std::vector<double>, kMethodCount> est;
  for (auto& v : est) v.resize(n_thresh);
  for (int t = 0; t < n_thresh; ++t) {
    est[static_cast<int>(Method::proposed)][t] = proposed[t];
    est[static_cast<int>(Method::km)][t] = km.value_at(thresholds[t]);
    est[static_cast<int>(Method::lognormal)][t] = aft_survival(fit_ln, thresholds[t]);
    est[static_cast<int>(Method::loglogistic)][t] = aft_survival(fit_ll, thresholds[t]);
  }

  // paired bootstrap draws, [method][threshold][iteration]
  std::array<std::vector<std::vector<double>>, kMethodCount> draws;
  for (auto& d : draws) d.assign(n_thresh, {});
  std::vector<int> idx;
  std::vector<SubjectRecord> sample(n);
  for (int b = 0; b < cfg.resamples; ++b) {
    resample_indices(cfg.seed, static_cast<std::uint64_t>(b), n, idx);
    for (int i = 0; i < n; ++i) sample[i] = data[idx[i]];
    double a_b = a_n;
    if (cfg.rebandwidth) {
      try {
        a_b = default_bandwidth(sample, rule);
      } catch (const std::exception&) {
        a_b = a_n;
      }
    }
    const detail::MethodValues vals =
        detail::evaluate_methods(sample, thresholds, a_b, kernel, use_covariates);
    for (int m = 0; m < kMethodCount; ++m)
      for (int t = 0; t < n_thresh; ++t) draws[m][t].push_back(vals.value[m][t]);
  }

  auto finite_draws = [&](int m, int t) {
    std::vector<double> v;
    v.reserve(draws[m][t].size());
    for (const double x : draws[m][t])
      if (std::isfinite(x)) v.push_back(x);
    return v;
  };

  for (int t = 0; t < n_thresh; ++t) {
    for (int m = 0; m < kMethodCount; ++m) {
      EstimateRow row;
      row.method = static_cast<Method>(m);
      row.r = thresholds[t];
      row.estimate = est[m][t];
      if (row.method == Method::km) {
        row.se = km.se_at(thresholds[t]);
      } else {
        const std::vector<double> v = finite_draws(m, t);
        if (v.size() < 2)
          throw data_error("estimate_table: bootstrap undefined on (nearly) every resample");
        row.se = detail::sample_sd(v);
      }
      const CiInterval ci = loglog_ci(row.estimate, row.se, level);
      row.ci_low = ci.low;
      row.ci_high = ci.high;
      row.degenerate_ci = ci.degenerate;
      if (row.method == Method::proposed) {
        row.is_reference = true;
      } else {
        const int p = static_cast<int>(Method::proposed);
        row.pct_dif = 100.0 * (est[m][t] - est[p][t]) / est[p][t];
        std::vector<double> diffs;
        for (std::size_t b = 0; b < draws[m][t].size(); ++b) {
          const double dm = draws[m][t][b];
          const double dp = draws[p][t][b];
          if (std::isfinite(dm) && std::isfinite(dp)) diffs.push_back(dm - dp);
        }
        if (diffs.size() < 2)
          throw data_error("estimate_table: paired bootstrap undefined on (nearly) every resample");
        const double diff = est[m][t] - est[p][t];
        const double se_diff = detail::sample_sd(diffs);
        if (diff == 0.0) {
          row.wald_z = 0.0;
          row.wald_p = 1.0;
        } else if (se_diff > 0.0) {
          row.wald_z = diff / se_diff;
          row.wald_p = normal_two_sided_p(row.wald_z);
        } else {
          row.wald_z = diff > 0.0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
          row.wald_p = 0.0;
        }
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

// Step-curve export: every method evaluated at the observed event ratios with
// pointwise CIs (Greenwood for KM, shared paired bootstrap otherwise).
struct CurvePoint {
  double r = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
};

struct CurveExport {
  std::vector<std::pair<Method, std::vector<CurvePoint>>> curves;
};

inline CurveExport export_curves(const std::vector<SubjectRecord>& data,
                                 const std::vector<Method>& methods,
                                 const BootstrapConfig& cfg, BandwidthRule rule = {},
                                 double level = 0.95, bool use_covariates = false) {
  validate_dataset(data);
  // jump grid: distinct observed event ratios
  std::vector<double> grid;
  for (const auto& rec : data)
    if (rec.delta1) grid.push_back(rec.ratio());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw data_error("export_curves: no events in dataset");

  const EstimateTable table = estimate_table(data, grid, cfg, rule, level, use_covariates);
  CurveExport out;
  for (const Method m : methods) {
    std::vector<CurvePoint> pts;
    for (const auto& row : table.rows) {
      if (row.method != m) continue;
      pts.push_back({row.r, row.estimate, row.ci_low, row.ci_high});
    }
    out.curves.emplace_back(m, std::move(pts));
  }
  return out;
}

}  // namespace gmi
