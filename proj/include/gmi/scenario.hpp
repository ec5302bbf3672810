#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmi/aft.hpp"
#include "gmi/bandwidth.hpp"
#include "gmi/bootstrap.hpp"
#include "gmi/estimator.hpp"
#include "gmi/frailty.hpp"
#include "gmi/km.hpp"
#include "gmi/subject.hpp"

namespace gmi {

// One operating-characteristics cell: data from the frailty model with
// horizon tau, all four estimators with SEs and log-log CIs per threshold.
struct SimScenario {
  FrailtyModel model;
  double tau = 1.0;
  int n = 50;
  int replicates = 500;             // desk scale; 2000 for full tables
  std::vector<double> thresholds{1.3, 1.5, 1.7};
  int bootstrap_b = 300;            // desk scale; 5000 for full tables
  std::uint64_t seed = 1;
  int threads = 0;                  // 0 = hardware concurrency
  BandwidthRule bandwidth{};
  double level = 0.95;
  long long truth_draws = 10000000;
};

struct CellStats {
  double truth = 0.0;
  double bias = 0.0;  // mean(estimate) - truth
  double se = 0.0;    // SD of estimates across replicates
  double see = 0.0;   // mean of the SE estimator across replicates
  double cp = 0.0;    // CI coverage of the truth
};

struct ScenarioResult {
  std::vector<double> thresholds;
  std::array<std::vector<CellStats>, kMethodCount> cells;  // [method][threshold]
  double achieved_censoring = 0.0;
  int failed_replicates = 0;
  int replicates_used = 0;
};

namespace detail {

constexpr std::uint64_t kReplicateData = 0x64617461ull;  // "data"
constexpr std::uint64_t kReplicateBoot = 0x72626f74ull;  // "rbot"

inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

struct ReplicateRecord {
  bool ok = false;
  // [method][threshold]
  std::array<std::vector<double>, kMethodCount> est, se;
  std::array<std::vector<std::uint8_t>, kMethodCount> covered;
  double censored_fraction = 0.0;
};

inline ReplicateRecord run_replicate(const SimScenario& sc, const std::vector<double>& truth,
                                     const KernelSpec& kernel, int replicate) {
  const int n_thresh = static_cast<int>(sc.thresholds.size());
  ReplicateRecord rec;
  for (int m = 0; m < kMethodCount; ++m) {
    rec.est[m].assign(n_thresh, 0.0);
    rec.se[m].assign(n_thresh, 0.0);
    rec.covered[m].assign(n_thresh, 0);
  }

  Rng data_rng(derive_stream(sc.seed, replicate, kReplicateData));
  const std::vector<EventPair> pairs = sample_pairs(sc.model, sc.n, data_rng);
  const std::vector<SubjectRecord> data = censor_pairs(pairs, sc.tau, data_rng);
  int censored = 0;
  for (const auto& s : data) censored += (s.delta1 == 0);
  rec.censored_fraction = static_cast<double>(censored) / sc.n;

  const double a_n = default_bandwidth(data, sc.bandwidth);
  rec.est[static_cast<int>(Method::proposed)] =
      survival_gmi_at(sc.thresholds, data, a_n, kernel);

  const KmCurve km = km_naive(data);
  const AftFit fit_ln = aft_fit(AftFamily::lognormal, data);
  const AftFit fit_ll = aft_fit(AftFamily::loglogistic, data);
  if (!fit_ln.converged || !fit_ll.converged)
    throw data_error("aft fit did not converge in replicate");
  for (int t = 0; t < n_thresh; ++t) {
    rec.est[static_cast<int>(Method::km)][t] = km.value_at(sc.thresholds[t]);
    rec.se[static_cast<int>(Method::km)][t] = km.se_at(sc.thresholds[t]);
    rec.est[static_cast<int>(Method::lognormal)][t] = aft_survival(fit_ln, sc.thresholds[t]);
    rec.est[static_cast<int>(Method::loglogistic)][t] = aft_survival(fit_ll, sc.thresholds[t]);
  }

  // one bootstrap pass feeds the proposed and both parametric SEs; the KM SE
  // is Greenwood, matching the usual software default
  const std::uint64_t boot_seed = derive_stream(sc.seed, replicate, kReplicateBoot);
  std::vector<int> idx;
  std::vector<SubjectRecord> sample(sc.n);
  std::array<std::vector<std::vector<double>>, 3> draws;  // proposed, lognormal, loglogistic
  for (auto& d : draws) d.assign(n_thresh, {});
  for (int b = 0; b < sc.bootstrap_b; ++b) {
    resample_indices(boot_seed, b, sc.n, idx);
    for (int i = 0; i < sc.n; ++i) sample[i] = data[idx[i]];
    try {
      const double a_b = default_bandwidth(sample, sc.bandwidth);
      const std::vector<double> prop = survival_gmi_at(sc.thresholds, sample, a_b, kernel);
      for (int t = 0; t < n_thresh; ++t) draws[0][t].push_back(prop[t]);
    } catch (const std::exception&) {
    }
    try {
      const AftFit f = aft_fit(AftFamily::lognormal, sample);
      if (f.converged)
        for (int t = 0; t < n_thresh; ++t)
          draws[1][t].push_back(aft_survival(f, sc.thresholds[t]));
    } catch (const std::exception&) {
    }
    try {
      const AftFit f = aft_fit(AftFamily::loglogistic, sample);
      if (f.converged)
        for (int t = 0; t < n_thresh; ++t)
          draws[2][t].push_back(aft_survival(f, sc.thresholds[t]));
    } catch (const std::exception&) {
    }
  }
  const std::array<int, 3> boot_methods{static_cast<int>(Method::proposed),
                                        static_cast<int>(Method::lognormal),
                                        static_cast<int>(Method::loglogistic)};
  for (int k = 0; k < 3; ++k) {
    for (int t = 0; t < n_thresh; ++t) {
      if (draws[k][t].size() < 2)
        throw data_error("bootstrap collapsed within replicate");
      rec.se[boot_methods[k]][t] = detail::sample_sd(draws[k][t]);
    }
  }

  for (int m = 0; m < kMethodCount; ++m) {
    for (int t = 0; t < n_thresh; ++t) {
      const CiInterval ci = loglog_ci(rec.est[m][t], rec.se[m][t], sc.level);
      rec.covered[m][t] =
          static_cast<std::uint8_t>(ci.low <= truth[t] && truth[t] <= ci.high);
    }
  }
  rec.ok = true;
  return rec;
}

}  // namespace detail

// Runs all replicates (in parallel when threads allow) and aggregates
// bias / SE / SEE / CP per method and threshold. Identical seeds give
// bit-identical results regardless of the thread count: every replicate owns
// its RNG streams and aggregation runs in replicate order.
inline ScenarioResult run_scenario(const SimScenario& sc) {
  if (sc.n < 2) throw std::invalid_argument("run_scenario: n must be at least 2");
  if (sc.replicates < 1) throw std::invalid_argument("run_scenario: replicates must be positive");
  if (sc.thresholds.empty()) throw std::invalid_argument("run_scenario: no thresholds");
  const KernelSpec kernel = silverman_kernel_spec();
  const int n_thresh = static_cast<int>(sc.thresholds.size());

  std::vector<double> truth(n_thresh);
  for (int t = 0; t < n_thresh; ++t)
    truth[t] = true_survival(sc.model, sc.thresholds[t], sc.truth_draws);

  std::vector<detail::ReplicateRecord> records(sc.replicates);
  detail::parallel_for(sc.replicates, sc.threads, [&](int rep) {
    try {
      records[rep] = detail::run_replicate(sc, truth, kernel, rep);
    } catch (const std::exception&) {
      records[rep].ok = false;
    }
  });

  ScenarioResult out;
  out.thresholds = sc.thresholds;
  int used = 0;
  double cens_sum = 0.0;
  for (const auto& rec : records) {
    if (!rec.ok) {
      ++out.failed_replicates;
      continue;
    }
    ++used;
    cens_sum += rec.censored_fraction;
  }
  if (used == 0) throw data_error("run_scenario: every replicate failed");
  if (out.failed_replicates > 0 &&
      static_cast<double>(out.failed_replicates) > 0.01 * sc.replicates)
    throw data_error("run_scenario: more than 1% of replicates failed (" +
                     std::to_string(out.failed_replicates) + "/" +
                     std::to_string(sc.replicates) + ")");
  out.replicates_used = used;
  out.achieved_censoring = cens_sum / used;

  for (int m = 0; m < kMethodCount; ++m) {
    out.cells[m].resize(n_thresh);
    for (int t = 0; t < n_thresh; ++t) {
      double est_mean = 0.0, see_mean = 0.0, cov_mean = 0.0;
      for (const auto& rec : records) {
        if (!rec.ok) continue;
        est_mean += rec.est[m][t];
        see_mean += rec.se[m][t];
        cov_mean += rec.covered[m][t];
      }
      est_mean /= used;
      see_mean /= used;
      cov_mean /= used;
      double ss = 0.0;
      for (const auto& rec : records) {
        if (!rec.ok) continue;
        ss += (rec.est[m][t] - est_mean) * (rec.est[m][t] - est_mean);
      }
      CellStats& cell = out.cells[m][t];
      cell.truth = truth[t];
      cell.bias = est_mean - truth[t];
      cell.se = used > 1 ? std::sqrt(ss / (used - 1)) : 0.0;  // 0 by convention for 1 replicate
      cell.see = see_mean;
      cell.cp = cov_mean;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario grids: plain-text key = value configuration, CSV results.

struct SimGridConfig {
  double mu = 3.0;
  std::vector<double> sigma{0.5};
  std::vector<double> median_ratio{1.0};
  std::vector<double> corr{0.5};
  std::vector<double> censoring{0.2};
  std::vector<int> n{50};
  std::vector<double> thresholds{1.3, 1.5, 1.7};
  int replicates = 500;
  int bootstrap_b = 300;
  std::uint64_t seed = 20240801;
  int threads = 0;
  double bandwidth_exponent = 0.4;
  int calibration_samples = 200000;
  long long truth_draws = 10000000;
};

struct SimTableRow {
  double sigma = 0.0, median_ratio = 0.0, corr = 0.0, censoring = 0.0;
  int n = 0;
  double r = 0.0;
  Method method = Method::proposed;
  CellStats stats;
  double achieved_censoring = 0.0;
  int failed_replicates = 0;
  double alpha = 0.0, tau = 0.0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_num(const std::string& s, const std::string& key) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw data_error("config: bad numeric value '" + s + "' for " + key);
  }
  if (pos != s.size()) throw data_error("config: bad numeric value '" + s + "' for " + key);
  return v;
}

}  // namespace detail

inline SimGridConfig parse_sim_config(std::istream& in) {
  SimGridConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto nums = [&]() {
      std::vector<double> out;
      for (const auto& item : detail::split_list(value))
        out.push_back(detail::parse_num(item, key));
      if (out.empty()) throw data_error("config: empty value for " + key);
      return out;
    };
    if (key == "mu") {
      cfg.mu = detail::parse_num(value, key);
    } else if (key == "sigma") {
      cfg.sigma = nums();
    } else if (key == "median_ratio" || key == "R" || key == "r") {
      cfg.median_ratio = nums();
    } else if (key == "corr" || key == "correlation") {
      cfg.corr = nums();
    } else if (key == "censoring" || key == "cens") {
      cfg.censoring = nums();
    } else if (key == "n") {
      cfg.n.clear();
      for (const double v : nums()) cfg.n.push_back(static_cast<int>(v));
    } else if (key == "thresholds") {
      cfg.thresholds = nums();
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(detail::parse_num(value, key));
    } else if (key == "bootstrap" || key == "bootstrap_b") {
      cfg.bootstrap_b = static_cast<int>(detail::parse_num(value, key));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::parse_num(value, key));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(detail::parse_num(value, key));
    } else if (key == "bandwidth_exponent") {
      cfg.bandwidth_exponent = detail::parse_num(value, key);
    } else if (key == "calibration_samples") {
      cfg.calibration_samples = static_cast<int>(detail::parse_num(value, key));
    } else if (key == "truth_draws") {
      cfg.truth_draws = static_cast<long long>(detail::parse_num(value, key));
    } else {
      throw data_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

// Cross product of the grid lists. Alphas and horizons are calibrated per
// (sigma, R, corr) and (…, censoring) combination; one CSV row per
// (sigma, R, corr, censoring, n, threshold, method).
inline std::vector<SimTableRow> run_grid(const SimGridConfig& cfg,
                                         std::ostream* progress = nullptr) {
  std::vector<SimTableRow> rows;
  for (const double sigma : cfg.sigma) {
    for (const double ratio : cfg.median_ratio) {
      for (const double corr : cfg.corr) {
        FrailtyModel model;
        model.mu = cfg.mu;
        model.sigma = sigma;
        model.median_ratio = ratio;
        model.alpha = calibrate_alpha(model, corr, cfg.calibration_samples);
        if (progress)
          (*progress) << "calibrated alpha = " << model.alpha << " for sigma = " << sigma
                      << ", R = " << ratio << ", corr = " << corr << "\n";
        for (const double cens : cfg.censoring) {
          const double tau = calibrate_tau(model, cens, cfg.calibration_samples);
          if (progress) (*progress) << "  calibrated tau = " << tau << " for censoring = " << cens << "\n";
          for (const int n : cfg.n) {
            SimScenario sc;
            sc.model = model;
            sc.tau = tau;
            sc.n = n;
            sc.replicates = cfg.replicates;
            sc.thresholds = cfg.thresholds;
            sc.bootstrap_b = cfg.bootstrap_b;
            sc.seed = derive_stream(cfg.seed, static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(1000 * sigma) ^
                                        (static_cast<std::uint64_t>(1000 * cens) << 20) ^
                                        (static_cast<std::uint64_t>(1000 * ratio) << 40));
            sc.threads = cfg.threads;
            sc.bandwidth.exponent = cfg.bandwidth_exponent;
            sc.truth_draws = cfg.truth_draws;
            const ScenarioResult res = run_scenario(sc);
            if (progress) (*progress) << "    n = " << n << " done\n";
            for (std::size_t t = 0; t < res.thresholds.size(); ++t) {
              for (int m = 0; m < kMethodCount; ++m) {
                SimTableRow row;
                row.sigma = sigma;
                row.median_ratio = ratio;
                row.corr = corr;
                row.censoring = cens;
                row.n = n;
                row.r = res.thresholds[t];
                row.method = static_cast<Method>(m);
                row.stats = res.cells[m][t];
                row.achieved_censoring = res.achieved_censoring;
                row.failed_replicates = res.failed_replicates;
                row.alpha = model.alpha;
                row.tau = tau;
                rows.push_back(row);
              }
            }
          }
        }
      }
    }
  }
  return rows;
}

inline void write_scenario_csv(std::ostream& out, const std::vector<SimTableRow>& rows) {
  out << "sigma,R,corr,censoring,n,r,method,truth,bias,se,see,cp,"
         "achieved_censoring,failed_replicates,alpha,tau\n";
  char buf[512];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%d,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%d,%.17g,%.17g\n",
                  row.sigma, row.median_ratio, row.corr, row.censoring, row.n, row.r,
                  method_name(row.method), row.stats.truth, row.stats.bias, row.stats.se,
                  row.stats.see, row.stats.cp, row.achieved_censoring, row.failed_replicates,
                  row.alpha, row.tau);
    out << buf;
  }
}

}  // namespace gmi
