#include <doctest.h>

#include <cmath>
#include <vector>

#include "gmi/bootstrap.hpp"
#include "gmi/estimator.hpp"
#include "gmi/frailty.hpp"
#include "gmi/rng.hpp"
#include "oracle.hpp"

using gmi::SubjectRecord;

namespace {

const gmi::KernelSpec& kernel() { return gmi::silverman_kernel_spec(); }

std::vector<SubjectRecord> random_dataset(gmi::Rng& rng, int n, double censor_prob) {
  std::vector<SubjectRecord> data(n);
  for (int i = 0; i < n; ++i) {
    data[i].t0 = std::exp(rng.uniform(-1.0, 2.5));
    data[i].y1 = data[i].t0 * std::exp(rng.uniform(-1.2, 1.2));
    data[i].delta1 = rng.uniform() < censor_prob ? 0 : 1;
  }
  return data;
}

}  // namespace

TEST_CASE("influence values vanish below the smallest observed ratio") {
  gmi::Rng rng(101);
  const auto data = random_dataset(rng, 8, 0.3);
  double r = 1e9;
  for (const auto& s : data) r = std::min(r, s.ratio());
  r *= 0.5;
  const gmi::InfluenceVector iv = gmi::influence_values(r, data, 0.7, kernel());
  for (const double x : iv.xi) CHECK(x == 0.0);
  CHECK(gmi::plugin_variance(r, data, 0.7, kernel()) == 0.0);
}

TEST_CASE("no censoring + huge bandwidth: influence collapses to the empirical form") {
  gmi::Rng rng(102);
  const auto data = random_dataset(rng, 10, 0.0);
  std::vector<double> ratios;
  for (const auto& s : data) ratios.push_back(s.ratio());
  std::sort(ratios.begin(), ratios.end());
  const double r = 0.5 * (ratios[4] + ratios[5]);
  const double s_hat = gmi::survival_gmi(r, data, 1e6, kernel());

  const gmi::InfluenceVector iv = gmi::influence_values(r, data, 1e6, kernel());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double expected = (data[i].ratio() > r ? 1.0 : 0.0) - s_hat;
    CHECK(std::fabs(iv.xi[i] - expected) < 1e-10);
  }
  const double var = gmi::plugin_variance(r, data, 1e6, kernel());
  CHECK(std::fabs(var - s_hat * (1.0 - s_hat) / data.size()) < 1e-10);
}

TEST_CASE("matches the brute-force influence evaluator") {
  gmi::Rng rng(103);
  for (int rep = 0; rep < 150; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(5));
    const auto data = random_dataset(rng, n, 0.35);
    const double a_n = rng.uniform(0.3, 1.8);
    const double r = rng.uniform(0.3, 3.0);
    const gmi::InfluenceVector iv = gmi::influence_values(r, data, a_n, kernel());
    const std::vector<double> expected = oracle::influence(r, data, a_n);
    REQUIRE(iv.xi.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const double scale = std::max(1.0, std::fabs(expected[i]));
      CHECK(std::fabs(iv.xi[i] - expected[i]) < 1e-12 * scale);
    }
  }
}

TEST_CASE("plug-in SE tracks the bootstrap SE on simulated data") {
  // sqrt(plug-in variance) within 15% of the bootstrap SE, both averaged
  // over 200 simulated datasets (n = 90, ~20% censoring)
  gmi::FrailtyModel model;
  model.sigma = 0.5;
  model.alpha = 2.0;
  const double tau = gmi::calibrate_tau(model, 0.2, 50000);
  double plugin_sum = 0.0, boot_sum = 0.0;
  const int replicates = 200;
  for (int rep = 0; rep < replicates; ++rep) {
    gmi::Rng rng(gmi::derive_stream(0xC0FFEE, rep));
    const auto pairs = gmi::sample_pairs(model, 90, rng);
    const auto data = gmi::censor_pairs(pairs, tau, rng);
    const double a_n = gmi::default_bandwidth(data);
    plugin_sum += std::sqrt(gmi::plugin_variance(1.3, data, a_n, kernel()));
    gmi::BootstrapConfig cfg;
    cfg.resamples = 200;
    cfg.seed = gmi::derive_stream(0xC0FFEE, rep, 1);
    boot_sum += gmi::bootstrap_se(gmi::gmi_point_estimator(kernel()), data, 1.3, cfg);
  }
  const double plugin_mean = plugin_sum / replicates;
  const double boot_mean = boot_sum / replicates;
  CHECK(std::fabs(plugin_mean - boot_mean) / boot_mean < 0.15);
}

TEST_CASE("three subjects with one censored record: hand evaluation") {
  // equal t0 so all kernel weights coincide; ratios 0.8 (event), 1.1
  // (censored), 1.6 (event); evaluate at r = 1.3
  const std::vector<SubjectRecord> data{
      {2.0, 1.6, 1, {}, {}}, {2.0, 2.2, 0, {}, {}}, {2.0, 3.2, 1, {}, {}}};
  const double r = 1.3;
  // conditional curve: factor at 0.8 is 1 - 1/3 = 2/3; no other jumps <= r.
  // S(r) = 2/3 for every subject, S_bar = 2/3.
  // H(0.8) = 1, H(1.1) = 2/3, H(1.6) = 1/3.
  // jump contribution at 0.8: dlogS = (2/3 - 1)/(2/3) = -1/2.
  // subject 1 (ratio 0.8, event): braces = 1 - 1/H(0.8) - 0 = 0 -> xi = -2/3.
  // subject 2 (ratio 1.1, censored): braces = 1 - 0 - (-1/2)/1 = 3/2
  //   -> xi = (2/3)(3/2) - 2/3 = 1/3.
  // subject 3 (ratio 1.6): same integral as subject 2 -> xi = 1/3.
  const gmi::InfluenceVector iv = gmi::influence_values(r, data, 0.9, kernel());
  CHECK(std::fabs(iv.xi[0] - (-2.0 / 3.0)) < 1e-12);
  CHECK(std::fabs(iv.xi[1] - (1.0 / 3.0)) < 1e-12);
  CHECK(std::fabs(iv.xi[2] - (1.0 / 3.0)) < 1e-12);
  // plug-in variance: (4/9 + 1/9 + 1/9) / 9 = 6 / 81
  CHECK(std::fabs(gmi::plugin_variance(r, data, 0.9, kernel()) - 6.0 / 81.0) < 1e-12);
}
