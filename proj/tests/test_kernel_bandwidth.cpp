#include <doctest.h>

#include <cmath>
#include <vector>

#include "gmi/bandwidth.hpp"
#include "gmi/kernel.hpp"
#include "oracle.hpp"

using gmi::SubjectRecord;

namespace {

std::vector<SubjectRecord> t0_only(std::initializer_list<double> t0s) {
  std::vector<SubjectRecord> out;
  for (const double t : t0s) out.push_back({t, 1.0, 1, {}, {}});
  return out;
}

// composite Simpson over [-80, 80]; independent of the adaptive quadrature
double simpson_integral_normalized(const gmi::KernelSpec& k) {
  const int steps = 400000;  // even
  const double a = -80.0, b = 80.0;
  const double h = (b - a) / steps;
  double sum = k(a) + k(b);
  for (int i = 1; i < steps; ++i) sum += k(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("raw kernel value at zero") {
  CHECK(std::fabs(gmi::silverman_kernel_raw(0.0) - 0.5 * std::sin(3.14159265358979324 / 4.0)) <
        1e-15);
  CHECK(std::fabs(gmi::silverman_kernel_raw(0.0) - 0.35355339059327373) < 1e-15);
}

TEST_CASE("kernel symmetry and nonnegativity") {
  for (const double u : {0.0, 0.3, 1.7, 2.9, 3.3322, 5.0, 12.5, 43.0}) {
    CHECK(gmi::silverman_kernel(u) == gmi::silverman_kernel(-u));
    CHECK(gmi::silverman_kernel(u) >= 0.0);
  }
}

TEST_CASE("first kernel zero at sqrt(2) * 3 pi / 4") {
  const double u0 = std::sqrt(2.0) * 3.0 * 3.14159265358979324 / 4.0;  // ~3.3322
  CHECK(gmi::silverman_kernel(u0) < 1e-12);
  CHECK(gmi::silverman_kernel(u0 - 0.3) > 1e-3);
  CHECK(gmi::silverman_kernel(u0 + 0.3) > 1e-4);
}

TEST_CASE("normalization constant matches the closed form to 1e-10") {
  const double nc = gmi::silverman_kernel_spec().normalization;
  CHECK(std::fabs(nc - oracle::kernel_normalization_closed_form()) < 1e-10);
  // and the closed form itself is ~1.1400934670509
  CHECK(std::fabs(nc - 1.140093467050976) < 1e-9);
}

TEST_CASE("normalized kernel integrates to 1 within 1e-8") {
  CHECK(std::fabs(simpson_integral_normalized(gmi::silverman_kernel_spec()) - 1.0) < 1e-8);
}

TEST_CASE("default bandwidth: two-point dataset") {
  // logs 0 and 2: sd = sqrt(2), a_n = sqrt(2) * 2^(-2/5)
  const auto data = t0_only({1.0, std::exp(2.0)});
  const double a_n = gmi::default_bandwidth(data);
  CHECK(std::fabs(a_n - std::sqrt(2.0) * std::pow(2.0, -0.4)) < 1e-14);
  CHECK(std::fabs(a_n - 1.0717734625362931) < 1e-12);
}

TEST_CASE("default bandwidth: rule scales like n^(-exponent)") {
  std::vector<SubjectRecord> data;
  for (int i = 0; i < 50; ++i) data.push_back({5.0 + i * 0.7, 1.0, 1, {}, {}});
  const double a_default = gmi::default_bandwidth(data);
  const double a_third = gmi::default_bandwidth(data, {1.0 / 3.0});
  // same sd, different exponent
  CHECK(std::fabs(a_default / a_third - std::pow(50.0, 1.0 / 3.0 - 0.4)) < 1e-12);
  CHECK(std::fabs(a_default / std::pow(50.0, -0.4) - a_third / std::pow(50.0, -1.0 / 3.0)) <
        1e-12);
}

TEST_CASE("default bandwidth: degenerate and tiny inputs") {
  CHECK_THROWS_AS(gmi::default_bandwidth(t0_only({std::exp(1.0), std::exp(1.0)})),
                  gmi::data_error);
  CHECK_THROWS_AS(gmi::default_bandwidth(t0_only({2.0})), std::invalid_argument);
}
