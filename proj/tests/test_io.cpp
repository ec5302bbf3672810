#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "gmi/analysis.hpp"
#include "gmi/csv.hpp"
#include "gmi/rng.hpp"

using gmi::Dataset;
using gmi::SubjectRecord;

namespace {

// fixed 34-record synthetic cohort shaped like a two-line phase II trial:
// 27 events / 7 censored (21%), and exactly 4 events beyond 9 months so a
// 9-month cap lifts censoring to 11/34 (32%)
std::vector<SubjectRecord> synthetic_trial() {
  std::vector<SubjectRecord> data;
  gmi::Rng rng(0x747269616cull);
  for (int i = 0; i < 34; ++i) {
    SubjectRecord s;
    s.t0 = 2.0 + 8.0 * rng.uniform();
    const double target = (i < 4) ? 9.5 + 3.0 * rng.uniform()      // events past the cap
                                  : 0.5 + 8.0 * rng.uniform();     // events within it
    s.y1 = target;
    s.delta1 = 1;
    if (i >= 27) {  // 7 censored, all within the cap
      s.y1 = 0.5 + 8.0 * rng.uniform();
      s.delta1 = 0;
    }
    data.push_back(s);
  }
  return data;
}

}  // namespace

TEST_CASE("csv: minimal file parses to one record") {
  std::istringstream in("t0,time1,status1\n10,13,1\n");
  const Dataset ds = gmi::parse_csv(in);
  REQUIRE(ds.records.size() == 1);
  CHECK(ds.records[0].t0 == 10.0);
  CHECK(ds.records[0].y1 == 13.0);
  CHECK(ds.records[0].delta1 == 1);
}

TEST_CASE("csv: errors carry line numbers") {
  std::istringstream neg("t0,time1,status1\n-1,13,1\n");
  CHECK_THROWS_WITH_AS(gmi::parse_csv(neg), doctest::Contains("line 2"), gmi::data_error);
  std::istringstream status("t0,time1,status1\n1,13,7\n");
  CHECK_THROWS_AS(gmi::parse_csv(status), gmi::data_error);
  std::istringstream empty("");
  CHECK_THROWS_AS(gmi::parse_csv(empty), gmi::data_error);
  std::istringstream header_only("t0,time1,status1\n");
  CHECK_THROWS_AS(gmi::parse_csv(header_only), gmi::data_error);
  std::istringstream missing("t0,status1\n1,1\n");
  CHECK_THROWS_AS(gmi::parse_csv(missing), gmi::data_error);
  std::istringstream ragged("t0,time1,status1\n1,2\n");
  CHECK_THROWS_WITH_AS(gmi::parse_csv(ragged), doctest::Contains("line 2"), gmi::data_error);
}

TEST_CASE("csv: covariate columns are detected by prefix") {
  std::istringstream in("t0,time1,status1,z1,z2,v1\n2,3,1,0.5,-1.25,2\n4,5,0,0.25,0.75,1\n");
  const Dataset ds = gmi::parse_csv(in);
  REQUIRE(ds.records.size() == 2);
  CHECK(ds.z_columns == std::vector<std::string>{"z1", "z2"});
  CHECK(ds.v_columns == std::vector<std::string>{"v1"});
  CHECK(ds.records[0].z == std::vector<double>{0.5, -1.25});
  CHECK(ds.records[1].v == std::vector<int>{1});
}

TEST_CASE("csv: write then parse reproduces the dataset exactly") {
  gmi::Rng rng(401);
  Dataset ds;
  ds.source = "mem";
  for (int i = 0; i < 40; ++i) {
    SubjectRecord s;
    s.t0 = std::exp(rng.uniform(-2.0, 3.0));
    s.y1 = std::exp(rng.uniform(-2.0, 3.0));
    s.delta1 = rng.uniform() < 0.3 ? 0 : 1;
    s.z = {rng.uniform(-5.0, 5.0)};
    s.v = {static_cast<int>(rng.uniform_int(3))};
    ds.records.push_back(s);
  }
  std::ostringstream out;
  gmi::write_csv(out, ds);
  std::istringstream in(out.str());
  const Dataset back = gmi::parse_csv(in);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].t0 == ds.records[i].t0);
    CHECK(back.records[i].y1 == ds.records[i].y1);
    CHECK(back.records[i].delta1 == ds.records[i].delta1);
    CHECK(back.records[i].z == ds.records[i].z);
    CHECK(back.records[i].v == ds.records[i].v);
  }
}

TEST_CASE("restrict_followup: censors beyond the cap, leaves t0 alone, idempotent") {
  std::vector<SubjectRecord> recs{{5.0, 12.0, 1, {}, {}}, {5.0, 5.0, 1, {}, {}}};
  const auto capped = gmi::restrict_followup(recs, 9.0);
  CHECK(capped[0].y1 == 9.0);
  CHECK(capped[0].delta1 == 0);
  CHECK(capped[1].y1 == 5.0);
  CHECK(capped[1].delta1 == 1);
  CHECK(capped[0].t0 == 5.0);
  const auto twice = gmi::restrict_followup(capped, 9.0);
  for (std::size_t i = 0; i < twice.size(); ++i) {
    CHECK(twice[i].y1 == capped[i].y1);
    CHECK(twice[i].delta1 == capped[i].delta1);
  }
}

TEST_CASE("restrict_followup: censored count grows as the cap shrinks") {
  gmi::Rng rng(402);
  std::vector<SubjectRecord> recs;
  for (int i = 0; i < 60; ++i)
    recs.push_back({1.0 + rng.uniform(0.0, 9.0), rng.uniform(0.1, 20.0),
                    rng.uniform() < 0.8 ? 1 : 0, {}, {}});
  int prev = -1;
  for (const double cap : {18.0, 12.0, 8.0, 5.0, 2.0, 0.5}) {
    const auto capped = gmi::restrict_followup(recs, cap);
    int censored = 0;
    for (const auto& s : capped) censored += (s.delta1 == 0);
    CHECK(censored >= prev);
    prev = censored;
  }
}

TEST_CASE("synthetic trial stand-in: 21% censoring, 32% after the 9-month cap") {
  const auto data = synthetic_trial();
  REQUIRE(data.size() == 34);
  int censored = 0;
  for (const auto& s : data) censored += (s.delta1 == 0);
  CHECK(censored == 7);  // 21%
  const auto capped = gmi::restrict_followup(data, 9.0);
  censored = 0;
  for (const auto& s : capped) censored += (s.delta1 == 0);
  CHECK(censored == 11);  // 32%
}

TEST_CASE("estimate table: four methods, three thresholds, sane layout") {
  const auto data = synthetic_trial();
  gmi::BootstrapConfig cfg;
  cfg.resamples = 200;
  cfg.seed = 17;
  const gmi::EstimateTable table = gmi::estimate_table(data, {1.3, 1.5, 1.7}, cfg);
  CHECK(table.n == 34);
  CHECK(table.events == 27);
  REQUIRE(table.rows.size() == 12);
  for (const auto& row : table.rows) {
    CHECK(row.estimate >= 0.0);
    CHECK(row.estimate <= 1.0);
    CHECK(row.se >= 0.0);
    CHECK(row.ci_low <= row.estimate + 1e-12);
    CHECK(row.estimate <= row.ci_high + 1e-12);
    if (row.method == gmi::Method::proposed) {
      CHECK(row.is_reference);
    } else {
      CHECK(row.wald_p >= 0.0);
      CHECK(row.wald_p <= 1.0);
      // pct_dif consistency with the stored estimates
      const auto& ref = *std::find_if(table.rows.begin(), table.rows.end(), [&](const auto& x) {
        return x.method == gmi::Method::proposed && x.r == row.r;
      });
      CHECK(std::fabs(row.pct_dif - 100.0 * (row.estimate - ref.estimate) / ref.estimate) <
            1e-9);
    }
  }
}

TEST_CASE("curve export: sorted jump grid, one point set per method") {
  const auto data = synthetic_trial();
  gmi::BootstrapConfig cfg;
  cfg.resamples = 100;
  cfg.seed = 23;
  const gmi::CurveExport curves = gmi::export_curves(
      data, {gmi::Method::proposed, gmi::Method::km, gmi::Method::lognormal}, cfg);
  REQUIRE(curves.curves.size() == 3);
  for (const auto& [method, pts] : curves.curves) {
    REQUIRE(!pts.empty());
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].r > pts[k - 1].r);
    for (const auto& p : pts) {
      CHECK(p.ci_low <= p.estimate + 1e-12);
      CHECK(p.estimate <= p.ci_high + 1e-12);
    }
  }
  // proposed curve matches the library call on the jump grid
  const double a_n = gmi::default_bandwidth(data);
  const auto& prop = curves.curves[0].second;
  for (const auto& p : prop) {
    CHECK(std::fabs(p.estimate -
                    gmi::survival_gmi(p.r, data, a_n, gmi::silverman_kernel_spec())) < 1e-12);
  }
}
