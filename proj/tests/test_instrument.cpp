#include <doctest.h>

#include <random>
#include <sstream>

#include "paneliv/error.hpp"
#include "paneliv/instrument.hpp"

using namespace paneliv;

namespace {

InterventionSchedule ab_schedule() {
  InterventionSchedule s;
  s.intervention_year = {{"A", 1940}, {"B", 1950}};
  return s;
}

DiseaseMortalityPanel ab_mortality() {
  return DiseaseMortalityPanel::from_records({{"X", "A", 1940, 0.3},
                                              {"X", "A", 1950, 0.2},
                                              {"X", "B", 1940, 0.5},
                                              {"X", "B", 1950, 0.4},
                                              {"X", "A", 1960, 0.1},
                                              {"X", "B", 1960, 0.3}});
}

DiseaseMortalityPanel random_mortality(std::mt19937_64& rng, const std::vector<std::string>& diseases,
                                       double scale = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DiseaseMortalityPanel::Record> r;
  for (int c = 0; c < 6; ++c) {
    for (int y = 1940; y <= 2000; y += 10) {
      for (const auto& d : diseases) {
        if (u(rng) < 0.1) continue;
        r.push_back({"K" + std::to_string(c), d, y, scale * u(rng)});
      }
    }
  }
  return DiseaseMortalityPanel::from_records(r);
}

std::vector<std::string> table_diseases() {
  std::vector<std::string> out;
  for (const auto& [d, y] : InterventionSchedule::default_schedule().intervention_year) out.push_back(d);
  return out;
}

}  // namespace

TEST_CASE("intervention indicator boundary") {
  const auto s = InterventionSchedule::default_schedule();
  CHECK(s.intervention_year.size() == 14);
  CHECK(intervention_indicator(s, "Smallpox", 1950) == 0);
  CHECK(intervention_indicator(s, "Smallpox", 1960) == 1);
  CHECK(intervention_indicator(s, "Tuberculosis", 1950) == 1);
  CHECK(intervention_indicator(s, "Tuberculosis", 1900) == 0);
  CHECK_THROWS_AS(intervention_indicator(s, "Malaria", 1950), SpecError);
}

TEST_CASE("indicator is non-decreasing in year") {
  const auto s = InterventionSchedule::default_schedule();
  for (const auto& [d, y0] : s.intervention_year) {
    int prev = 0;
    for (int y = 1900; y <= 2000; ++y) {
      const int now = intervention_indicator(s, d, y);
      CHECK(now >= prev);
      prev = now;
    }
  }
}

TEST_CASE("worked two-disease example") {
  const auto series = predicted_mortality(ab_mortality(), ab_schedule());
  CHECK(*series.at("X", 1940) == doctest::Approx(0.8));
  CHECK(*series.at("X", 1950) == doctest::Approx(0.4));
  CHECK(*series.at("X", 1960) == 0.0);
  const auto change = predicted_mortality_change(series, 1940, 1950);
  CHECK(change.values.at("X") == doctest::Approx(-0.4));
  CHECK(predicted_mortality_change(series, 1950, 1950).values.at("X") == 0.0);
  CHECK_THROWS(predicted_mortality_change(series, 1940, 1990));
}

TEST_CASE("a never-intervened disease passes through") {
  InterventionSchedule s;
  s.intervention_year = {{"A", 3000}};
  const auto m = DiseaseMortalityPanel::from_records({{"X", "A", 1940, 0.3}, {"X", "A", 1950, 0.7}});
  const auto series = predicted_mortality(m, s);
  CHECK(*series.at("X", 1940) == 0.3);
  CHECK(*series.at("X", 1950) == 0.7);
}

TEST_CASE("frontier mortality replaces intervened diseases") {
  auto s = ab_schedule();
  s.frontier_mortality = 0.05;
  const auto series = predicted_mortality(ab_mortality(), s);
  CHECK(*series.at("X", 1950) == doctest::Approx(0.45));
  CHECK(*series.at("X", 1960) == doctest::Approx(0.1));
  s.frontier_mortality = -1;
  CHECK_THROWS_AS(s.validate(), SpecError);
}

TEST_CASE("equals the sum over not-yet-intervened diseases") {
  std::mt19937_64 rng(3);
  const auto s = InterventionSchedule::default_schedule();
  const auto m = random_mortality(rng, table_diseases());
  const auto series = predicted_mortality(m, s);
  for (const auto& [key, value] : series.values) {
    double sum = 0.0;
    for (const auto& d : m.diseases()) {
      if (key.second <= s.year_of(d)) sum += m.mortality(key.first, d, key.second).value_or(0.0);
    }
    CHECK(value == sum);
    if (key.second >= 1960) CHECK(value == 0.0);
  }
}

TEST_CASE("additive in diseases and linear in scale") {
  std::mt19937_64 rng(9);
  const auto s = InterventionSchedule::default_schedule();
  const auto all = table_diseases();
  const std::vector<std::string> left(all.begin(), all.begin() + 6), right(all.begin() + 6, all.end());
  const auto ml = random_mortality(rng, left);
  const auto mr = random_mortality(rng, right);
  auto records = ml.records();
  records.insert(records.end(), mr.records().begin(), mr.records().end());
  const auto whole = predicted_mortality(DiseaseMortalityPanel::from_records(records), s);
  const auto pl = predicted_mortality(ml, s);
  const auto pr = predicted_mortality(mr, s);
  for (const auto& [key, v] : whole.values) {
    const double a = pl.at(key.first, key.second).value_or(0.0);
    const double b = pr.at(key.first, key.second).value_or(0.0);
    CHECK(v == doctest::Approx(a + b).epsilon(1e-12));
  }

  auto scaled = records;
  for (auto& r : scaled) r.mortality *= 2.5;
  const auto ps = predicted_mortality(DiseaseMortalityPanel::from_records(scaled), s);
  for (const auto& [key, v] : whole.values) {
    CHECK(ps.values.at(key) == doctest::Approx(2.5 * v).epsilon(1e-12));
  }
}

TEST_CASE("missing disease cells count as zero and are reported") {
  const auto m = DiseaseMortalityPanel::from_records({{"X", "A", 1940, 0.3}, {"X", "B", 1950, 0.4}});
  const auto series = predicted_mortality(m, ab_schedule());
  CHECK(*series.at("X", 1940) == 0.3);
  CHECK(series.coverage.at("X").missing_cells > 0);
}

TEST_CASE("mortality panel validation") {
  CHECK_THROWS_AS(DiseaseMortalityPanel::from_records({{"X", "A", 1940, -0.1}}), DataError);
  CHECK_THROWS_AS(DiseaseMortalityPanel::from_records({{"X", "A", 1940, 0.1}, {"X", "A", 1940, 0.2}}),
                  DataError);
  CHECK_THROWS_AS(DiseaseMortalityPanel::from_records({{"X", "Z", 1940, 0.1}}, {"A"}), DataError);
  CHECK_THROWS_AS(ab_schedule().check_covers(DiseaseMortalityPanel::from_records({{"X", "Q", 1940, 0.1}})),
                  SpecError);
}

TEST_CASE("csv round trip") {
  std::istringstream in("country,disease,year,mortality\nX,A,1940,0.3\nX,B,1940,0.5\n");
  const auto m = read_disease_mortality_csv(in);
  std::ostringstream out;
  write_disease_mortality_csv(m, out);
  std::istringstream again(out.str());
  CHECK(read_disease_mortality_csv(again).records().size() == 2);

  std::istringstream sched("disease,intervention_year\nA,1940\nB,1950\n");
  CHECK(read_intervention_schedule_csv(sched).intervention_year == ab_schedule().intervention_year);

  std::ostringstream series;
  write_predicted_mortality_csv(predicted_mortality(m, ab_schedule()), series);
  CHECK(series.str().rfind("country,year,predicted_mortality\n", 0) == 0);
}

TEST_CASE("summary rows") {
  PredictedMortalitySeries s;
  s.values = {{{"A", 1940}, 0.2}, {{"B", 1940}, 0.4}, {{"A", 1970}, 0.0}, {{"B", 1970}, 0.0},
              {{"A", 1980}, 0.7}};
  const auto rows = instrument_summary(s);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].label == "1940");
  CHECK(rows[0].mean == doctest::Approx(0.3));
  CHECK(rows[0].sd == doctest::Approx(0.141421356).epsilon(1e-6));
  CHECK(rows[1].mean == 0.0);
  CHECK(rows[1].sd == 0.0);
  CHECK(rows[1].max == 0.0);
  CHECK(rows[2].count == 1);
  CHECK(rows[2].sd == 0.0);
  CHECK(rows[2].degenerate);
  CHECK(rows[3].label == "Total");
  CHECK(rows[3].count == 5);
  CHECK_THROWS(instrument_summary(PredictedMortalitySeries{}));
}

TEST_CASE("zeroth-stage dataset") {
  InterventionSchedule s;
  s.intervention_year = {{"D", 1950}};
  std::vector<DiseaseMortalityPanel::Record> r;
  for (int y = 1940; y <= 1970; y += 10) r.push_back({"X", "D", y, 1.0});
  const auto data = zeroth_stage_dataset(DiseaseMortalityPanel::from_records(r), s, 1);
  REQUIRE(data.rows.size() == 4);
  std::vector<int> ind, lag;
  for (const auto& row : data.rows) {
    ind.push_back(row.intervention);
    lag.push_back(row.lagged_intervention.at(0));
  }
  CHECK(ind == std::vector<int>{0, 0, 1, 1});
  CHECK(lag == std::vector<int>{0, 0, 0, 1});

  const auto panel = data.to_panel();
  CHECK(panel.countries() == std::vector<std::string>{ZerothStageData::pair_id("X", "D")});
  CHECK(panel.has_variable("intervention_lag1"));
  CHECK_THROWS_AS(zeroth_stage_dataset(DiseaseMortalityPanel::from_records(r), s, -1), SpecError);
}

TEST_CASE("merge_instrument joins by country and year") {
  PanelBuilder b({"x"});
  b.add({"X", 1940, 0}, {1});
  b.add({"X", 1990, 0}, {1});
  const auto p = merge_instrument(std::move(b).build(), predicted_mortality(ab_mortality(), ab_schedule()));
  CHECK(p.value("X", 1940, "pred_mort") == doctest::Approx(0.8));
  CHECK(is_missing(p.value("X", 1990, "pred_mort")));
}
