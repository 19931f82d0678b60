#include <doctest.h>

#include <cmath>

#include "paneliv/error.hpp"
#include "paneliv/transform.hpp"

using namespace paneliv;

namespace {

CountryYearPanel grid_panel() {
  PanelBuilder b({"le", "gdp", "pop"});
  const double le_a[] = {40, 44, 50, 55};
  const double le_b[] = {30, 36, 45, 45};
  for (int t = 0; t < 4; ++t) {
    const int year = 1940 + 10 * t;
    b.add({"A", year, 0}, {le_a[t], 100.0 + t, 10.0 + t});
    b.add({"B", year, 0}, {le_b[t], 50.0 * (t + 1), 5.0});
  }
  return std::move(b).build();
}

double at(const PreparedData& d, const char* c, int y, const char* v) {
  return d.panel.value(c, y, v);
}

}  // namespace

TEST_CASE("parse_transform round-trips through describe") {
  for (const char* text : {"levels_panel(1940, 1980)", "levels_panel(1940, 1980, endpoints)",
                           "long_difference(1940, 2000)", "growth_rate(1940, 1980, per_period)",
                           "lag(log_le, 4)", "year_interaction(log_le@1940)"}) {
    CHECK(parse_transform(text).describe() == text);
  }
  CHECK(parse_transforms("levels_panel(1940, 1960); year_interaction(x)").size() == 2);
  CHECK_THROWS_AS(parse_transform("long_difference(1980, 1940)"), SpecError);
  CHECK_THROWS_AS(parse_transform("lag(x, 0)"), SpecError);
  CHECK_THROWS_AS(parse_transform("rotate(x)"), SpecError);
  CHECK_NOTHROW(parse_transform("levels_panel(1940, 1940)"));
}

TEST_CASE("expressions") {
  CHECK(referenced_variables("log(le)@1940") == std::vector<std::string>{"le"});
  CHECK(expression_column_name("log_le@1940") == "log_le_at1940");
  CHECK(expression_column_name("log(le)") == "log_le_");
  CHECK_THROWS_AS(validate_expression("log(le"), SpecError);
  CHECK_THROWS_AS(validate_expression("diff(le)@1940"), SpecError);
}

TEST_CASE("levels panel keeps years and materializes expressions") {
  const auto d = prepare_variables(grid_panel(), parse_transforms("levels_panel(1940, 1970, endpoints)"),
                                   {{"log(le)"}, {"le@1940"}});
  CHECK(d.panel.year_grid() == std::vector<int>{1940, 1970});
  CHECK(d.panel.size() == 4);
  CHECK(at(d, "A", 1970, "log(le)") == doctest::Approx(std::log(55.0)));
  CHECK(at(d, "B", 1970, "le@1940") == 30.0);
  // Levels are read after the window is applied.
  CHECK_THROWS_AS(prepare_variables(grid_panel(), parse_transforms("levels_panel(1950, 1970)"), {{"le@1940"}}),
                  SpecError);
}

TEST_CASE("diff and growth under a long difference") {
  const auto steps = parse_transforms("long_difference(1940, 1970)");
  const auto d = prepare_variables(grid_panel(), steps,
                                   {{"le"}, {"growth(gdp)"}, {"le@1940"}, {"pop", VariableRole::weight}});
  CHECK(d.panel.size() == 2);
  CHECK(at(d, "A", 1970, "le") == 15.0);
  CHECK(at(d, "B", 1970, "growth(gdp)") == doctest::Approx(3.0));
  CHECK(at(d, "A", 1970, "le@1940") == 40.0);
  CHECK(at(d, "A", 1970, "pop") == 10.0);
}

TEST_CASE("growth_rate differences instruments and grows regressors") {
  const auto d = prepare_variables(grid_panel(), parse_transforms("growth_rate(1940, 1960, per_period)"),
                                   {{"gdp"}, {"le", VariableRole::instrument}});
  CHECK(d.panel.year_grid() == std::vector<int>{1950, 1960});
  CHECK(at(d, "B", 1960, "gdp") == doctest::Approx(0.5));
  CHECK(at(d, "A", 1950, "le") == 4.0);
}

TEST_CASE("zero start levels drop growth rows with a note") {
  PanelBuilder b({"v"});
  b.add({"A", 1940, 0}, {0.0});
  b.add({"A", 1950, 0}, {1.0});
  const auto d = prepare_variables(std::move(b).build(), parse_transforms("growth_rate(1940, 1950)"),
                                   {{"v"}});
  CHECK(is_missing(d.panel.value("A", 1950, "v")));
  CHECK(d.notes.size() == 1);
}

TEST_CASE("collapsing transforms must come last") {
  CHECK_THROWS_AS(prepare_variables(grid_panel(), parse_transforms("long_difference(1940, 1970); lag(le, 1)"),
                                    {{"le"}}),
                  SpecError);
}

TEST_CASE("lag and interactions of expressions") {
  const auto d = prepare_variables(grid_panel(),
                                   parse_transforms("lag(log(le), 1); year_interaction(le@1940)"),
                                   {{"gdp"}});
  CHECK(d.panel.value("A", 1950, lag_name("log_le_", 1)) == doctest::Approx(std::log(40.0)));
  REQUIRE(d.generated_exogenous.size() == 3);
  CHECK(d.generated_exogenous[0] == interaction_name("le_at1940", 1950));
  CHECK(d.panel.value("B", 1960, interaction_name("le_at1940", 1960)) == 30.0);
  CHECK(d.panel.value("B", 1950, interaction_name("le_at1940", 1960)) == 0.0);
}

TEST_CASE("diff outside a period transform is rejected") {
  CHECK_THROWS_AS(prepare_variables(grid_panel(), {}, {{"diff(le)"}}), SpecError);
}
