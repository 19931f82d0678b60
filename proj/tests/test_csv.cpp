#include <doctest.h>

#include <cmath>
#include <sstream>

#include "paneliv/csv.hpp"
#include "paneliv/error.hpp"

using namespace paneliv;

TEST_CASE("read keeps line numbers and unquotes cells") {
  std::istringstream in("a,b\n1,\"x,y\"\n\n2,\"say \"\"hi\"\"\"\n");
  const auto t = csv::read(in, "t.csv");
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].cells[1] == "x,y");
  CHECK(t.rows[1].line == 4);
  CHECK(t.rows[1].cells[1] == "say \"hi\"");
  CHECK(t.column_index("b", "t.csv") == 1);
  CHECK_THROWS_AS(t.column_index("c", "t.csv"), DataError);
}

TEST_CASE("ragged rows are rejected") {
  std::istringstream in("a,b\n1\n");
  CHECK_THROWS_AS(csv::read(in), DataError);
}

TEST_CASE("escape quotes only when needed") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("reals round-trip through format_real") {
  for (double v : {0.1, -1.32, 1e-17, 123456789.125, 4755229.0, 1.0 / 3.0}) {
    CHECK(csv::parse_real(csv::format_real(v), "ctx") == v);
  }
  CHECK(csv::format_real(std::nan("")) == "");
  CHECK(std::isnan(csv::parse_real("  ", "ctx")));
  CHECK_THROWS_AS(csv::parse_real("1.2x", "ctx"), DataError);
  CHECK(csv::parse_int("1940", "ctx") == 1940);
  CHECK_THROWS_AS(csv::parse_int("19.5", "ctx"), DataError);
}
