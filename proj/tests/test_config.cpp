#include <doctest.h>

#include "paneliv/config.hpp"

using namespace paneliv;
using namespace paneliv::config;

TEST_CASE("sections, entries and comments") {
  const auto doc = parse_string(
      "seed = 7\n"
      "# comment\n"
      "[data]\n"
      "country_year = cy.csv  \n"
      "\n"
      "[spec one]\n"
      "exogenous = a, log(b), c\n"
      "transform = \"levels_panel(1940, 1980)\"\n",
      "x.cfg", "/base");
  REQUIRE(doc.sections.size() == 3);
  CHECK(doc.sections[0].name == "");
  CHECK(doc.sections[0].get("seed") == "7");
  CHECK(doc.find("data")->get("country_year") == "cy.csv");
  CHECK(doc.find("spec one")->find("exogenous")->line == 7);
  CHECK(doc.find("spec one")->get("transform") == "levels_panel(1940, 1980)");
  CHECK(doc.resolve("cy.csv") == std::filesystem::path("/base/cy.csv"));
  CHECK(doc.resolve("/abs/cy.csv") == std::filesystem::path("/abs/cy.csv"));
  CHECK_FALSE(doc.find("nope"));
}

TEST_CASE("errors carry source and line") {
  auto expect = [](const char* text, std::size_t line) {
    try {
      parse_string(text, "bad.cfg");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(e.line() == line);
      CHECK(std::string(e.what()).rfind("bad.cfg:" + std::to_string(line) + ":", 0) == 0);
    }
  };
  expect("[a]\nkey value\n", 2);
  expect("[a]\nk = 1\nk = 2\n", 3);
  expect("[a]\n[b]\n[a]\n", 3);
  expect("[unterminated\n", 1);
  expect("[a]\n = 1\n", 2);
}

TEST_CASE("lists respect parentheses") {
  CHECK(split_list("a, log(b), levels_panel(1940, 1980)") ==
        std::vector<std::string>{"a", "log(b)", "levels_panel(1940, 1980)"});
  CHECK(split_list("").empty());
  CHECK(split_list(" x ") == std::vector<std::string>{"x"});
  CHECK(trim("  a b ") == "a b");
}
