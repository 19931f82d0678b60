#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "paneliv/panel.hpp"

namespace paneliv {

// One step of the data preparation applied before estimation.
//
//   levels_panel(a, b[, endpoints])   keep grid years in [a, b] (or only a and b)
//   long_difference(a, b[, per_period])
//   growth_rate(a, b[, per_period])   collapse to changes between a and b, or
//                                     between consecutive grid years in [a, b]
//   lag(v, K)                         add v_lagK
//   year_interaction(v)               add v x 1[t = y]; appended to the exogenous set
//
// long_difference and growth_rate must be the last step. They produce one
// row per (country, period end year).
struct TransformKind {
  enum class Kind { levels_panel, long_difference, growth_rate, lag, year_interaction };

  Kind kind = Kind::levels_panel;
  std::optional<int> start_year;
  std::optional<int> end_year;
  int lag_periods = 1;
  std::string base_variable;
  bool endpoints_only = false;
  bool per_period = false;

  void validate() const;
  std::string describe() const;
  bool collapses_periods() const noexcept {
    return kind == Kind::long_difference || kind == Kind::growth_rate;
  }
};

TransformKind parse_transform(std::string_view text);
// Steps separated by ';'.
std::vector<TransformKind> parse_transforms(std::string_view text);

// Variable expressions used in specs:
//   name          a panel column
//   log(e)        natural log
//   e@YEAR        the country's level of e in YEAR
//   diff(e)       change of e over the period     (period transforms only)
//   growth(e)     growth rate of e over the period (period transforms only)
// Under a period transform a bare expression takes the transform's own
// operation, except instruments under growth_rate, which are differenced,
// and the weight, which is read at the period's start year.
std::vector<std::string> referenced_variables(std::string_view expression);
// Identifier used for columns derived from an expression by lag and
// year_interaction steps: "log_le@1940" -> "log_le_at1940", "log(le)" -> "log_le_".
std::string expression_column_name(std::string_view expression);
void validate_expression(std::string_view expression);

enum class VariableRole { regressor, instrument, weight };

struct VariableRequest {
  std::string expression;
  VariableRole role = VariableRole::regressor;
};

struct PreparedData {
  // Holds one column per requested expression, named by the expression text.
  CountryYearPanel panel;
  // Columns created by year_interaction steps.
  std::vector<std::string> generated_exogenous;
  std::vector<std::string> notes;
};

// Runs the steps in order and materializes every requested expression.
// Requests may refer to columns that earlier steps generate.
PreparedData prepare_variables(const CountryYearPanel& panel,
                               std::span<const TransformKind> steps,
                               std::vector<VariableRequest> requests);

}  // namespace paneliv
