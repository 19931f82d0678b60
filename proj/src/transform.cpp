#include "paneliv/transform.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <set>

#include <fmt/format.h>

#include "paneliv/error.hpp"

namespace paneliv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int to_int(std::string_view s, std::string_view what) {
  s = trim(s);
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw SpecError(fmt::format("{}: '{}' is not an integer", what, s));
  }
  return v;
}

std::vector<std::string_view> split_args(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expressions

struct Expr {
  enum class Op { variable, log, at_year, diff, growth };
  Op op = Op::variable;
  std::string name;  // variable
  int year = 0;      // at_year
  std::unique_ptr<Expr> inner;
};

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

std::unique_ptr<Expr> parse_expr(std::string_view text, std::string_view whole) {
  text = trim(text);
  auto bad = [&](std::string_view why) {
    return SpecError(fmt::format("bad variable expression '{}': {}", whole, why));
  };
  if (text.empty()) throw bad("empty");

  // `@` binds loosest: find the last one outside parentheses.
  int depth = 0;
  std::size_t at = std::string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')') --depth;
    if (text[i] == '@' && depth == 0) at = i;
  }
  if (at != std::string_view::npos) {
    auto e = std::make_unique<Expr>();
    e->op = Expr::Op::at_year;
    e->year = to_int(text.substr(at + 1), fmt::format("year in '{}'", whole));
    e->inner = parse_expr(text.substr(0, at), whole);
    if (e->inner->op == Expr::Op::diff || e->inner->op == Expr::Op::growth) {
      throw bad("@YEAR cannot apply to diff() or growth()");
    }
    return e;
  }

  auto open = text.find('(');
  if (open != std::string_view::npos) {
    if (text.back() != ')') throw bad("unbalanced parentheses");
    auto fn = trim(text.substr(0, open));
    auto e = std::make_unique<Expr>();
    if (fn == "log") e->op = Expr::Op::log;
    else if (fn == "diff") e->op = Expr::Op::diff;
    else if (fn == "growth") e->op = Expr::Op::growth;
    else throw bad(fmt::format("unknown function '{}'", fn));
    e->inner = parse_expr(text.substr(open + 1, text.size() - open - 2), whole);
    if ((e->op == Expr::Op::diff || e->op == Expr::Op::growth) &&
        (e->inner->op == Expr::Op::diff || e->inner->op == Expr::Op::growth)) {
      throw bad("nested period operations");
    }
    return e;
  }
  if (!valid_identifier(text)) throw bad(fmt::format("'{}' is not a variable name", text));
  auto e = std::make_unique<Expr>();
  e->name = std::string(text);
  return e;
}

void collect_names(const Expr& e, std::vector<std::string>& out) {
  if (e.op == Expr::Op::variable) {
    if (std::find(out.begin(), out.end(), e.name) == out.end()) out.push_back(e.name);
    return;
  }
  collect_names(*e.inner, out);
}

std::string canonical(const Expr& e) {
  switch (e.op) {
    case Expr::Op::variable: return e.name;
    case Expr::Op::log: return fmt::format("log({})", canonical(*e.inner));
    case Expr::Op::diff: return fmt::format("diff({})", canonical(*e.inner));
    case Expr::Op::growth: return fmt::format("growth({})", canonical(*e.inner));
    case Expr::Op::at_year: return fmt::format("{}@{}", canonical(*e.inner), e.year);
  }
  return {};
}

// Level-valued evaluation on a country-year panel. `at_year` broadcasts the
// country's value in that year to all of its rows.
std::vector<double> eval_levels(const CountryYearPanel& panel, const Expr& e) {
  const auto keys = panel.keys();
  switch (e.op) {
    case Expr::Op::variable: {
      auto col = panel.column(e.name);
      return {col.begin(), col.end()};
    }
    case Expr::Op::log: {
      auto v = eval_levels(panel, *e.inner);
      for (auto& x : v) x = (is_missing(x) || x <= 0.0) ? kMissing : std::log(x);
      return v;
    }
    case Expr::Op::at_year: {
      const auto& grid = panel.year_grid();
      if (!std::binary_search(grid.begin(), grid.end(), e.year)) {
        throw SpecError(fmt::format("'{}': year {} is outside the year grid", canonical(e), e.year));
      }
      auto v = eval_levels(panel, *e.inner);
      std::vector<double> out(keys.size(), kMissing);
      for (std::size_t i = 0; i < keys.size(); ++i) {
        if (auto r = panel.find(keys[i].country, e.year)) out[i] = v[*r];
      }
      return out;
    }
    case Expr::Op::diff:
    case Expr::Op::growth:
      throw SpecError(fmt::format(
          "'{}' needs a long_difference or growth_rate transform", canonical(e)));
  }
  return {};
}

std::vector<std::pair<int, int>> periods_of(const CountryYearPanel& panel, const TransformKind& t) {
  const auto& grid = panel.year_grid();
  const int a = *t.start_year;
  const int b = *t.end_year;
  for (int y : {a, b}) {
    if (!std::binary_search(grid.begin(), grid.end(), y)) {
      throw SpecError(fmt::format("{}: year {} is outside the year grid", t.describe(), y));
    }
  }
  if (!t.per_period) return {{a, b}};
  std::vector<std::pair<int, int>> out;
  int prev = a;
  for (int y : grid) {
    if (y <= a || y > b) continue;
    out.emplace_back(prev, y);
    prev = y;
  }
  return out;
}

PreparedData collapse_periods(const CountryYearPanel& panel, const TransformKind& t,
                              const std::vector<VariableRequest>& requests) {
  PreparedData out;
  const auto periods = periods_of(panel, t);
  const auto countries = panel.countries();

  struct Column {
    std::string name;
    enum class Mode { diff, growth, level_fixed, level_start } mode;
    std::vector<double> levels;  // inner expression evaluated on `panel`
  };
  std::vector<Column> cols;
  std::set<std::string> seen;
  for (const auto& req : requests) {
    auto e = parse_expr(req.expression, req.expression);
    auto name = req.expression;
    if (!seen.insert(name).second) continue;
    Column c{name, Column::Mode::diff, {}};
    const Expr* inner = e.get();
    if (e->op == Expr::Op::diff) {
      inner = e->inner.get();
    } else if (e->op == Expr::Op::growth) {
      c.mode = Column::Mode::growth;
      inner = e->inner.get();
    } else if (e->op == Expr::Op::at_year) {
      c.mode = Column::Mode::level_fixed;
    } else if (req.role == VariableRole::weight) {
      c.mode = Column::Mode::level_start;
    } else if (t.kind == TransformKind::Kind::growth_rate && req.role != VariableRole::instrument) {
      c.mode = Column::Mode::growth;
    }
    c.levels = eval_levels(panel, *inner);
    cols.push_back(std::move(c));
  }

  std::vector<std::string> names;
  for (const auto& c : cols) names.push_back(c.name);
  PanelBuilder builder(names);
  std::vector<int> ends;
  std::size_t zero_denominators = 0;
  std::size_t negative_denominators = 0;
  for (const auto& [a, b] : periods) {
    ends.push_back(b);
    for (const auto& country : countries) {
      auto ra = panel.find(country, a);
      auto rb = panel.find(country, b);
      if (!ra && !rb) continue;
      std::vector<double> values;
      values.reserve(cols.size());
      for (const auto& c : cols) {
        const double va = ra ? c.levels[*ra] : kMissing;
        const double vb = rb ? c.levels[*rb] : kMissing;
        double v = kMissing;
        switch (c.mode) {
          case Column::Mode::diff:
            if (!is_missing(va) && !is_missing(vb)) v = vb - va;
            break;
          case Column::Mode::growth:
            if (!is_missing(va) && !is_missing(vb)) {
              if (va == 0.0) {
                ++zero_denominators;
              } else {
                if (va < 0.0) ++negative_denominators;
                v = (vb - va) / va;
              }
            }
            break;
          case Column::Mode::level_fixed:
            // Broadcast already; either endpoint row carries it.
            v = !is_missing(va) ? va : vb;
            break;
          case Column::Mode::level_start:
            v = va;
            break;
        }
        values.push_back(v);
      }
      builder.add({country, b, 0}, std::move(values));
    }
  }
  for (const auto& [country, m] : panel.country_meta()) builder.set_meta(country, m);
  out.panel = std::move(builder).build(ends);
  if (zero_denominators) {
    out.notes.push_back(fmt::format(
        "{} growth rate(s) undefined (zero start-of-period level); those rows are excluded",
        zero_denominators));
  }
  if (negative_denominators) {
    out.notes.push_back(
        fmt::format("{} growth rate(s) computed from a negative start-of-period level",
                    negative_denominators));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void TransformKind::validate() const {
  switch (kind) {
    case Kind::levels_panel:
    case Kind::long_difference:
    case Kind::growth_rate:
      if (!start_year || !end_year) {
        throw SpecError(fmt::format("{} needs start and end years", describe()));
      }
      if (kind == Kind::levels_panel ? *start_year > *end_year : *start_year >= *end_year) {
        throw SpecError(fmt::format("{}: start year must precede end year", describe()));
      }
      break;
    case Kind::lag:
      if (base_variable.empty()) throw SpecError("lag needs a variable");
      if (lag_periods < 1) throw SpecError(fmt::format("lag periods must be >= 1, got {}", lag_periods));
      break;
    case Kind::year_interaction:
      if (base_variable.empty()) throw SpecError("year_interaction needs a variable");
      break;
  }
}

std::string TransformKind::describe() const {
  auto years = [&] {
    return fmt::format("{}, {}", start_year ? std::to_string(*start_year) : "?",
                       end_year ? std::to_string(*end_year) : "?");
  };
  switch (kind) {
    case Kind::levels_panel:
      return fmt::format("levels_panel({}{})", years(), endpoints_only ? ", endpoints" : "");
    case Kind::long_difference:
      return fmt::format("long_difference({}{})", years(), per_period ? ", per_period" : "");
    case Kind::growth_rate:
      return fmt::format("growth_rate({}{})", years(), per_period ? ", per_period" : "");
    case Kind::lag: return fmt::format("lag({}, {})", base_variable, lag_periods);
    case Kind::year_interaction: return fmt::format("year_interaction({})", base_variable);
  }
  return {};
}

TransformKind parse_transform(std::string_view text) {
  text = trim(text);
  auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw SpecError(fmt::format("bad transform '{}': expected kind(args)", text));
  }
  auto kind = trim(text.substr(0, open));
  auto args = split_args(text.substr(open + 1, text.size() - open - 2));
  TransformKind t;
  auto what = fmt::format("transform '{}'", text);
  auto years = [&](std::string_view flag, bool& flag_out) {
    if (args.size() < 2 || args.size() > 3) {
      throw SpecError(fmt::format("{}: expected (start, end[, {}])", what, flag));
    }
    t.start_year = to_int(args[0], what);
    t.end_year = to_int(args[1], what);
    if (args.size() == 3) {
      if (args[2] != flag) throw SpecError(fmt::format("{}: unknown option '{}'", what, args[2]));
      flag_out = true;
    }
  };
  if (kind == "levels_panel") {
    t.kind = TransformKind::Kind::levels_panel;
    years("endpoints", t.endpoints_only);
  } else if (kind == "long_difference") {
    t.kind = TransformKind::Kind::long_difference;
    years("per_period", t.per_period);
  } else if (kind == "growth_rate") {
    t.kind = TransformKind::Kind::growth_rate;
    years("per_period", t.per_period);
  } else if (kind == "lag") {
    t.kind = TransformKind::Kind::lag;
    if (args.size() != 2) throw SpecError(fmt::format("{}: expected lag(variable, periods)", what));
    t.base_variable = std::string(args[0]);
    t.lag_periods = to_int(args[1], what);
  } else if (kind == "year_interaction") {
    t.kind = TransformKind::Kind::year_interaction;
    if (args.size() != 1) throw SpecError(fmt::format("{}: expected year_interaction(variable)", what));
    t.base_variable = std::string(args[0]);
  } else {
    throw SpecError(fmt::format("unknown transform kind '{}'", kind));
  }
  t.validate();
  return t;
}

std::vector<TransformKind> parse_transforms(std::string_view text) {
  std::vector<TransformKind> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ';') {
      auto piece = trim(text.substr(start, i - start));
      if (!piece.empty()) out.push_back(parse_transform(piece));
      start = i + 1;
    }
  }
  return out;
}

std::string expression_column_name(std::string_view expression) {
  std::string out;
  for (char c : expression) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out.push_back(c);
    else if (c == '@') out += "_at";
    else if (c == '(' || c == ')') out.push_back('_');
  }
  return out;
}

std::vector<std::string> referenced_variables(std::string_view expression) {
  std::vector<std::string> out;
  collect_names(*parse_expr(expression, expression), out);
  return out;
}

void validate_expression(std::string_view expression) { (void)parse_expr(expression, expression); }

namespace {

// Adds the expression's values under its column name unless present.
std::string materialize(CountryYearPanel& panel, const std::string& expression) {
  auto name = expression_column_name(expression);
  if (panel.has_variable(name)) return name;
  auto e = parse_expr(expression, expression);
  panel = panel.with_column(name, eval_levels(panel, *e));
  return name;
}

}  // namespace

PreparedData prepare_variables(const CountryYearPanel& panel,
                               std::span<const TransformKind> steps,
                               std::vector<VariableRequest> requests) {
  PreparedData out{panel, {}, {}};
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& t = steps[s];
    t.validate();
    switch (t.kind) {
      case TransformKind::Kind::lag:
        out.panel = lag_variable(out.panel, materialize(out.panel, t.base_variable), t.lag_periods);
        break;
      case TransformKind::Kind::year_interaction: {
        auto inter = interact_with_year_dummies(out.panel, materialize(out.panel, t.base_variable));
        out.panel = std::move(inter.panel);
        for (auto& n : inter.names) {
          requests.push_back({n, VariableRole::regressor});
          out.generated_exogenous.push_back(std::move(n));
        }
        break;
      }
      case TransformKind::Kind::levels_panel: {
        std::vector<int> years;
        for (int y : out.panel.year_grid()) {
          if (y < *t.start_year || y > *t.end_year) continue;
          if (t.endpoints_only && y != *t.start_year && y != *t.end_year) continue;
          years.push_back(y);
        }
        out.panel = restrict_years(out.panel, std::move(years));
        break;
      }
      case TransformKind::Kind::long_difference:
      case TransformKind::Kind::growth_rate: {
        if (s + 1 != steps.size()) {
          throw SpecError(fmt::format("{} must be the last transform step", t.describe()));
        }
        auto collapsed = collapse_periods(out.panel, t, requests);
        out.panel = std::move(collapsed.panel);
        out.notes.insert(out.notes.end(), collapsed.notes.begin(), collapsed.notes.end());
        return out;
      }
    }
  }

  // Level panel: materialize anything that is not already a plain column.
  for (const auto& req : requests) {
    auto e = parse_expr(req.expression, req.expression);
    if (e->op == Expr::Op::variable) {
      (void)out.panel.column(e->name);
      continue;
    }
    if (out.panel.has_variable(req.expression)) continue;
    out.panel = out.panel.with_column(req.expression, eval_levels(out.panel, *e));
  }
  return out;
}

}  // namespace paneliv
