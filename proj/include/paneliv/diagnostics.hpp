#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paneliv/panel.hpp"
#include "paneliv/regress.hpp"

namespace paneliv {

// Minimum eigenvalue of the concentration matrix scaled by
// (N - K1 - K2) / K2, after partialling exogenous regressors and fixed
// effects out of the endogenous variables and the instruments. Homoskedastic
// by construction. N is the weight sum under frequency weighting.
double cragg_donald_stat(const RegressionSpec& spec, const CountryYearPanel& panel);

enum class MaximalSize { p10 = 10, p15 = 15, p20 = 20, p25 = 25 };

std::string_view to_string(MaximalSize size);
MaximalSize parse_maximal_size(std::string_view text);

// Tabulated 2SLS maximal-size critical values. Lookups never interpolate.
class StockYogoTable {
 public:
  // The table shipped with the library.
  static const StockYogoTable& builtin();
  static StockYogoTable read_csv(std::istream& in, std::string_view source = "<stream>");
  static StockYogoTable read_csv(const std::filesystem::path& path);

  // Throws SpecError when n_instruments < n_endogenous, and Error
  // ("untabulated ...") when the cell is absent.
  double critical(int n_endogenous, int n_instruments, MaximalSize size) const;
  std::optional<double> find(int n_endogenous, int n_instruments, MaximalSize size) const;

 private:
  std::map<std::tuple<int, int, int>, double> cells_;
};

double stock_yogo_critical(int n_endogenous, int n_instruments, MaximalSize size);

// "***" for p < .01, "**" for p < .05, "*" for p < .1.
std::string significance_stars(double p_value);

struct WeakIvReport {
  enum class Verdict { not_weak_at_10, not_weak_at_15, weak, undetermined };

  double cragg_donald_f = 0.0;
  std::map<MaximalSize, double> critical_values;
  int n_endogenous = 0;
  int n_instruments = 0;
  Verdict verdict = Verdict::undetermined;
  std::string note;
};

std::string_view to_string(WeakIvReport::Verdict verdict);

// Compares the statistic with the 10% then the 15% critical value.
WeakIvReport::Verdict weak_iv_verdict(double cragg_donald_f,
                                      const std::map<MaximalSize, double>& critical_values);

WeakIvReport weak_iv_report(const RegressionSpec& spec, const CountryYearPanel& panel);

}  // namespace paneliv
