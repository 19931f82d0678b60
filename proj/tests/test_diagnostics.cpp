#include <doctest.h>

#include <random>
#include <sstream>

#include "oracle.hpp"
#include "paneliv/diagnostics.hpp"
#include "paneliv/error.hpp"

using namespace paneliv;
using Eigen::MatrixXd;

namespace {

struct Instance {
  CountryYearPanel panel;
  RegressionSpec spec;
};

// One endogenous regressor x1, instruments z1..zk, remaining x's exogenous.
Instance instance(std::mt19937_64& rng, int k, double strength = 0.6) {
  std::normal_distribution<double> normal;
  auto rp = oracle::random_panel(rng);
  const auto x1 = rp.panel.column("x1");
  Instance out{rp.panel, {}};
  for (int j = 1; j <= k; ++j) {
    std::vector<double> z(x1.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = strength / j * x1[i] + normal(rng);
    out.panel = out.panel.with_column("z" + std::to_string(j), z);
    out.spec.instruments.push_back("z" + std::to_string(j));
  }
  out.spec.dependent = "y";
  out.spec.endogenous = {"x1"};
  out.spec.exogenous.assign(rp.regressors.begin() + 1, rp.regressors.end());
  out.spec.country_effects = out.spec.year_effects = true;
  return out;
}

}  // namespace

TEST_CASE("1x1 statistic is the squared first-stage t") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto in = instance(rng, 1);
    const double t = first_stage(in.spec, in.panel)[0].t_statistic("z1");
    CHECK(cragg_donald_stat(in.spec, in.panel) == doctest::Approx(t * t).epsilon(1e-8));
  }
}

TEST_CASE("two instruments match the dense eigen oracle") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto in = instance(rng, 2);
    const auto d = oracle::dummy_design(in.panel, in.spec.exogenous, true, true);
    const MatrixXd x = oracle::partial_out(oracle::columns_of(in.panel, {"x1"}), d.matrix);
    const MatrixXd z = oracle::partial_out(oracle::columns_of(in.panel, {"z1", "z2"}), d.matrix);
    const double dof = static_cast<double>(d.matrix.rows() - d.matrix.cols() - 2);
    CHECK(cragg_donald_stat(in.spec, in.panel) ==
          doctest::Approx(oracle::dense_cragg_donald(x, z, dof)).epsilon(1e-8));
  }
}

TEST_CASE("projection invariance") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    auto in = instance(rng, 2);
    const double base = cragg_donald_stat(in.spec, in.panel);
    const auto z1 = in.panel.column("z1");
    const auto z2 = in.panel.column("z2");
    std::vector<double> a(z1.size()), b(z1.size());
    std::vector<double> shift(z1.size(), 0.0);
    if (!in.spec.exogenous.empty()) {
      auto e = in.panel.column(in.spec.exogenous[0]);
      shift.assign(e.begin(), e.end());
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = 3.0 * z1[i] - 0.5 * z2[i] + 4.0 * shift[i];
      b[i] = 0.25 * z2[i] - 7.0 * shift[i];
    }
    auto p = in.panel.with_column("z1", a).with_column("z2", b);
    CHECK(cragg_donald_stat(in.spec, p) == doctest::Approx(base).epsilon(1e-6));
  }
}

TEST_CASE("needs instruments") {
  std::mt19937_64 rng(4);
  auto in = instance(rng, 1);
  in.spec.instruments.clear();
  CHECK_THROWS_AS(cragg_donald_stat(in.spec, in.panel), SpecError);
}

TEST_CASE("Stock-Yogo lookups") {
  CHECK(stock_yogo_critical(1, 1, MaximalSize::p10) == 16.38);
  CHECK(stock_yogo_critical(1, 1, MaximalSize::p15) == 8.96);
  CHECK(stock_yogo_critical(1, 1, MaximalSize::p20) == stock_yogo_critical(1, 1, MaximalSize::p20));
  CHECK(stock_yogo_critical(1, 1, MaximalSize::p25) > 0.0);
  CHECK_THROWS_AS(stock_yogo_critical(3, 2, MaximalSize::p10), SpecError);
  try {
    stock_yogo_critical(2, 5, MaximalSize::p10);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("untabulated") != std::string::npos);
  }
  std::istringstream dup("n_endogenous,n_instruments,maximal_size,critical_value\n1,1,10,1\n1,1,10%,2\n");
  CHECK_THROWS_AS(StockYogoTable::read_csv(dup), DataError);
  CHECK(parse_maximal_size("15%") == MaximalSize::p15);
}

TEST_CASE("stars") {
  CHECK(significance_stars(0.005) == "***");
  CHECK(significance_stars(0.01) == "**");
  CHECK(significance_stars(0.049) == "**");
  CHECK(significance_stars(0.05) == "*");
  CHECK(significance_stars(0.1) == "");
  CHECK(significance_stars(0.5) == "");
  CHECK(significance_stars(1.0) == "");
  CHECK_THROWS_AS(significance_stars(-0.01), SpecError);
  CHECK_THROWS_AS(significance_stars(1.5), SpecError);
  std::size_t prev = 3;
  for (int i = 0; i <= 1000; ++i) {
    const auto n = significance_stars(i / 1000.0).size();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("verdicts") {
  const std::map<MaximalSize, double> cv{{MaximalSize::p10, 16.38}, {MaximalSize::p15, 8.96}};
  CHECK(weak_iv_verdict(42.151, cv) == WeakIvReport::Verdict::not_weak_at_10);
  CHECK(weak_iv_verdict(12.165, cv) == WeakIvReport::Verdict::not_weak_at_15);
  CHECK(weak_iv_verdict(3.0, cv) == WeakIvReport::Verdict::weak);
  CHECK(weak_iv_verdict(3.0, {}) == WeakIvReport::Verdict::undetermined);
}

TEST_CASE("report bundles statistic and table cells") {
  std::mt19937_64 rng(6);
  auto in = instance(rng, 1, 2.0);
  in.spec.vcov = VcovKind::cluster("country");
  const auto r = weak_iv_report(in.spec, in.panel);
  CHECK(r.cragg_donald_f == cragg_donald_stat(in.spec, in.panel));
  CHECK(r.critical_values.size() == 4);
  CHECK(r.verdict == weak_iv_verdict(r.cragg_donald_f, r.critical_values));
  CHECK(r.note.find("homoskedastic") != std::string::npos);
}
