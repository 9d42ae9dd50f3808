#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "fnet/correlate.hpp"
#include "fnet/defactor.hpp"
#include "fnet/error.hpp"
#include "fnet/synth.hpp"

using namespace fnet;

namespace {

ReturnsPanel panel_of(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& sectors) {
  ReturnsPanel p;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.companies.push_back("C" + std::to_string(i));
    p.labels.push_back({p.companies.back(), sectors[i], "X"});
  }
  for (std::size_t t = 0; t < rows[0].size(); ++t) p.dates.push_back("d" + std::to_string(t));
  p.returns = Matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < rows[i].size(); ++t) p.returns(i, t) = rows[i][t];
  }
  return p;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

double mean_abs_within(const CorrelationMatrix& c, const std::vector<CompanyMeta>& labels) {
  double s = 0;
  int k = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i].sector != labels[j].sector) continue;
      s += std::abs(c.rho(i, j));
      ++k;
    }
  }
  return s / k;
}

}  // namespace

TEST_CASE("median convention") {
  std::vector<double> odd = {3, 1, 2};
  CHECK(median_inplace(odd) == 2.0);
  std::vector<double> even = {4, 1, 3, 2};
  CHECK(median_inplace(even) == 2.5);
  std::vector<double> none;
  CHECK_THROWS_AS(median_inplace(none), ValidationError);
}

TEST_CASE("pseudo_index examples") {
  auto p = panel_of({{0.01, 0.5}, {0.03, 0.7}, {0.02, 0.6}, {5.0, 0.1}}, {"a", "a", "a", "a"});
  std::vector<std::size_t> one = {0};
  CHECK(pseudo_index(p, one, IndexMethod::median, "g").values == std::vector<double>{0.01, 0.5});
  std::vector<std::size_t> two = {0, 1};
  CHECK(pseudo_index(p, two, IndexMethod::mean, "g").values[0] == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(pseudo_index(p, two, IndexMethod::median, "g").values[0] == doctest::Approx(0.02).epsilon(1e-15));
  std::vector<std::size_t> three = {0, 2, 3};
  CHECK(pseudo_index(p, three, IndexMethod::mean, "g").values[0] == doctest::Approx(1.6767).epsilon(1e-4));
  CHECK(pseudo_index(p, three, IndexMethod::median, "g").values[0] == 0.02);
  std::vector<std::size_t> empty;
  CHECK_THROWS_AS(pseudo_index(p, empty, IndexMethod::mean, "g"), ValidationError);
}

TEST_CASE("median index ignores a member moving on the same side") {
  auto p = panel_of({{0.01}, {0.02}, {0.03}}, {"a", "a", "a"});
  std::vector<std::size_t> all = {0, 1, 2};
  double before = pseudo_index(p, all, IndexMethod::median, "g").values[0];
  p.returns(2, 0) = 9.0;
  CHECK(pseudo_index(p, all, IndexMethod::median, "g").values[0] == before);
}

TEST_CASE("ols examples and normal-equation oracle") {
  std::vector<double> x = {0, 1, 2, 3, 4}, y = x;
  auto f = ols_fit(x, y);
  CHECK(std::abs(f.alpha) <= 1e-12);
  CHECK(std::abs(f.beta - 1.0) <= 1e-12);
  for (std::size_t t = 0; t < x.size(); ++t) y[t] = 3.0 - 2.0 * x[t];
  f = ols_fit(x, y);
  CHECK(std::abs(f.alpha - 3.0) <= 1e-12);
  CHECK(std::abs(f.beta + 2.0) <= 1e-12);

  auto xs = noise(10, 1), ys = noise(10, 2);
  auto lib = ols_fit(xs, ys);
  auto ref = oracle::ols_normal(xs, ys);
  CHECK(std::abs(lib.alpha - ref.alpha) <= 1e-12);
  CHECK(std::abs(lib.beta - ref.beta) <= 1e-12);

  std::vector<double> flat = {1, 1, 1};
  CHECK_THROWS(ols_fit(flat, flat));
}

TEST_CASE("theil-sen examples") {
  std::vector<double> x = {0, 1, 2, 3, 4}, y(5);
  for (int t = 0; t < 5; ++t) y[t] = 2.0 * x[t] + 1.0;
  auto f = theil_sen_fit(x, y);
  CHECK(f.alpha == 1.0);
  CHECK(f.beta == 2.0);

  y = {0, 1, 2, 3, 100};
  f = theil_sen_fit(x, y);
  CHECK(f.beta == 1.0);
  CHECK(f.alpha == 0.0);

  auto xs = noise(20, 3), ys = noise(20, 4);
  auto lib = theil_sen_fit(xs, ys);
  auto ref = oracle::theil_sen(xs, ys);
  CHECK(lib.beta == ref.beta);
  CHECK(lib.alpha == ref.alpha);

  std::vector<double> flat = {2, 2, 2};
  CHECK_THROWS(theil_sen_fit(flat, ys));
}

TEST_CASE("theil-sen: ties skipped, shift and scale behaviour") {
  std::vector<double> x = {0, 0, 1, 1, 2}, y = {0, 5, 1, 6, 2};
  auto ref = oracle::theil_sen(x, y);
  auto f = theil_sen_fit(x, y);
  CHECK(f.beta == ref.beta);

  auto xs = noise(15, 5), ys = noise(15, 6);
  auto base = theil_sen_fit(xs, ys);
  auto shifted = ys;
  for (auto& v : shifted) v += 7.0;
  auto fs = theil_sen_fit(xs, shifted);
  CHECK(fs.beta == doctest::Approx(base.beta).epsilon(1e-12));
  CHECK(fs.alpha == doctest::Approx(base.alpha + 7.0).epsilon(1e-12));
  auto scaled = ys;
  for (auto& v : scaled) v *= -3.0;
  auto fc = theil_sen_fit(xs, scaled);
  CHECK(fc.beta == doctest::Approx(-3.0 * base.beta).epsilon(1e-12));
  CHECK(fc.alpha == doctest::Approx(-3.0 * base.alpha).epsilon(1e-12));
}

TEST_CASE("theil-sen breakdown at desk scale") {
  std::vector<double> x5 = {0, 1, 2, 3, 4}, y5 = {1, 3, 5, 7, 9};
  y5[2] = -400.0;
  CHECK(theil_sen_fit(x5, y5).beta == 2.0);
  std::vector<double> x10(10), y10(10);
  for (int t = 0; t < 10; ++t) {
    x10[t] = t;
    y10[t] = 2.0 * t + 1.0;
  }
  y10[3] = 1e6;
  y10[8] = -1e6;
  CHECK(theil_sen_fit(x10, y10).beta == 2.0);
}

TEST_CASE("residualize examples") {
  DefactorStage stage;
  stage.grouping = Grouping::sector;
  auto solo = panel_of({noise(30, 7), noise(30, 8)}, {"a", "b"});
  for (auto fit : {FitMethod::ols, FitMethod::theil_sen}) {
    stage.fit_method = fit;
    auto r = residualize(solo, stage);
    for (double v : r.panel.returns.data()) CHECK(std::abs(v) <= 1e-15);
  }

  auto twin = noise(30, 9);
  stage.index_method = IndexMethod::mean;
  stage.fit_method = FitMethod::ols;
  auto r = residualize(panel_of({twin, twin}, {"a", "a"}), stage);
  for (double v : r.panel.returns.data()) CHECK(std::abs(v) <= 1e-15);
}

TEST_CASE("ols residuals are uncorrelated with the group index") {
  auto spec = FactorModelSpec::desk_default();
  spec.days = 300;
  auto panel = generate(spec);
  DefactorStage stage{Grouping::country, IndexMethod::mean, FitMethod::ols, false};
  auto r = residualize(panel, stage);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < panel.size(); ++i) groups[panel.labels[i].country].push_back(i);
  for (const auto& [label, members] : groups) {
    auto idx = pseudo_index(panel, members, IndexMethod::mean, label).values;
    for (std::size_t i : members) {
      auto row = r.panel.returns.row(i);
      std::vector<double> res(row.begin(), row.end());
      CHECK(std::abs(oracle::pearson(res, idx)) <= 1e-10);
    }
  }
}

TEST_CASE("residualize lowers within-group correlation on planted groups") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t days = 400;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> sectors;
  std::vector<std::vector<double>> factors(3, std::vector<double>(days));
  for (auto& f : factors) {
    for (auto& v : f) v = g(rng);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    for (int m = 0; m < 5; ++m) {
      std::vector<double> r(days);
      for (std::size_t t = 0; t < days; ++t) r[t] = factors[k][t] + 0.8 * g(rng);
      rows.push_back(r);
      sectors.push_back("S" + std::to_string(k));
    }
  }
  auto panel = panel_of(rows, sectors);
  auto raw = mean_abs_within(pearson(panel), panel.labels);

  // Independent script: median index, exhaustive Theil-Sen, subtract.
  std::vector<std::vector<double>> scripted = rows;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> idx(days);
    for (std::size_t t = 0; t < days; ++t) {
      std::vector<double> day;
      for (int m = 0; m < 5; ++m) day.push_back(rows[k * 5 + m][t]);
      idx[t] = oracle::median_sorted(day);
    }
    for (int m = 0; m < 5; ++m) {
      auto f = oracle::theil_sen(idx, rows[k * 5 + m]);
      for (std::size_t t = 0; t < days; ++t) scripted[k * 5 + m][t] = rows[k * 5 + m][t] - f.alpha - f.beta * idx[t];
    }
  }
  DefactorStage stage{Grouping::sector, IndexMethod::median, FitMethod::theil_sen, false};
  auto res = residualize(panel, stage);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t t = 0; t < days; ++t) CHECK(std::abs(res.panel.returns(i, t) - scripted[i][t]) <= 1e-12);
  }
  CHECK(mean_abs_within(pearson(res.panel), panel.labels) < raw);
}

TEST_CASE("leave-one-out, constant index and provenance") {
  auto p = panel_of({noise(20, 10), noise(20, 11), noise(20, 12)}, {"a", "a", "b"});
  DefactorStage loo{Grouping::sector, IndexMethod::median, FitMethod::theil_sen, true};
  CHECK_THROWS_AS(residualize(p, loo), ValidationError);  // "b" has nobody left

  auto flat = panel_of({std::vector<double>(5, 0.1), std::vector<double>(5, 0.1)}, {"z", "z"});
  try {
    residualize(flat, DefactorStage{});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("z") != std::string::npos);
  }

  auto two = panel_of({noise(20, 10), noise(20, 11)}, {"a", "a"});
  auto first = residualize(two, DefactorStage{Grouping::all, IndexMethod::mean, FitMethod::ols, false});
  auto second = residualize(first, DefactorStage{Grouping::sector, IndexMethod::median, FitMethod::theil_sen, true});
  REQUIRE(second.provenance.size() == 2);
  CHECK(second.provenance[0].grouping == Grouping::all);
  CHECK(second.provenance_comment().find("leave_one_out=1") != std::string::npos);
}
