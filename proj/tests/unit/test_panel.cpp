#include <doctest.h>

#include <cmath>

#include "fnet/error.hpp"
#include "fnet/panel.hpp"

using namespace fnet;

namespace {

const char* kMeta =
    "id,sector,country,currency\n"
    "AAA,Energy,France,EUR\n"
    "BBB,Banks,UK,GBP\n";

std::vector<MetaRecord> meta() { return parse_metadata(kMeta, "meta.csv"); }

}  // namespace

TEST_CASE("metadata parsing") {
  auto m = meta();
  REQUIRE(m.size() == 2);
  CHECK(m[1].meta.id == "BBB");
  CHECK(m[1].meta.sector == "Banks");
  CHECK(m[1].meta.country == "UK");
  CHECK(m[1].currency == "GBP");
  CHECK_THROWS_AS(parse_metadata("id,sector,country\nA,B,C\n", "m"), ParseError);
  CHECK_THROWS_AS(parse_metadata("id,sector,country,currency\nA,S,C,EUR\nA,S,C,EUR\n", "m"), ValidationError);
}

TEST_CASE("complete 2 x 3 panel is ingested as is") {
  auto r = parse_prices("date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,11,21\n2020-01-03,12,22\n", "p", meta());
  CHECK(r.dropped.empty());
  CHECK(r.panel.companies.size() == 2);
  CHECK(r.panel.dates.size() == 3);
  CHECK(r.panel.prices(1, 2) == 22.0);
  CHECK(r.panel.labels[0].sector == "Energy");
}

TEST_CASE("a company with a gap is dropped and reported") {
  auto r = parse_prices("date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,11,\n2020-01-03,12,22\n", "p", meta());
  REQUIRE(r.panel.companies.size() == 1);
  CHECK(r.panel.companies[0] == "AAA");
  REQUIRE(r.dropped.size() == 1);
  CHECK(r.dropped[0] == "BBB");
}

TEST_CASE("dates with no prices at all are not part of the grid") {
  auto r = parse_prices("date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,,\n2020-01-03,12,22\n", "p", meta());
  CHECK(r.dropped.empty());
  CHECK(r.panel.dates.size() == 2);
}

TEST_CASE("company without metadata is a validation error naming it") {
  try {
    parse_prices("date,AAA,ZZZ\n2020-01-01,10,20\n", "p", meta());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("ZZZ") != std::string::npos);
  }
}

TEST_CASE("malformed price rows report their line") {
  try {
    parse_prices("date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,11\n", "p.csv", meta());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_prices("date,AAA,BBB\n2020-01-01,10,-1\n", "p", meta()), ParseError);
  CHECK_THROWS_AS(parse_prices("date,AAA,BBB\n2020-01-02,10,1\n2020-01-01,10,1\n", "p", meta()), ParseError);
}

TEST_CASE("currency conversion") {
  auto r = parse_prices("date,AAA,BBB\n2020-01-01,100,100\n2020-01-02,100,100\n", "p", meta());
  auto fx = parse_fx("date,currency,rate\n2020-01-01,GBP,1.5\n2020-01-02,GBP,1.25\n", "fx");
  auto eur = convert_currency(r.panel, fx, "EUR");
  CHECK(eur.prices(0, 0) == 100.0);  // already in base
  CHECK(eur.prices(1, 0) == 150.0);
  CHECK(eur.prices(1, 1) == 125.0);

  auto partial = parse_fx("date,currency,rate\n2020-01-01,GBP,1.5\n", "fx");
  try {
    convert_currency(r.panel, partial, "EUR");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2020-01-02") != std::string::npos);
    CHECK(msg.find("GBP") != std::string::npos);
  }
}

TEST_CASE("log returns") {
  PricePanel p;
  p.companies = {"A", "B", "C"};
  p.labels = {{"A", "s", "c"}, {"B", "s", "c"}, {"C", "s", "c"}};
  p.currency = {"EUR", "EUR", "EUR"};
  p.dates = {"2020-01-01", "2020-01-02"};
  p.prices = Matrix(3, 2);
  p.prices(0, 0) = 5.0;
  p.prices(0, 1) = 5.0;
  p.prices(1, 0) = 1.0;
  p.prices(1, 1) = std::exp(1.0);
  p.prices(2, 0) = 100.0;
  p.prices(2, 1) = 110.0;
  auto r = to_log_returns(p);
  REQUIRE(r.days() == 1);
  CHECK(r.dates[0] == "2020-01-02");
  CHECK(r.returns(0, 0) == 0.0);
  CHECK(r.returns(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.returns(2, 0) == doctest::Approx(0.0953101798043249).epsilon(1e-13));

  p.dates.resize(1);
  p.prices = Matrix(3, 1, 1.0);
  CHECK_THROWS_AS(to_log_returns(p), ValidationError);
}

TEST_CASE("returns file round trip is exact and keeps the comment") {
  ReturnsPanel r;
  r.companies = {"AAA", "BBB"};
  r.dates = {"2020-01-02", "2020-01-03"};
  r.returns = Matrix(2, 2);
  r.returns(0, 0) = 0.1;
  r.returns(0, 1) = -1.0 / 3.0;
  r.returns(1, 0) = 1e-300;
  r.returns(1, 1) = 0.0;
  std::string text = format_returns(r, "residuals [x]");
  CHECK(text.rfind("# residuals [x]\ndate,AAA,BBB\n", 0) == 0);
  auto back = parse_returns(text, "r", meta());
  CHECK(back.companies == r.companies);
  CHECK(back.dates == r.dates);
  CHECK(back.returns == r.returns);
  CHECK(back.labels[1].country == "UK");
}

TEST_CASE("prices rebuilt from returns ingest back to the same returns") {
  ReturnsPanel r;
  r.companies = {"AAA", "BBB"};
  r.labels = {meta()[0].meta, meta()[1].meta};
  r.dates = {"2020-01-02", "2020-01-03"};
  r.returns = Matrix(2, 2);
  r.returns(0, 0) = 0.01;
  r.returns(0, 1) = -0.02;
  r.returns(1, 0) = 0.03;
  r.returns(1, 1) = 0.005;
  auto prices = parse_prices(format_prices_from_returns(r, "2020-01-01"), "p", meta());
  auto back = to_log_returns(prices.panel);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = 0; t < 2; ++t) CHECK(back.returns(i, t) == doctest::Approx(r.returns(i, t)).epsilon(1e-12));
  }
}
