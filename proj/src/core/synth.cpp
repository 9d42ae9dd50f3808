#include "fnet/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "fnet/error.hpp"
#include "fnet/text.hpp"

namespace fnet {

FactorModelSpec FactorModelSpec::desk_default() {
  FactorModelSpec s;
  for (int k = 1; k <= 5; ++k) s.sectors.push_back({"Sector" + std::to_string(k), 12});
  for (int k = 1; k <= 4; ++k) s.countries.push_back({"Country" + std::to_string(k), 15});
  return s;
}

std::size_t FactorModelSpec::company_count() const {
  std::size_t n = 0;
  for (const auto& s : sectors) n += s.count;
  return n;
}

void FactorModelSpec::validate() const {
  if (sectors.empty() || countries.empty()) throw ValidationError("synth: need at least one sector and one country");
  std::set<std::string> seen;
  std::size_t by_country = 0;
  for (const auto& g : sectors) {
    if (g.count < 1) throw ValidationError("synth: sector '" + g.label + "' has no companies");
    if (g.label.empty() || !seen.insert("s:" + g.label).second) throw ValidationError("synth: bad sector label");
  }
  for (const auto& g : countries) {
    if (g.count < 1) throw ValidationError("synth: country '" + g.label + "' has no companies");
    if (g.label.empty() || !seen.insert("c:" + g.label).second) throw ValidationError("synth: bad country label");
    by_country += g.count;
  }
  if (by_country != company_count()) {
    throw ValidationError("synth: sector counts total " + std::to_string(company_count()) + " but country counts total " +
                          std::to_string(by_country));
  }
  if (days < 2) throw ValidationError("synth: need at least 2 days");
  for (double v : {beta_market, beta_sector, beta_country, idio_scale}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("synth: loadings and scales must be finite and >= 0");
  }
  if (!(vol_scale > 0.0) || !std::isfinite(vol_scale)) throw ValidationError("synth: vol_scale must be positive");
  if (!(tail_dof > 2.0)) throw ValidationError("synth: tail_dof must exceed 2 (finite variance)");
  if (regime) {
    if (regime->change_day < 1 || regime->change_day >= days) throw ValidationError("synth: regime day must lie in [1, T)");
    if (!(regime->beta_country_post >= 0.0) || !std::isfinite(regime->beta_country_post)) {
      throw ValidationError("synth: post-regime country loading must be finite and >= 0");
    }
    for (const auto& c : regime->countries) {
      if (!seen.count("c:" + c)) throw ValidationError("synth: regime names unknown country '" + c + "'");
    }
  }
  if (!text::is_iso_date(start_date)) throw ValidationError("synth: start_date must be YYYY-MM-DD");
}

std::vector<CompanyMeta> assign_companies(const FactorModelSpec& spec) {
  spec.validate();
  const std::size_t n = spec.company_count();
  const int width = static_cast<int>(std::to_string(n).size());
  std::vector<std::size_t> remaining;
  for (const auto& c : spec.countries) remaining.push_back(c.count);
  std::vector<CompanyMeta> out;
  std::size_t cursor = 0;
  for (const auto& sector : spec.sectors) {
    for (std::size_t k = 0; k < sector.count; ++k) {
      while (remaining[cursor] == 0) cursor = (cursor + 1) % remaining.size();
      --remaining[cursor];
      char id[32];
      std::snprintf(id, sizeof id, "C%0*zu", width, out.size() + 1);
      out.push_back({id, sector.label, spec.countries[cursor].label});
      cursor = (cursor + 1) % remaining.size();
    }
  }
  return out;
}

std::vector<std::string> weekday_dates(const std::string& start, std::size_t count) {
  using namespace std::chrono;
  if (!text::is_iso_date(start)) throw ValidationError("bad start date '" + start + "'");
  year_month_day ymd{year{std::stoi(start.substr(0, 4))}, month{static_cast<unsigned>(std::stoi(start.substr(5, 2)))},
                     day{static_cast<unsigned>(std::stoi(start.substr(8, 2)))}};
  if (!ymd.ok()) throw ValidationError("bad start date '" + start + "'");
  sys_days d{ymd};
  std::vector<std::string> out;
  while (out.size() < count) {
    weekday wd{d};
    if (wd != Saturday && wd != Sunday) {
      year_month_day cur{d};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(cur.year()), static_cast<unsigned>(cur.month()),
                    static_cast<unsigned>(cur.day()));
      out.emplace_back(buf);
    }
    d += days{1};
  }
  return out;
}

namespace {

bool regime_applies(const FactorModelSpec& spec, const std::string& country) {
  if (!spec.regime) return false;
  const auto& list = spec.regime->countries;
  return list.empty() || std::find(list.begin(), list.end(), country) != list.end();
}

double country_loading(const FactorModelSpec& spec, const std::string& country, std::size_t day) {
  if (regime_applies(spec, country) && day >= spec.regime->change_day) return spec.regime->beta_country_post;
  return spec.beta_country;
}

}  // namespace

ReturnsPanel generate(const FactorModelSpec& spec) {
  auto labels = assign_companies(spec);
  const std::size_t n = labels.size();
  const std::size_t ns = spec.sectors.size();
  const std::size_t nc = spec.countries.size();
  std::vector<std::size_t> sector_of(n), country_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < ns; ++s) {
      if (spec.sectors[s].label == labels[i].sector) sector_of[i] = s;
    }
    for (std::size_t c = 0; c < nc; ++c) {
      if (spec.countries[c].label == labels[i].country) country_of[i] = c;
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(spec.gaussian() ? 3.0 : spec.tail_dof);
  const double t_scale = spec.gaussian() ? 1.0 : std::sqrt((spec.tail_dof - 2.0) / spec.tail_dof);
  auto draw = [&] { return spec.gaussian() ? normal(rng) : student(rng) * t_scale; };

  ReturnsPanel out;
  out.labels = labels;
  for (const auto& m : labels) out.companies.push_back(m.id);
  auto dates = weekday_dates(spec.start_date, spec.days + 1);
  out.dates.assign(dates.begin() + 1, dates.end());
  out.returns = Matrix(n, spec.days);

  std::vector<double> g(ns), h(nc), bc(nc);
  for (std::size_t t = 0; t < spec.days; ++t) {
    double f = draw();
    for (auto& v : g) v = draw();
    for (auto& v : h) v = draw();
    for (std::size_t c = 0; c < nc; ++c) bc[c] = country_loading(spec, spec.countries[c].label, t);
    for (std::size_t i = 0; i < n; ++i) {
      double e = draw();
      double r = spec.beta_market * f + spec.beta_sector * g[sector_of[i]] + bc[country_of[i]] * h[country_of[i]] +
                 spec.idio_scale * e;
      out.returns(i, t) = spec.vol_scale * r;
    }
  }
  return out;
}

double expected_correlation(const FactorModelSpec& spec, bool same_sector, bool same_country, bool post_regime) {
  const double bc = post_regime && spec.regime ? spec.regime->beta_country_post : spec.beta_country;
  const double bm2 = spec.beta_market * spec.beta_market;
  const double bs2 = spec.beta_sector * spec.beta_sector;
  const double bc2 = bc * bc;
  const double var = bm2 + bs2 + bc2 + spec.idio_scale * spec.idio_scale;
  if (var == 0.0) return 0.0;
  return (bm2 + (same_sector ? bs2 : 0.0) + (same_country ? bc2 : 0.0)) / var;
}

double expected_pair_correlation(const FactorModelSpec& spec, const CompanyMeta& a, const CompanyMeta& b,
                                 std::size_t day) {
  const double bm2 = spec.beta_market * spec.beta_market;
  const double bs2 = spec.beta_sector * spec.beta_sector;
  const double i2 = spec.idio_scale * spec.idio_scale;
  const double ca = country_loading(spec, a.country, day);
  const double cb = country_loading(spec, b.country, day);
  const double var_a = bm2 + bs2 + ca * ca + i2;
  const double var_b = bm2 + bs2 + cb * cb + i2;
  if (var_a == 0.0 || var_b == 0.0) return 0.0;
  double cov = bm2 + (a.sector == b.sector ? bs2 : 0.0) + (a.country == b.country ? ca * cb : 0.0);
  return cov / std::sqrt(var_a * var_b);
}

SynthFiles synth_files(const FactorModelSpec& spec) {
  auto panel = generate(spec);
  SynthFiles files;
  files.prices = format_prices_from_returns(panel, weekday_dates(spec.start_date, 1).front());
  files.metadata = format_metadata(panel.labels, std::vector<std::string>(panel.size(), "EUR"));
  return files;
}

}  // namespace fnet
