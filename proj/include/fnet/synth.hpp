#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fnet/panel.hpp"

namespace fnet {

struct GroupCount {
  std::string label;
  std::size_t count = 0;
};

/// Country loading switch at `change_day` (0-based return day) for the listed countries
/// (all countries when empty).
struct RegimeChange {
  std::size_t change_day = 0;
  double beta_country_post = 0.0;
  std::vector<std::string> countries;
};

/// Market + sector + country + idiosyncratic factor model:
///   r_it = vol_scale * (bm f_t + bs g_s(i),t + bc(t) h_c(i),t + idio e_it)
/// with unit-variance Student-t (or Gaussian) draws. vol_scale only sets the return magnitude
/// and does not change any correlation.
struct FactorModelSpec {
  std::vector<GroupCount> sectors;
  std::vector<GroupCount> countries;
  std::size_t days = 1000;
  double beta_market = 0.5;
  double beta_sector = 1.0;
  double beta_country = 0.4;
  double idio_scale = 1.0;
  double tail_dof = 3.0;  // infinity selects Gaussian noise
  double vol_scale = 0.01;
  std::optional<RegimeChange> regime;
  std::uint64_t seed = 20120317;
  std::string start_date = "2003-01-01";

  /// 5 sectors x 12 companies crossed with 4 countries x 15 companies, T = 1000.
  static FactorModelSpec desk_default();

  void validate() const;
  std::size_t company_count() const;
  bool gaussian() const { return tail_dof == std::numeric_limits<double>::infinity(); }
};

/// Companies in sector-major blocks; countries dealt round-robin over the sector blocks, skipping
/// countries whose quota is filled.
std::vector<CompanyMeta> assign_companies(const FactorModelSpec& spec);

ReturnsPanel generate(const FactorModelSpec& spec);

/// Population correlation of two distinct companies whose country loading is the pre- or
/// post-regime value (post only differs when a regime is set).
double expected_correlation(const FactorModelSpec& spec, bool same_sector, bool same_country, bool post_regime);

/// Population correlation of two specific companies on a given return day, honouring which
/// countries the regime affects.
double expected_pair_correlation(const FactorModelSpec& spec, const CompanyMeta& a, const CompanyMeta& b,
                                 std::size_t day);

/// Price and metadata files in the ingestion formats (prices rebuilt from 100).
struct SynthFiles {
  std::string prices;
  std::string metadata;
};
SynthFiles synth_files(const FactorModelSpec& spec);

/// Weekday calendar starting at `start` (inclusive), `count` dates.
std::vector<std::string> weekday_dates(const std::string& start, std::size_t count);

}  // namespace fnet
