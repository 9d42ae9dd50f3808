#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fnet/matrix.hpp"

namespace fnet {

struct CompanyMeta {
  std::string id;
  std::string sector;
  std::string country;

  friend bool operator==(const CompanyMeta&, const CompanyMeta&) = default;
};

/// Closing prices on a common date grid. prices is companies x dates, strictly positive.
struct PricePanel {
  std::vector<std::string> companies;
  std::vector<std::string> dates;
  Matrix prices;
  std::vector<std::string> currency;
  std::vector<CompanyMeta> labels;
};

/// Daily log returns; dates[t] is the later day of each differenced pair.
struct ReturnsPanel {
  std::vector<std::string> companies;
  std::vector<std::string> dates;
  Matrix returns;
  std::vector<CompanyMeta> labels;

  std::size_t size() const noexcept { return companies.size(); }
  std::size_t days() const noexcept { return dates.size(); }
};

struct LoadResult {
  PricePanel panel;
  /// Companies removed because they have a gap on the retained grid, in file order.
  std::vector<std::string> dropped;
};

/// Metadata row as read from the `id,sector,country,currency` file.
struct MetaRecord {
  CompanyMeta meta;
  std::string currency;
};

/// Parses a metadata file. Duplicate ids are rejected.
std::vector<MetaRecord> read_metadata(const std::filesystem::path& path);
std::vector<MetaRecord> parse_metadata(std::string_view content, const std::string& source);

/// Reads a price file plus its metadata. Dates with no prices at all are removed first, then any
/// company with an empty cell is dropped and reported.
LoadResult load_prices(const std::filesystem::path& price_file, const std::filesystem::path& meta_file);
LoadResult parse_prices(std::string_view price_content, const std::string& price_source,
                        const std::vector<MetaRecord>& meta);

/// Rate table keyed by (date, currency); a rate converts one unit of currency into the base.
class FxTable {
 public:
  void set(const std::string& date, const std::string& currency, double rate);
  const double* find(const std::string& date, const std::string& currency) const;
  std::size_t size() const noexcept { return rates_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, double> rates_;
};

FxTable read_fx(const std::filesystem::path& path);
FxTable parse_fx(std::string_view content, const std::string& source);

/// Multiplies every non-base price by its (date, currency) rate.
PricePanel convert_currency(const PricePanel& panel, const FxTable& fx, const std::string& base_currency);

ReturnsPanel to_log_returns(const PricePanel& panel);

/// Returns file: `date,<id...>` header, one row per date. Optional `# ...` comment header lines.
std::string format_returns(const ReturnsPanel& panel, const std::string& comment = {});
void write_returns(const std::filesystem::path& path, const ReturnsPanel& panel, const std::string& comment = {});

/// Reads a returns file and attaches labels from metadata (every column must have a row).
ReturnsPanel read_returns(const std::filesystem::path& path, const std::vector<MetaRecord>& meta);
ReturnsPanel parse_returns(std::string_view content, const std::string& source, const std::vector<MetaRecord>& meta);

std::string format_metadata(const std::vector<CompanyMeta>& labels, const std::vector<std::string>& currency);

/// Prices file rebuilt from returns by exponentiating cumulative sums from `start_price`.
/// `first_date` labels the initial price row.
std::string format_prices_from_returns(const ReturnsPanel& panel, const std::string& first_date,
                                       double start_price = 100.0);

}  // namespace fnet
