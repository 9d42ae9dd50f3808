#include "fnet/panel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fnet/error.hpp"
#include "fnet/text.hpp"

namespace fnet {

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> parse_header(const text::Line& line, const std::string& source,
                                      const std::string& first) {
  auto cells = text::split_csv(line.text);
  if (cells.empty() || cells.front() != first) {
    throw ParseError(source, line.number, "header must start with '" + first + "'");
  }
  std::vector<std::string> ids(cells.begin() + 1, cells.end());
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw ParseError(source, line.number, "empty company id in header");
    if (!seen.insert(id).second) throw ParseError(source, line.number, "duplicate company id '" + id + "'");
  }
  return ids;
}

void check_date(const std::string& date, const std::string& previous, const std::string& source,
                std::size_t line) {
  if (!text::is_iso_date(date)) throw ParseError(source, line, "not an ISO-8601 date: '" + date + "'");
  if (!previous.empty() && date <= previous) {
    throw ParseError(source, line, "dates must be strictly increasing ('" + date + "' after '" + previous + "')");
  }
}

std::unordered_map<std::string, const MetaRecord*> index_meta(const std::vector<MetaRecord>& meta) {
  std::unordered_map<std::string, const MetaRecord*> by_id;
  for (const auto& m : meta) by_id.emplace(m.meta.id, &m);
  return by_id;
}

std::vector<const MetaRecord*> lookup_meta(const std::vector<std::string>& ids,
                                           const std::vector<MetaRecord>& meta) {
  auto by_id = index_meta(meta);
  std::vector<const MetaRecord*> out;
  std::string missing;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing += missing.empty() ? id : ", " + id;
      out.push_back(nullptr);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) throw ValidationError("no metadata for company: " + missing);
  return out;
}

}  // namespace

std::vector<MetaRecord> parse_metadata(std::string_view content, const std::string& source) {
  auto lines = text::split_lines(content);
  if (lines.empty()) throw ParseError(source, 1, "empty metadata file");
  auto header = text::split_csv(lines.front().text);
  if (header != std::vector<std::string>{"id", "sector", "country", "currency"}) {
    throw ParseError(source, lines.front().number, "header must be 'id,sector,country,currency'");
  }
  std::vector<MetaRecord> out;
  std::set<std::string> seen;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    if (cells.size() != 4) throw ParseError(source, lines[k].number, "expected 4 fields");
    for (const auto& c : cells) {
      if (c.empty()) throw ParseError(source, lines[k].number, "empty field");
    }
    if (!seen.insert(cells[0]).second) {
      throw ParseError(source, lines[k].number, "duplicate company id '" + cells[0] + "'");
    }
    out.push_back({{cells[0], cells[1], cells[2]}, cells[3]});
  }
  return out;
}

std::vector<MetaRecord> read_metadata(const std::filesystem::path& path) {
  return parse_metadata(read_all(path), path.string());
}

LoadResult parse_prices(std::string_view price_content, const std::string& source,
                        const std::vector<MetaRecord>& meta) {
  auto lines = text::split_lines(price_content);
  if (lines.empty()) throw ParseError(source, 1, "empty price file");
  auto ids = parse_header(lines.front(), source, "date");
  if (ids.empty()) throw ParseError(source, lines.front().number, "no company columns");
  auto records = lookup_meta(ids, meta);

  const std::size_t n = ids.size();
  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;  // NaN marks a missing cell
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& line = lines[k];
    auto cells = text::split_csv(line.text);
    if (cells.size() != n + 1) {
      throw ParseError(source, line.number,
                       "expected " + std::to_string(n + 1) + " fields, got " + std::to_string(cells.size()));
    }
    check_date(cells[0], dates.empty() ? std::string{} : dates.back(), source, line.number);
    std::vector<double> row(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (cells[i + 1].empty()) {
        row[i] = std::nan("");
        continue;
      }
      double p = text::parse_double(cells[i + 1], source, line.number);
      if (!std::isfinite(p) || p <= 0.0) {
        throw ParseError(source, line.number, "price for " + ids[i] + " must be positive and finite");
      }
      row[i] = p;
      any = true;
    }
    // A date no company traded on is not part of the grid.
    if (!any) continue;
    dates.push_back(cells[0]);
    rows.push_back(std::move(row));
  }

  LoadResult result;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    bool complete = true;
    for (const auto& row : rows) {
      if (std::isnan(row[i])) {
        complete = false;
        break;
      }
    }
    if (complete) {
      keep.push_back(i);
    } else {
      result.dropped.push_back(ids[i]);
    }
  }
  if (keep.empty()) throw ValidationError(source + ": no company has a complete price history");

  auto& panel = result.panel;
  panel.dates = std::move(dates);
  panel.prices = Matrix(keep.size(), panel.dates.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    std::size_t i = keep[r];
    panel.companies.push_back(ids[i]);
    panel.currency.push_back(records[i]->currency);
    panel.labels.push_back(records[i]->meta);
    for (std::size_t t = 0; t < rows.size(); ++t) panel.prices(r, t) = rows[t][i];
  }
  return result;
}

LoadResult load_prices(const std::filesystem::path& price_file, const std::filesystem::path& meta_file) {
  auto meta = read_metadata(meta_file);
  return parse_prices(read_all(price_file), price_file.string(), meta);
}

void FxTable::set(const std::string& date, const std::string& currency, double rate) {
  rates_[{date, currency}] = rate;
}

const double* FxTable::find(const std::string& date, const std::string& currency) const {
  auto it = rates_.find({date, currency});
  return it == rates_.end() ? nullptr : &it->second;
}

FxTable parse_fx(std::string_view content, const std::string& source) {
  auto lines = text::split_lines(content);
  if (lines.empty()) throw ParseError(source, 1, "empty fx file");
  if (text::split_csv(lines.front().text) != std::vector<std::string>{"date", "currency", "rate"}) {
    throw ParseError(source, lines.front().number, "header must be 'date,currency,rate'");
  }
  FxTable fx;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    if (cells.size() != 3) throw ParseError(source, lines[k].number, "expected 3 fields");
    if (!text::is_iso_date(cells[0])) throw ParseError(source, lines[k].number, "bad date '" + cells[0] + "'");
    if (cells[1].empty()) throw ParseError(source, lines[k].number, "empty currency");
    double rate = text::parse_double(cells[2], source, lines[k].number);
    if (!std::isfinite(rate) || rate <= 0.0) throw ParseError(source, lines[k].number, "rate must be positive");
    fx.set(cells[0], cells[1], rate);
  }
  return fx;
}

FxTable read_fx(const std::filesystem::path& path) { return parse_fx(read_all(path), path.string()); }

PricePanel convert_currency(const PricePanel& panel, const FxTable& fx, const std::string& base_currency) {
  PricePanel out = panel;
  for (std::size_t i = 0; i < panel.companies.size(); ++i) {
    const auto& ccy = panel.currency[i];
    if (ccy == base_currency) continue;
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
      const double* rate = fx.find(panel.dates[t], ccy);
      if (rate == nullptr) {
        throw ValidationError("missing fx rate for " + ccy + " on " + panel.dates[t]);
      }
      out.prices(i, t) = panel.prices(i, t) * *rate;
    }
    out.currency[i] = base_currency;
  }
  return out;
}

ReturnsPanel to_log_returns(const PricePanel& panel) {
  const std::size_t n = panel.companies.size();
  const std::size_t days = panel.dates.size();
  if (days < 2) throw ValidationError("need at least 2 dates to form returns, got " + std::to_string(days));
  ReturnsPanel out;
  out.companies = panel.companies;
  out.labels = panel.labels;
  out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  out.returns = Matrix(n, days - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t + 1 < days; ++t) {
      double r = std::log(panel.prices(i, t + 1) / panel.prices(i, t));
      if (!std::isfinite(r)) throw NumericError("non-finite return for " + panel.companies[i] + " on " + out.dates[t]);
      out.returns(i, t) = r;
    }
  }
  return out;
}

std::string format_returns(const ReturnsPanel& panel, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += "date";
  for (const auto& id : panel.companies) out += "," + id;
  out += "\n";
  for (std::size_t t = 0; t < panel.days(); ++t) {
    out += panel.dates[t];
    for (std::size_t i = 0; i < panel.size(); ++i) {
      out += ",";
      out += text::format_double(panel.returns(i, t));
    }
    out += "\n";
  }
  return out;
}

void write_returns(const std::filesystem::path& path, const ReturnsPanel& panel, const std::string& comment) {
  text::write_file(path, format_returns(panel, comment));
}

ReturnsPanel parse_returns(std::string_view content, const std::string& source,
                           const std::vector<MetaRecord>& meta) {
  auto lines = text::split_lines(content);
  if (lines.empty()) throw ParseError(source, 1, "empty returns file");
  ReturnsPanel out;
  out.companies = parse_header(lines.front(), source, "date");
  for (const auto* rec : lookup_meta(out.companies, meta)) out.labels.push_back(rec->meta);
  const std::size_t n = out.companies.size();
  std::vector<double> values;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    if (cells.size() != n + 1) throw ParseError(source, lines[k].number, "expected " + std::to_string(n + 1) + " fields");
    check_date(cells[0], out.dates.empty() ? std::string{} : out.dates.back(), source, lines[k].number);
    out.dates.push_back(cells[0]);
    for (std::size_t i = 0; i < n; ++i) {
      double r = text::parse_double(cells[i + 1], source, lines[k].number);
      if (!std::isfinite(r)) throw ParseError(source, lines[k].number, "non-finite return");
      values.push_back(r);
    }
  }
  out.returns = Matrix(n, out.dates.size());
  for (std::size_t t = 0; t < out.dates.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) out.returns(i, t) = values[t * n + i];
  }
  return out;
}

ReturnsPanel read_returns(const std::filesystem::path& path, const std::vector<MetaRecord>& meta) {
  return parse_returns(read_all(path), path.string(), meta);
}

std::string format_metadata(const std::vector<CompanyMeta>& labels, const std::vector<std::string>& currency) {
  std::string out = "id,sector,country,currency\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels[i].id + "," + labels[i].sector + "," + labels[i].country + "," +
           (i < currency.size() ? currency[i] : std::string("EUR")) + "\n";
  }
  return out;
}

std::string format_prices_from_returns(const ReturnsPanel& panel, const std::string& first_date,
                                       double start_price) {
  const std::size_t n = panel.size();
  std::vector<double> log_price(n, std::log(start_price));
  std::string out = "date";
  for (const auto& id : panel.companies) out += "," + id;
  out += "\n" + first_date;
  for (std::size_t i = 0; i < n; ++i) out += "," + text::format_double(start_price);
  out += "\n";
  for (std::size_t t = 0; t < panel.days(); ++t) {
    out += panel.dates[t];
    for (std::size_t i = 0; i < n; ++i) {
      log_price[i] += panel.returns(i, t);
      out += "," + text::format_double(std::exp(log_price[i]));
    }
    out += "\n";
  }
  return out;
}

}  // namespace fnet
