#include "fnet/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fnet/error.hpp"
#include "fnet/text.hpp"

namespace fnet {

CorrelationMatrix pearson(const ReturnsPanel& panel) {
  const std::size_t n = panel.size();
  const std::size_t days = panel.days();
  if (days < 2) throw ValidationError("pearson: need at least 2 days, got " + std::to_string(days));

  // Mean-centered series scaled to unit norm; correlation is then a dot product.
  Matrix z(n, days);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = panel.returns.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(days);
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    if (!(ss > 0.0)) throw NumericError("pearson: zero variance for company " + panel.companies[i]);
    double inv = 1.0 / std::sqrt(ss);
    for (std::size_t t = 0; t < days; ++t) z(i, t) = (r[t] - mean) * inv;
  }

  CorrelationMatrix out{panel.companies, Matrix(n, n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    out.rho(i, i) = 1.0;
    auto zi = z.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto zj = z.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < days; ++t) s += zi[t] * zj[t];
      s = std::clamp(s, -1.0, 1.0);
      out.rho(i, j) = s;
      out.rho(j, i) = s;
    }
  }
  return out;
}

DistanceMatrix to_distance(const CorrelationMatrix& corr) {
  const std::size_t n = corr.companies.size();
  if (corr.rho.rows() != n || corr.rho.cols() != n) throw ValidationError("to_distance: matrix is not n x n");
  DistanceMatrix out{corr.companies, Matrix(n, n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double rho = corr.rho(i, j);
      if (!(rho >= -1.0 && rho <= 1.0)) {
        throw ValidationError("to_distance: correlation " + text::format_double(rho) + " outside [-1, 1] at (" +
                              corr.companies[i] + ", " + corr.companies[j] + ")");
      }
      out.w(i, j) = i == j ? 0.0 : std::sqrt(2.0 * (1.0 - rho));
    }
  }
  return out;
}

EWState EWState::initial(std::size_t n, double lambda) {
  EWState s;
  s.lambda = lambda;
  s.var.assign(n, 0.0);
  s.rho = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) s.rho(i, i) = 1.0;
  return s;
}

void ew_step(EWState& state, std::span<const double> r) {
  const std::size_t n = state.var.size();
  if (r.size() != n) {
    throw ValidationError("ew_step: expected " + std::to_string(n) + " returns, got " + std::to_string(r.size()));
  }
  const double lambda = state.lambda;
  const double keep = 1.0 - lambda;
  std::vector<double> sigma(n);
  for (std::size_t i = 0; i < n; ++i) {
    state.var[i] = keep * state.var[i] + lambda * r[i] * r[i];
    sigma[i] = std::sqrt(state.var[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sigma[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sigma[j] == 0.0) continue;
      double v = keep * state.rho(i, j) + lambda * r[i] * r[j] / (sigma[i] * sigma[j]);
      state.rho(i, j) = v;
      state.rho(j, i) = v;
    }
  }
  ++state.t;
}

Matrix ew_distance(const EWState& state) {
  const std::size_t n = state.var.size();
  Matrix w(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double rho = std::clamp(state.rho(i, j), -1.0, 1.0);
      double d = std::sqrt(2.0 * (1.0 - rho));
      w(i, j) = d;
      w(j, i) = d;
    }
  }
  return w;
}

std::size_t default_burn_in(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("lambda must lie in (0, 1)");
  // The epsilon absorbs the representation error of lambda (3 / 0.01 must give 300).
  return static_cast<std::size_t>(std::ceil(3.0 / lambda - 1e-9));
}

void ew_distance_for_each(const ReturnsPanel& panel, double lambda, std::size_t burn_in,
                          const std::function<void(std::size_t, const std::string&, const Matrix&)>& sink) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ValidationError("lambda must lie in (0, 1)");
  const std::size_t n = panel.size();
  auto state = EWState::initial(n, lambda);
  std::vector<double> day(n);
  for (std::size_t t = 0; t < panel.days(); ++t) {
    for (std::size_t i = 0; i < n; ++i) day[i] = panel.returns(i, t);
    ew_step(state, day);
    if (t >= burn_in) sink(t, panel.dates[t], ew_distance(state));
  }
}

std::vector<DatedDistance> ew_distance_series(const ReturnsPanel& panel, double lambda, std::size_t burn_in) {
  std::vector<DatedDistance> out;
  ew_distance_for_each(panel, lambda, burn_in, [&](std::size_t, const std::string& date, const Matrix& w) {
    out.push_back({date, {panel.companies, w}});
  });
  return out;
}

std::string format_square(const std::vector<std::string>& ids, const Matrix& m) {
  std::string out = "id";
  for (const auto& id : ids) out += "," + id;
  out += "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) out += "," + text::format_double(m(i, j));
    out += "\n";
  }
  return out;
}

DistanceMatrix parse_distance(std::string_view content, const std::string& source) {
  auto lines = text::split_lines(content);
  if (lines.empty()) throw ParseError(source, 1, "empty distance file");
  auto header = text::split_csv(lines.front().text);
  if (header.empty() || header.front() != "id") throw ParseError(source, lines.front().number, "header must start with 'id'");
  DistanceMatrix d;
  d.companies.assign(header.begin() + 1, header.end());
  const std::size_t n = d.companies.size();
  if (lines.size() != n + 1) throw ParseError(source, lines.back().number, "expected " + std::to_string(n) + " rows");
  d.w = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& line = lines[i + 1];
    auto cells = text::split_csv(line.text);
    if (cells.size() != n + 1) throw ParseError(source, line.number, "expected " + std::to_string(n + 1) + " fields");
    if (cells[0] != d.companies[i]) throw ParseError(source, line.number, "row id '" + cells[0] + "' out of order");
    for (std::size_t j = 0; j < n; ++j) d.w(i, j) = text::parse_double(cells[j + 1], source, line.number);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (d.w(i, i) != 0.0) throw ParseError(source, lines[i + 1].number, "nonzero diagonal for '" + d.companies[i] + "'");
    for (std::size_t j = 0; j < i; ++j) {
      if (d.w(i, j) != d.w(j, i) || d.w(i, j) < 0.0) {
        throw ParseError(source, lines[i + 1].number,
                         "distance between '" + d.companies[j] + "' and '" + d.companies[i] + "' is not symmetric and non-negative");
      }
    }
  }
  return d;
}

DistanceMatrix read_distance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_distance(ss.str(), path.string());
}

void write_distance(const std::filesystem::path& path, const DistanceMatrix& d) {
  text::write_file(path, format_square(d.companies, d.w));
}

std::string format_long_rows(const std::string& date, const std::vector<std::string>& ids, const Matrix& w) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      out += date + "," + ids[i] + "," + ids[j] + "," + text::format_double(w(i, j)) + "\n";
    }
  }
  return out;
}

}  // namespace fnet
