#include "fnet/defactor.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fnet/error.hpp"
#include "fnet/parallel.hpp"

namespace fnet {

std::string to_string(IndexMethod m) { return m == IndexMethod::mean ? "mean" : "median"; }
std::string to_string(FitMethod m) { return m == FitMethod::ols ? "ols" : "theil_sen"; }
std::string to_string(Grouping g) {
  switch (g) {
    case Grouping::sector: return "sector";
    case Grouping::country: return "country";
    case Grouping::all: return "all";
  }
  return "?";
}

IndexMethod parse_index_method(const std::string& s) {
  if (s == "mean") return IndexMethod::mean;
  if (s == "median") return IndexMethod::median;
  throw ValidationError("unknown index method '" + s + "' (expected mean|median)");
}

FitMethod parse_fit_method(const std::string& s) {
  if (s == "ols") return FitMethod::ols;
  if (s == "theil_sen" || s == "theil-sen") return FitMethod::theil_sen;
  throw ValidationError("unknown fit method '" + s + "' (expected ols|theil_sen)");
}

Grouping parse_grouping(const std::string& s) {
  if (s == "sector") return Grouping::sector;
  if (s == "country") return Grouping::country;
  if (s == "all" || s == "market") return Grouping::all;
  throw ValidationError("unknown grouping '" + s + "' (expected sector|country|all)");
}

const std::string& group_label(const CompanyMeta& meta, Grouping g) {
  static const std::string everything = "all";
  switch (g) {
    case Grouping::sector: return meta.sector;
    case Grouping::country: return meta.country;
    case Grouping::all: return everything;
  }
  return everything;
}

double median_inplace(std::span<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double upper = values[mid];
  if (n % 2 == 1) return upper;
  double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

PseudoIndex pseudo_index(const ReturnsPanel& panel, std::span<const std::size_t> members, IndexMethod method,
                         const std::string& group) {
  if (members.empty()) throw ValidationError("pseudo_index: empty member set for group '" + group + "'");
  PseudoIndex out{group, method, std::vector<double>(panel.days())};
  std::vector<double> day(members.size());
  for (std::size_t t = 0; t < panel.days(); ++t) {
    for (std::size_t k = 0; k < members.size(); ++k) day[k] = panel.returns(members[k], t);
    if (method == IndexMethod::mean) {
      double s = 0.0;
      for (double v : day) s += v;
      out.values[t] = s / static_cast<double>(day.size());
    } else {
      out.values[t] = median_inplace(day);
    }
  }
  return out;
}

RegressionFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("ols_fit: x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("ols_fit: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mx += x[t];
    my += y[t];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double dx = x[t] - mx;
    sxx += dx * dx;
    sxy += dx * (y[t] - my);
  }
  if (!(sxx > 0.0)) throw NumericError("ols_fit: regressor is constant");
  double beta = sxy / sxx;
  return {my - beta * mx, beta, FitMethod::ols};
}

RegressionFit theil_sen_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("theil_sen_fit: x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("theil_sen_fit: need at least 2 points");
  std::vector<double> slopes;
  slopes.reserve(n * (n - 1) / 2);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = m + 1; k < n; ++k) {
      double dx = x[m] - x[k];
      if (dx == 0.0) continue;
      slopes.push_back((y[m] - y[k]) / dx);
    }
  }
  if (slopes.empty()) throw NumericError("theil_sen_fit: all regressor values are equal");
  double beta = median_inplace(slopes);
  std::vector<double> offsets(n);
  for (std::size_t t = 0; t < n; ++t) offsets[t] = y[t] - beta * x[t];
  return {median_inplace(offsets), beta, FitMethod::theil_sen};
}

std::string DefactorStage::describe() const {
  return "grouping=" + to_string(grouping) + " index=" + to_string(index_method) + " fit=" + to_string(fit_method) +
         " leave_one_out=" + (leave_one_out ? "1" : "0");
}

std::string ResidualPanel::provenance_comment() const {
  std::string out = "residuals";
  for (const auto& s : provenance) out += " [" + s.describe() + "]";
  return out;
}

namespace {

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

ResidualPanel residualize(const ReturnsPanel& panel, const DefactorStage& stage) {
  const std::size_t n = panel.size();
  if (panel.labels.size() != n) throw ValidationError("residualize: every company needs metadata");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& label = group_label(panel.labels[i], stage.grouping);
    if (label.empty()) throw ValidationError("residualize: company " + panel.companies[i] + " has no " +
                                             to_string(stage.grouping) + " label");
    groups[label].push_back(i);
  }

  // Shared group indices; with leave_one_out each company gets its own below.
  std::map<std::string, PseudoIndex> shared;
  if (!stage.leave_one_out) {
    std::string constant;
    for (const auto& [label, members] : groups) {
      auto idx = pseudo_index(panel, members, stage.index_method, label);
      if (is_constant(idx.values)) constant += constant.empty() ? label : ", " + label;
      shared.emplace(label, std::move(idx));
    }
    if (!constant.empty()) throw NumericError("residualize: constant pseudo-index for group: " + constant);
  }

  ResidualPanel out;
  out.panel = panel;
  out.provenance = {stage};
  parallel_for(n, [&](std::size_t i) {
    const auto& label = group_label(panel.labels[i], stage.grouping);
    std::vector<double> own;
    const std::vector<double>* index = nullptr;
    if (stage.leave_one_out) {
      std::vector<std::size_t> others;
      for (std::size_t j : groups.at(label)) {
        if (j != i) others.push_back(j);
      }
      if (others.empty()) {
        throw ValidationError("residualize: group '" + label + "' has no members left after leaving out " +
                              panel.companies[i]);
      }
      own = pseudo_index(panel, others, stage.index_method, label).values;
      if (is_constant(own)) throw NumericError("residualize: constant pseudo-index for group: " + label);
      index = &own;
    } else {
      index = &shared.at(label).values;
    }
    auto y = panel.returns.row(i);
    auto fit = stage.fit_method == FitMethod::ols ? ols_fit(*index, y) : theil_sen_fit(*index, y);
    auto dst = out.panel.returns.row(i);
    for (std::size_t t = 0; t < y.size(); ++t) dst[t] = y[t] - fit.alpha - fit.beta * (*index)[t];
  });
  return out;
}

ResidualPanel residualize(const ResidualPanel& panel, const DefactorStage& stage) {
  auto out = residualize(panel.panel, stage);
  out.provenance = panel.provenance;
  out.provenance.push_back(stage);
  return out;
}

}  // namespace fnet
