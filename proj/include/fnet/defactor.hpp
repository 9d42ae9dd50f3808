#pragma once

#include <span>
#include <string>
#include <vector>

#include "fnet/panel.hpp"

namespace fnet {

enum class IndexMethod { mean, median };
enum class FitMethod { ols, theil_sen };
enum class Grouping { sector, country, all };

std::string to_string(IndexMethod m);
std::string to_string(FitMethod m);
std::string to_string(Grouping g);
IndexMethod parse_index_method(const std::string& s);
FitMethod parse_fit_method(const std::string& s);
Grouping parse_grouping(const std::string& s);

/// Label of a company under a grouping; "all" maps every company to one group.
const std::string& group_label(const CompanyMeta& meta, Grouping g);

/// Median of a sequence; even counts give the midpoint of the two central values.
/// Reorders `values`. Throws on empty input.
double median_inplace(std::span<double> values);

struct PseudoIndex {
  std::string group;
  IndexMethod method = IndexMethod::mean;
  std::vector<double> values;
};

/// Per-day mean or median over the member rows of the panel.
PseudoIndex pseudo_index(const ReturnsPanel& panel, std::span<const std::size_t> members, IndexMethod method,
                         const std::string& group = {});

struct RegressionFit {
  double alpha = 0.0;
  double beta = 0.0;
  FitMethod method = FitMethod::ols;
};

/// Least squares fit of y = alpha + beta x.
RegressionFit ols_fit(std::span<const double> x, std::span<const double> y);

/// Median of pairwise slopes over pairs with distinct x, then median of y - beta x.
/// Exhaustive O(T^2) enumeration.
RegressionFit theil_sen_fit(std::span<const double> x, std::span<const double> y);

struct DefactorStage {
  Grouping grouping = Grouping::sector;
  IndexMethod index_method = IndexMethod::median;
  FitMethod fit_method = FitMethod::theil_sen;
  bool leave_one_out = false;

  std::string describe() const;
};

/// Returns panel holding regression residuals, plus the stages that produced it.
struct ResidualPanel {
  ReturnsPanel panel;
  std::vector<DefactorStage> provenance;

  std::string provenance_comment() const;
};

/// Regresses each company on its group's pseudo-index and keeps the residuals.
ResidualPanel residualize(const ReturnsPanel& panel, const DefactorStage& stage);

/// Applies a second stage to an already residualized panel; provenance accumulates.
ResidualPanel residualize(const ResidualPanel& panel, const DefactorStage& stage);

}  // namespace fnet
