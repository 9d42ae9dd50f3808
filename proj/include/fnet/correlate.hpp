#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fnet/matrix.hpp"
#include "fnet/panel.hpp"

namespace fnet {

struct CorrelationMatrix {
  std::vector<std::string> companies;
  Matrix rho;
};

/// Symmetric correlation distances sqrt(2(1 - rho)), zero diagonal, entries in [0, 2].
struct DistanceMatrix {
  std::vector<std::string> companies;
  Matrix w;

  std::size_t size() const noexcept { return companies.size(); }
};

/// Sample Pearson correlation of every pair of return series over the whole panel.
CorrelationMatrix pearson(const ReturnsPanel& panel);

DistanceMatrix to_distance(const CorrelationMatrix& corr);

/// Running exponentially forgetting variances and pairwise correlations.
///
/// rho keeps its diagonal at 1. Off-diagonal entries follow the recursion as written and may leave
/// [-1, 1]; clamping happens only when a distance matrix is emitted.
struct EWState {
  std::size_t t = 0;
  double lambda = 0.0;
  std::vector<double> var;
  Matrix rho;

  /// Zero variances and zero correlations for n series.
  static EWState initial(std::size_t n, double lambda);
};

/// One update: all variances first, then each correlation using the new sigmas. Pairs with a zero
/// sigma keep their previous correlation.
void ew_step(EWState& state, std::span<const double> returns_t);

/// Distance matrix from the running correlations, each clamped to [-1, 1].
Matrix ew_distance(const EWState& state);

/// Steps before the first emitted matrix when none is given: ceil(3 / lambda).
std::size_t default_burn_in(double lambda);

struct DatedDistance {
  std::string date;
  DistanceMatrix dist;
};

/// Streams (day index, date, distance) for each day t >= burn_in. Nothing is emitted when
/// burn_in >= days.
void ew_distance_for_each(const ReturnsPanel& panel, double lambda, std::size_t burn_in,
                          const std::function<void(std::size_t, const std::string&, const Matrix&)>& sink);

/// Materialized variant of ew_distance_for_each; memory grows with days x n^2.
std::vector<DatedDistance> ew_distance_series(const ReturnsPanel& panel, double lambda, std::size_t burn_in);

/// Square CSV: header `id,<ids>`, then one row per company.
std::string format_square(const std::vector<std::string>& ids, const Matrix& m);
DistanceMatrix parse_distance(std::string_view content, const std::string& source);
DistanceMatrix read_distance(const std::filesystem::path& path);
void write_distance(const std::filesystem::path& path, const DistanceMatrix& d);

/// Long format rows `date,i,j,w` for i < j.
std::string format_long_rows(const std::string& date, const std::vector<std::string>& ids, const Matrix& w);

}  // namespace fnet
