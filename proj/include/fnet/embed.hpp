#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fnet/correlate.hpp"
#include "fnet/matrix.hpp"
#include "fnet/panel.hpp"

namespace fnet {

struct Embedding {
  std::vector<std::string> companies;
  Matrix points;  // n x 2
  double stress = 0.0;
  std::size_t iterations = 0;
  /// Stress before the first iteration followed by the stress after each iteration.
  std::vector<double> stress_history;
};

/// Raw stress: sum over i < j of (|x_i - x_j| - w_ij)^2.
double stress(const Matrix& points, const Matrix& w);

/// Torgerson scaling: double-centred squared distances, top two eigenpairs, negative
/// eigenvalues clipped to zero.
Embedding classical_mds_init(const DistanceMatrix& dist);

struct SmacofOptions {
  std::size_t max_iters = 500;
  double tol = 1e-9;
};

/// Stress majorization (Guttman transform, unit weights) from `init`. Stops when the relative
/// stress decrease drops below tol or after max_iters.
Embedding smacof(const DistanceMatrix& dist, const Embedding& init, SmacofOptions options = {});

/// RMS point discrepancy after the best similarity transform (translation, rotation,
/// reflection, uniform scale) of b onto a.
double procrustes_residual(const Matrix& a, const Matrix& b);

/// `id,x,y,label_sector,label_country`.
std::string format_embedding_csv(const Embedding& e, std::span<const CompanyMeta> meta);
Embedding parse_embedding_csv(std::string_view content, const std::string& source);

/// Static scatter plot, one colour per label.
std::string embedding_svg(const Embedding& e, std::span<const std::string> labels, const std::string& title);

}  // namespace fnet
