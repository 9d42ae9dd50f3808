#include "fnet/embed.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <unordered_map>

#include "fnet/error.hpp"
#include "fnet/svg.hpp"
#include "fnet/text.hpp"

namespace fnet {

double stress(const Matrix& points, const Matrix& w) {
  const std::size_t n = points.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = points(i, 0) - points(j, 0);
      double dy = points(i, 1) - points(j, 1);
      double diff = std::sqrt(dx * dx + dy * dy) - w(i, j);
      s += diff * diff;
    }
  }
  return s;
}

Embedding classical_mds_init(const DistanceMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 2) throw ValidationError("classical_mds_init: need at least 2 points");
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd b(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = 0; j < nn; ++j) {
      double d = dist.w(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      b(i, j) = -0.5 * d * d;
    }
  }
  Eigen::VectorXd row_mean = b.rowwise().mean();
  Eigen::VectorXd col_mean = b.colwise().mean().transpose();
  double grand = b.mean();
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = 0; j < nn; ++j) b(i, j) += grand - row_mean(i) - col_mean(j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  if (solver.info() != Eigen::Success) throw NumericError("classical_mds_init: eigen decomposition failed");
  // Eigenvalues come back ascending.
  Embedding out;
  out.companies = dist.companies;
  out.points = Matrix(n, 2, 0.0);
  for (int k = 0; k < 2 && k < nn; ++k) {
    Eigen::Index col = nn - 1 - k;
    double scale = std::sqrt(std::max(0.0, solver.eigenvalues()(col)));
    for (Eigen::Index i = 0; i < nn; ++i) {
      out.points(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = solver.eigenvectors()(i, col) * scale;
    }
  }
  out.stress = stress(out.points, dist.w);
  out.stress_history = {out.stress};
  return out;
}

Embedding smacof(const DistanceMatrix& dist, const Embedding& init, SmacofOptions options) {
  const std::size_t n = dist.size();
  if (init.points.rows() != n || init.points.cols() != 2) throw ValidationError("smacof: init does not match matrix");
  if (options.max_iters < 1) throw ValidationError("smacof: max_iters must be at least 1");
  if (!(options.tol > 0.0)) throw ValidationError("smacof: tol must be positive");

  Embedding out;
  out.companies = dist.companies;
  out.points = init.points;
  double current = stress(out.points, dist.w);
  out.stress_history = {current};

  Matrix next(n, 2);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    // Guttman transform X <- (1/n) B(X) X. Coincident points contribute b_ij = 0.
    for (std::size_t i = 0; i < n; ++i) {
      double diag = 0.0, sx = 0.0, sy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double dx = out.points(i, 0) - out.points(j, 0);
        double dy = out.points(i, 1) - out.points(j, 1);
        double d = std::sqrt(dx * dx + dy * dy);
        if (d == 0.0) continue;
        double bij = -dist.w(i, j) / d;
        diag -= bij;
        sx += bij * out.points(j, 0);
        sy += bij * out.points(j, 1);
      }
      next(i, 0) = (diag * out.points(i, 0) + sx) / static_cast<double>(n);
      next(i, 1) = (diag * out.points(i, 1) + sy) / static_cast<double>(n);
    }
    double updated = stress(next, dist.w);
    // Majorization never increases stress; allow only rounding noise.
    assert(updated <= current * (1.0 + 1e-12) + 1e-15);
    out.points = next;
    out.stress_history.push_back(updated);
    out.iterations = iter + 1;
    double decrease = current - updated;
    current = updated;
    if (current == 0.0 || decrease < options.tol * (current + decrease)) break;
  }
  out.stress = current;
  return out;
}

double procrustes_residual(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  if (b.rows() != n || a.cols() != 2 || b.cols() != 2) throw ValidationError("procrustes_residual: shape mismatch");
  if (n == 0) return 0.0;
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x(nn, 2), y(nn, 2);
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index k = 0; k < 2; ++k) {
      x(i, k) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
      y(i, k) = b(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
    }
  }
  x.rowwise() -= x.colwise().mean();
  y.rowwise() -= y.colwise().mean();
  double yy = y.squaredNorm();
  double xx = x.squaredNorm();
  if (yy == 0.0) return std::sqrt(xx / static_cast<double>(n));
  // Best orthogonal R and scale s minimising |x - s y R|^2 come from the SVD of y^T x.
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(y.transpose() * x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d r = svd.matrixU() * svd.matrixV().transpose();
  double s = svd.singularValues().sum() / yy;
  // Evaluated directly; xx - trace^2 / yy cancels badly for near-perfect fits.
  return std::sqrt((x - s * y * r).squaredNorm() / static_cast<double>(n));
}

std::string format_embedding_csv(const Embedding& e, std::span<const CompanyMeta> meta) {
  std::unordered_map<std::string, const CompanyMeta*> by_id;
  for (const auto& m : meta) by_id.emplace(m.id, &m);
  std::string out = "id,x,y,label_sector,label_country\n";
  for (std::size_t i = 0; i < e.companies.size(); ++i) {
    auto it = by_id.find(e.companies[i]);
    std::string sector = it == by_id.end() ? "" : it->second->sector;
    std::string country = it == by_id.end() ? "" : it->second->country;
    out += e.companies[i] + "," + text::format_double(e.points(i, 0)) + "," + text::format_double(e.points(i, 1)) +
           "," + sector + "," + country + "\n";
  }
  return out;
}

Embedding parse_embedding_csv(std::string_view content, const std::string& source) {
  auto lines = text::split_lines(content);
  if (lines.empty() ||
      text::split_csv(lines.front().text) != std::vector<std::string>{"id", "x", "y", "label_sector", "label_country"}) {
    throw ParseError(source, lines.empty() ? 1 : lines.front().number, "header must be 'id,x,y,label_sector,label_country'");
  }
  Embedding e;
  e.points = Matrix(lines.size() - 1, 2);
  for (std::size_t k = 1; k < lines.size(); ++k) {
    auto cells = text::split_csv(lines[k].text);
    if (cells.size() != 5) throw ParseError(source, lines[k].number, "expected 5 fields");
    e.companies.push_back(cells[0]);
    e.points(k - 1, 0) = text::parse_double(cells[1], source, lines[k].number);
    e.points(k - 1, 1) = text::parse_double(cells[2], source, lines[k].number);
  }
  return e;
}

std::string embedding_svg(const Embedding& e, std::span<const std::string> labels, const std::string& title) {
  svg::Canvas canvas(640, 560, title);
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (std::size_t i = 0; i < e.points.rows(); ++i) {
    xmin = i == 0 ? e.points(i, 0) : std::min(xmin, e.points(i, 0));
    xmax = i == 0 ? e.points(i, 0) : std::max(xmax, e.points(i, 0));
    ymin = i == 0 ? e.points(i, 1) : std::min(ymin, e.points(i, 1));
    ymax = i == 0 ? e.points(i, 1) : std::max(ymax, e.points(i, 1));
  }
  canvas.set_bounds(xmin, xmax, ymin, ymax);
  std::map<std::string, std::size_t> palette;
  for (const auto& l : labels) palette.emplace(l, palette.size());
  for (std::size_t i = 0; i < e.points.rows(); ++i) {
    const std::string& label = i < labels.size() ? labels[i] : std::string();
    canvas.point(e.points(i, 0), e.points(i, 1), svg::color(palette[label]), e.companies[i] + " (" + label + ")");
  }
  for (const auto& [label, idx] : palette) canvas.legend(label, svg::color(idx));
  return canvas.finish();
}

}  // namespace fnet
