#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "fnet/embed.hpp"
#include "fnet/error.hpp"

using namespace fnet;

namespace {

DistanceMatrix from_points(const std::vector<std::pair<double, double>>& p) {
  DistanceMatrix d;
  d.w = Matrix(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    d.companies.push_back("c" + std::to_string(i));
    for (std::size_t j = 0; j < p.size(); ++j) d.w(i, j) = std::hypot(p[i].first - p[j].first, p[i].second - p[j].second);
  }
  return d;
}

std::vector<std::pair<double, double>> pairs_of(const Matrix& m) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m(i, 0), m(i, 1));
  return out;
}

Matrix matrix_of(const std::vector<std::pair<double, double>>& p) {
  Matrix m(p.size(), 2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    m(i, 0) = p[i].first;
    m(i, 1) = p[i].second;
  }
  return m;
}

double naive_stress(const Matrix& x, const Matrix& w) {
  long double s = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      long double d = std::hypot(x(i, 0) - x(j, 0), x(i, 1) - x(j, 1)) - w(i, j);
      s += d * d;
    }
  }
  return static_cast<double>(s);
}

DistanceMatrix random_dissimilarity(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  DistanceMatrix d;
  d.w = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d.companies.push_back("c" + std::to_string(i));
    for (std::size_t j = i + 1; j < n; ++j) d.w(i, j) = d.w(j, i) = u(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("two points land at their distance") {
  auto d = from_points({{0, 0}, {1, 0}});
  auto e = smacof(d, classical_mds_init(d));
  CHECK(std::hypot(e.points(0, 0) - e.points(1, 0), e.points(0, 1) - e.points(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("planar configurations are recovered") {
  std::vector<std::pair<double, double>> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  auto d = from_points(square);
  auto e = smacof(d, classical_mds_init(d));
  CHECK(e.stress < 1e-12);
  CHECK(procrustes_residual(matrix_of(square), e.points) < 1e-8);

  auto tri = from_points({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}});
  auto t = smacof(tri, classical_mds_init(tri));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      CHECK(std::hypot(t.points(i, 0) - t.points(j, 0), t.points(i, 1) - t.points(j, 1)) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("a perfect init is a fixed point") {
  std::vector<std::pair<double, double>> pts = {{0, 0}, {2, 0}, {0, 1}, {3, 3}, {-1, 2}};
  auto d = from_points(pts);
  Embedding init;
  init.companies = d.companies;
  init.points = matrix_of(pts);
  auto e = smacof(d, init);
  CHECK(e.stress < 1e-20);
  CHECK(procrustes_residual(matrix_of(pts), e.points) < 1e-12);
}

TEST_CASE("random init converges on a planar set") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(g(rng), g(rng));
  auto d = from_points(pts);
  Embedding init;
  init.companies = d.companies;
  init.points = Matrix(10, 2);
  for (double& v : init.points.data()) v = g(rng);
  auto e = smacof(d, init, {5000, 1e-15});
  CHECK(e.stress < 1e-6);
}

TEST_CASE("stress never increases and matches a recomputation") {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 10; ++inst) {
    auto d = random_dissimilarity(rng, 4 + inst * 2);
    auto e = smacof(d, classical_mds_init(d), {300, 1e-14});
    REQUIRE(e.stress_history.size() == e.iterations + 1);
    for (std::size_t k = 1; k < e.stress_history.size(); ++k) {
      CHECK(e.stress_history[k] <= e.stress_history[k - 1] * (1 + 1e-12) + 1e-15);
    }
    double ref = naive_stress(e.points, d.w);
    CHECK(std::abs(e.stress - ref) <= 1e-12 * std::max(1.0, ref));
    CHECK(stress(e.points, d.w) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("procrustes residual against the closed form") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::vector<std::pair<double, double>> a;
  for (int i = 0; i < 8; ++i) a.emplace_back(g(rng), g(rng));

  CHECK(procrustes_residual(matrix_of(a), matrix_of(a)) < 1e-12);

  // rotate, reflect, scale, shift
  std::vector<std::pair<double, double>> b;
  double c = std::cos(0.7), s = std::sin(0.7);
  for (auto [x, y] : a) b.emplace_back(3.0 * (c * x - s * y) + 5, -3.0 * (s * x + c * y) - 1);
  CHECK(procrustes_residual(matrix_of(a), matrix_of(b)) < 1e-12);

  auto p = b;
  p[3].first += 0.25;
  CHECK(procrustes_residual(matrix_of(a), matrix_of(p)) == doctest::Approx(oracle::procrustes_2d(a, p)).epsilon(1e-9));
  CHECK(procrustes_residual(matrix_of(a), matrix_of(p)) > 0.0);
}

TEST_CASE("embedding CSV round trip") {
  auto d = from_points({{0, 0}, {1, 0}, {0, 1}});
  auto e = smacof(d, classical_mds_init(d));
  std::vector<CompanyMeta> meta = {{"c0", "S1", "C1"}, {"c1", "S1", "C2"}, {"c2", "S2", "C2"}};
  auto text = format_embedding_csv(e, meta);
  CHECK(text.rfind("id,x,y,label_sector,label_country\n", 0) == 0);
  auto back = parse_embedding_csv(text, "embedding.csv");
  CHECK(back.companies == e.companies);
  CHECK(back.points == e.points);
  std::vector<std::string> labels = {"S1", "S1", "S2"};
  CHECK(embedding_svg(e, labels, "t").find("<svg") != std::string::npos);
}
