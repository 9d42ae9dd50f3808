#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "fnet_c.h"

namespace fs = std::filesystem;

namespace {

fs::path work(const std::string& name) {
  fs::path p = fs::path(TEST_WORK_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kSpec = R"({"sectors":[{"label":"S1","count":5},{"label":"S2","count":5}],
  "countries":[{"label":"C1","count":5},{"label":"C2","count":5}],"days":250,"seed":4})";

}  // namespace

TEST_CASE("null arguments are validation errors with a message") {
  fnet_panel* p = nullptr;
  CHECK(fnet_panel_generate(nullptr, &p) == FNET_ERR_VALIDATION);
  CHECK(p == nullptr);
  CHECK(std::string(fnet_last_error()).size() > 0);
  CHECK(fnet_panel_generate("default", nullptr) == FNET_ERR_VALIDATION);
  size_t n = 0;
  CHECK(fnet_tree_leaf_count(nullptr, &n) == FNET_ERR_VALIDATION);
  CHECK(fnet_meta_read("/nonexistent/meta.csv", nullptr) == FNET_ERR_VALIDATION);
  fnet_meta* m = nullptr;
  CHECK(fnet_meta_read("/nonexistent/meta.csv", &m) == FNET_ERR_VALIDATION);
  CHECK(std::string(fnet_last_error()).find("meta.csv") != std::string::npos);
  fnet_panel_free(nullptr);
  fnet_tree_free(nullptr);
  CHECK(std::string(fnet_version()).size() > 0);
}

TEST_CASE("copy_string truncates and reports the needed size") {
  char buf[4];
  size_t needed = 0;
  CHECK(fnet_copy_string("hello", buf, sizeof buf, &needed) == FNET_OK);
  CHECK(needed == 6);
  CHECK(std::string(buf) == "hel");
  CHECK(fnet_copy_string("hello", nullptr, 0, &needed) == FNET_OK);
  CHECK(needed == 6);
}

TEST_CASE("full flow through the handles") {
  auto dir = work("flow");
  std::string prices = (dir / "prices.csv").string(), meta_path = (dir / "meta.csv").string();
  REQUIRE(fnet_synth_write(kSpec, prices.c_str(), meta_path.c_str()) == FNET_OK);

  fnet_panel* panel = nullptr;
  REQUIRE(fnet_panel_ingest(prices.c_str(), meta_path.c_str(), nullptr, "EUR", &panel) == FNET_OK);
  size_t companies = 0, days = 0;
  fnet_panel_size(panel, &companies, &days);
  CHECK(companies == 10);
  CHECK(days == 250);
  std::vector<double> r(companies * days);
  CHECK(fnet_panel_returns(panel, r.data(), r.size()) == FNET_OK);
  CHECK(fnet_panel_returns(panel, r.data(), r.size() - 1) == FNET_ERR_VALIDATION);
  const char* id = nullptr;
  CHECK(fnet_panel_company(panel, companies, &id) == FNET_ERR_VALIDATION);

  // Ingested prices reproduce the generated returns.
  fnet_panel* gen = nullptr;
  REQUIRE(fnet_panel_generate(kSpec, &gen) == FNET_OK);
  std::vector<double> g(companies * days);
  fnet_panel_returns(gen, g.data(), g.size());
  for (size_t k = 0; k < g.size(); ++k) CHECK(r[k] == doctest::Approx(g[k]).epsilon(1e-9));

  fnet_panel* resid = nullptr;
  REQUIRE(fnet_panel_residualize(panel, FNET_GROUP_SECTOR, FNET_INDEX_MEDIAN, FNET_FIT_THEIL_SEN, 0, &resid) == FNET_OK);

  fnet_distance* dist = nullptr;
  REQUIRE(fnet_distance_from_panel(resid, &dist) == FNET_OK);
  double w = -1;
  fnet_distance_get(dist, 0, 0, &w);
  CHECK(w == 0.0);
  fnet_distance_get(dist, 0, 1, &w);
  CHECK(w >= 0.0);
  CHECK(w <= 2.0);

  fnet_tree* tree = nullptr;
  REQUIRE(fnet_tree_build(dist, &tree) == FNET_OK);
  size_t leaves = 0;
  fnet_tree_leaf_count(tree, &leaves);
  CHECK(leaves == 10);
  size_t needed = 0;
  fnet_tree_newick(tree, nullptr, 0, &needed);
  std::string newick(needed, '\0');
  fnet_tree_newick(tree, newick.data(), needed, &needed);
  CHECK(newick.find(';') != std::string::npos);
  std::string nwk = (dir / "tree.nwk").string();
  CHECK(fnet_tree_write_newick(tree, nwk.c_str()) == FNET_OK);
  fnet_tree* back = nullptr;
  CHECK(fnet_tree_read_newick(nwk.c_str(), &back) == FNET_OK);

  fnet_meta* meta = nullptr;
  REQUIRE(fnet_panel_meta(panel, &meta) == FNET_OK);
  fnet_report* report = nullptr;
  REQUIRE(fnet_purity_report(tree, meta, FNET_GROUP_COUNTRY, 99, 1, &report) == FNET_OK);
  size_t rows = 0;
  fnet_report_rows(report, &rows);
  CHECK(rows == 2);
  const char* label = nullptr;
  size_t members = 0;
  double purity = 0, p = 0;
  fnet_report_row(report, 0, &label, &members, &purity, &p);
  CHECK(std::string(label) == "C1");
  CHECK(members == 5);
  CHECK(p >= 0.01);
  CHECK(p <= 1.0);

  fnet_embedding* emb = nullptr;
  REQUIRE(fnet_embed(dist, 300, 1e-9, &emb) == FNET_OK);
  double stress = -1;
  size_t iters = 0;
  fnet_embedding_info(emb, &stress, &iters);
  CHECK(stress >= 0.0);
  CHECK(iters >= 1);

  fnet_series* series = nullptr;
  REQUIRE(fnet_dynamic_purity(panel, FNET_GROUP_COUNTRY, 0.05, -1, &series) == FNET_OK);
  size_t points = 0;
  fnet_series_size(series, &points);
  CHECK(points == (250 - 60) * 2);

  fnet_series_free(series);
  fnet_embedding_free(emb);
  fnet_report_free(report);
  fnet_meta_free(meta);
  fnet_tree_free(back);
  fnet_tree_free(tree);
  fnet_distance_free(dist);
  fnet_panel_free(resid);
  fnet_panel_free(gen);
  fnet_panel_free(panel);
}

TEST_CASE("numeric degeneracy maps to the runtime status") {
  auto dir = work("flat");
  std::string prices = (dir / "prices.csv").string(), meta = (dir / "meta.csv").string();
  {
    std::FILE* f = std::fopen(prices.c_str(), "w");
    std::fputs("date,A,B\n2020-01-01,1,1\n2020-01-02,1,2\n2020-01-03,1,3\n", f);
    std::fclose(f);
    f = std::fopen(meta.c_str(), "w");
    std::fputs("id,sector,country,currency\nA,S,C,EUR\nB,S,C,EUR\n", f);
    std::fclose(f);
  }
  fnet_panel* panel = nullptr;
  REQUIRE(fnet_panel_ingest(prices.c_str(), meta.c_str(), nullptr, "EUR", &panel) == FNET_OK);
  fnet_distance* dist = nullptr;
  CHECK(fnet_distance_from_panel(panel, &dist) == FNET_ERR_RUNTIME);
  CHECK(std::string(fnet_last_error()).find("A") != std::string::npos);
  fnet_panel_free(panel);
}

TEST_CASE("run_json reports files and warnings") {
  auto dir = work("run");
  std::string cfg = std::string(R"({"synth":)") + kSpec + R"(,"replicates":19,"output":{"dir":"out","svg":false}})";
  const char* overrides[] = {"dynamic.enabled=true", "dynamic.burn_in=1000"};
  fnet_run_result* res = nullptr;
  REQUIRE(fnet_run_json(cfg.c_str(), dir.string().c_str(), overrides, 2, &res) == FNET_OK);
  size_t files = 0, warnings = 0;
  fnet_run_files(res, &files);
  fnet_run_warnings(res, &warnings);
  CHECK(files >= 1);
  CHECK(warnings >= 1);
  const char* path = nullptr;
  fnet_run_file(res, 0, &path);
  CHECK(fs::exists(path));
  fnet_run_result_free(res);

  const char* bad[] = {"replicates=0"};
  CHECK(fnet_run_json(cfg.c_str(), nullptr, bad, 1, &res) == FNET_ERR_VALIDATION);
}
