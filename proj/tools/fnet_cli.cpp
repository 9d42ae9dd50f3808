#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fnet_c.h"

namespace {

// Wraps one C API call; on failure prints the message and remembers the status.
struct Call {
  int status = FNET_OK;

  bool operator()(int rc) {
    if (rc != FNET_OK) {
      std::fprintf(stderr, "error: %s\n", fnet_last_error());
      status = rc;
    }
    return rc == FNET_OK;
  }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  operator T*() const { return p; }
};

using Meta = Handle<fnet_meta, fnet_meta_free>;
using Panel = Handle<fnet_panel, fnet_panel_free>;
using Distance = Handle<fnet_distance, fnet_distance_free>;
using Tree = Handle<fnet_tree, fnet_tree_free>;
using Report = Handle<fnet_report, fnet_report_free>;
using Embedding = Handle<fnet_embedding, fnet_embedding_free>;
using Series = Handle<fnet_series, fnet_series_free>;
using RunResult = Handle<fnet_run_result, fnet_run_result_free>;

const std::map<std::string, fnet_grouping> kGroupings = {
    {"sector", FNET_GROUP_SECTOR}, {"country", FNET_GROUP_COUNTRY}, {"all", FNET_GROUP_ALL}};
const std::map<std::string, fnet_index_method> kIndex = {{"mean", FNET_INDEX_MEAN}, {"median", FNET_INDEX_MEDIAN}};
const std::map<std::string, fnet_fit_method> kFit = {{"ols", FNET_FIT_OLS}, {"theil-sen", FNET_FIT_THEIL_SEN},
                                                     {"theil_sen", FNET_FIT_THEIL_SEN}};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CLI::ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "default", an inline JSON object, or a path to a JSON file.
std::string synth_text(const std::string& arg) {
  if (arg == "default" || (!arg.empty() && arg.front() == '{')) return arg == "default" ? "\"default\"" : arg;
  return slurp(arg);
}

std::string join(const std::string& dir, const char* name) { return dir.empty() ? name : dir + "/" + name; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-driven clustering of financial correlation networks"};
  app.set_version_flag("--version", fnet_version());
  app.require_subcommand(1);
  Call call;

  // ingest
  std::string prices, metadata, fx, base = "EUR", out, meta_out;
  auto* ingest = app.add_subcommand("ingest", "Align prices, convert currency and write log returns");
  ingest->add_option("--prices", prices, "Price table: date,<company ids>")->required();
  ingest->add_option("--metadata", metadata, "id,sector,country,currency file")->required();
  ingest->add_option("--fx", fx, "date,currency,rate file");
  ingest->add_option("--base", base, "Base currency")->capture_default_str();
  ingest->add_option("-o,--out", out, "Returns CSV")->required();
  ingest->add_option("--meta-out", meta_out, "Metadata for the retained companies");
  ingest->callback([&] {
    Panel panel;
    if (!call(fnet_panel_ingest(prices.c_str(), metadata.c_str(), fx.empty() ? nullptr : fx.c_str(), base.c_str(),
                                panel.out())))
      return;
    size_t dropped = 0;
    fnet_panel_dropped_count(panel, &dropped);
    for (size_t k = 0; k < dropped; ++k) {
      const char* id = nullptr;
      fnet_panel_dropped(panel, k, &id);
      std::fprintf(stderr, "warning: dropped %s (incomplete price history)\n", id);
    }
    if (!call(fnet_panel_write_returns(panel, out.c_str()))) return;
    if (!meta_out.empty()) call(fnet_panel_write_metadata(panel, meta_out.c_str()));
  });

  // defactor
  std::string returns, grouping = "sector", index = "median", fit = "theil-sen";
  bool loo = false;
  auto* defactor = app.add_subcommand("defactor", "Regress each series on a group pseudo-index and keep residuals");
  defactor->add_option("--returns", returns, "Returns CSV")->required();
  defactor->add_option("--metadata", metadata, "Metadata CSV")->required();
  defactor->add_option("--grouping", grouping, "sector, country or all")
      ->check(CLI::IsMember({"sector", "country", "all"}))
      ->capture_default_str();
  defactor->add_option("--index", index, "mean or median")->check(CLI::IsMember({"mean", "median"}))->capture_default_str();
  defactor->add_option("--fit", fit, "ols or theil-sen")
      ->check(CLI::IsMember({"ols", "theil-sen", "theil_sen"}))
      ->capture_default_str();
  defactor->add_flag("--leave-one-out", loo, "Exclude each company from its own index");
  defactor->add_option("-o,--out", out, "Residual returns CSV")->required();
  defactor->callback([&] {
    Meta meta;
    Panel panel, resid;
    if (!call(fnet_meta_read(metadata.c_str(), meta.out()))) return;
    if (!call(fnet_panel_read_returns(returns.c_str(), meta, panel.out()))) return;
    if (!call(fnet_panel_residualize(panel, kGroupings.at(grouping), kIndex.at(index), kFit.at(fit), loo ? 1 : 0,
                                     resid.out())))
      return;
    call(fnet_panel_write_returns(resid, out.c_str()));
  });

  // cluster
  std::string out_dir = ".", distance_in;
  auto* cluster = app.add_subcommand("cluster", "Correlation distance and average-linkage dendrogram");
  auto* cluster_returns = cluster->add_option("--returns", returns, "Returns CSV");
  cluster->add_option("--metadata", metadata, "Metadata CSV (with --returns)");
  cluster->add_option("--distance", distance_in, "Square distance CSV instead of returns")->excludes(cluster_returns);
  cluster->add_option("-d,--out-dir", out_dir, "Directory for distance.csv, merges.csv, tree.nwk")->capture_default_str();
  cluster->callback([&] {
    Distance dist;
    Tree tree;
    if (distance_in.empty()) {
      if (returns.empty() || metadata.empty()) throw CLI::ValidationError("cluster needs --returns and --metadata, or --distance");
      Meta meta;
      Panel panel;
      if (!call(fnet_meta_read(metadata.c_str(), meta.out()))) return;
      if (!call(fnet_panel_read_returns(returns.c_str(), meta, panel.out()))) return;
      if (!call(fnet_distance_from_panel(panel, dist.out()))) return;
      if (!call(fnet_distance_write(dist, join(out_dir, "distance.csv").c_str()))) return;
    } else if (!call(fnet_distance_read(distance_in.c_str(), dist.out()))) {
      return;
    }
    if (!call(fnet_tree_build(dist, tree.out()))) return;
    if (!call(fnet_tree_write_merges(tree, join(out_dir, "merges.csv").c_str()))) return;
    call(fnet_tree_write_newick(tree, join(out_dir, "tree.nwk").c_str()));
  });

  // purity
  std::string tree_path;
  size_t replicates = 999;
  uint64_t seed = 1;
  bool table = false;
  auto* purity = app.add_subcommand("purity", "Per-label purity with permutation p-values");
  purity->add_option("--tree", tree_path, "Newick dendrogram")->required();
  purity->add_option("--metadata", metadata, "Metadata CSV")->required();
  purity->add_option("--grouping", grouping, "sector, country or all")
      ->check(CLI::IsMember({"sector", "country", "all"}))
      ->capture_default_str();
  purity->add_option("-B,--replicates", replicates, "Permutation replicates")->capture_default_str();
  purity->add_option("--seed", seed, "RNG seed")->capture_default_str();
  purity->add_flag("--table", table, "Aligned text instead of CSV");
  purity->add_option("-o,--out", out, "Output file (stdout if omitted)");
  purity->callback([&] {
    Meta meta;
    Tree tree;
    Report report;
    if (!call(fnet_meta_read(metadata.c_str(), meta.out()))) return;
    if (!call(fnet_tree_read_newick(tree_path.c_str(), tree.out()))) return;
    if (!call(fnet_purity_report(tree, meta, kGroupings.at(grouping), replicates, seed, report.out()))) return;
    if (!out.empty()) {
      call(fnet_report_write(report, table ? 1 : 0, out.c_str()));
      return;
    }
    size_t needed = 0;
    if (!call(fnet_report_format(report, table ? 1 : 0, nullptr, 0, &needed))) return;
    std::string buf(needed, '\0');
    call(fnet_report_format(report, table ? 1 : 0, buf.data(), buf.size(), &needed));
    std::fputs(buf.c_str(), stdout);
  });

  // mds
  std::string svg_path, color_by = "sector";
  size_t max_iters = 500;
  double tol = 1e-9;
  auto* mds = app.add_subcommand("mds", "Two-dimensional SMACOF embedding of a distance matrix");
  mds->add_option("--distance", distance_in, "Square distance CSV")->required();
  mds->add_option("--metadata", metadata, "Metadata CSV")->required();
  mds->add_option("-o,--out", out, "Embedding CSV")->required();
  mds->add_option("--svg", svg_path, "Scatter plot SVG");
  mds->add_option("--color-by", color_by, "sector or country")->check(CLI::IsMember({"sector", "country"}))->capture_default_str();
  mds->add_option("--max-iters", max_iters, "SMACOF iteration cap")->capture_default_str();
  mds->add_option("--tol", tol, "Relative stress decrease to stop at")->capture_default_str();
  mds->callback([&] {
    Meta meta;
    Distance dist;
    Embedding emb;
    if (!call(fnet_meta_read(metadata.c_str(), meta.out()))) return;
    if (!call(fnet_distance_read(distance_in.c_str(), dist.out()))) return;
    if (!call(fnet_embed(dist, max_iters, tol, emb.out()))) return;
    if (!call(fnet_embedding_write_csv(emb, meta, out.c_str()))) return;
    double stress = 0;
    size_t iters = 0;
    fnet_embedding_info(emb, &stress, &iters);
    std::fprintf(stderr, "stress %.17g after %zu iterations\n", stress, iters);
    if (!svg_path.empty()) call(fnet_embedding_write_svg(emb, meta, kGroupings.at(color_by), svg_path.c_str()));
  });

  // dynamic
  std::string dyn_grouping = "country";
  double lambda = 0.01;
  long long burn_in = -1;
  auto* dynamic = app.add_subcommand("dynamic", "Exponentially weighted purity series");
  dynamic->add_option("--returns", returns, "Returns CSV")->required();
  dynamic->add_option("--metadata", metadata, "Metadata CSV")->required();
  dynamic->add_option("--grouping", dyn_grouping, "sector, country or all")
      ->check(CLI::IsMember({"sector", "country", "all"}))
      ->capture_default_str();
  dynamic->add_option("--lambda", lambda, "Forgetting factor in (0, 1]")->capture_default_str();
  dynamic->add_option("--burn-in", burn_in, "Days before the first emitted matrix (default ceil(3/lambda))");
  dynamic->add_option("-o,--out", out, "date,label,purity CSV")->required();
  dynamic->add_option("--svg", svg_path, "Line chart SVG");
  dynamic->callback([&] {
    Meta meta;
    Panel panel;
    Series series;
    if (!call(fnet_meta_read(metadata.c_str(), meta.out()))) return;
    if (!call(fnet_panel_read_returns(returns.c_str(), meta, panel.out()))) return;
    if (!call(fnet_dynamic_purity(panel, kGroupings.at(dyn_grouping), lambda, burn_in, series.out()))) return;
    size_t points = 0;
    fnet_series_size(series, &points);
    if (points == 0) std::fprintf(stderr, "warning: burn-in covers the whole panel, series is empty\n");
    if (!call(fnet_series_write_csv(series, out.c_str()))) return;
    if (!svg_path.empty()) call(fnet_series_write_svg(series, ("Purity by " + dyn_grouping).c_str(), svg_path.c_str()));
  });

  // synth
  std::string spec = "default";
  auto* synth = app.add_subcommand("synth", "Write a synthetic factor-model price panel");
  synth->add_option("--spec", spec, "\"default\", inline JSON or a JSON file")->capture_default_str();
  synth->add_option("--prices", prices, "Prices CSV to write")->required();
  synth->add_option("--metadata", metadata, "Metadata CSV to write")->required();
  synth->callback([&] { call(fnet_synth_write(synth_text(spec).c_str(), prices.c_str(), metadata.c_str())); });

  // run
  std::string config;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Full pipeline from a JSON config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("-s,--set", overrides, "Override a config key, e.g. dynamic.lambda=0.02");
  run->callback([&] {
    std::vector<const char*> ptrs;
    for (const auto& o : overrides) ptrs.push_back(o.c_str());
    RunResult result;
    if (!call(fnet_run(config.c_str(), ptrs.data(), ptrs.size(), result.out()))) return;
    size_t n = 0;
    fnet_run_warnings(result, &n);
    for (size_t k = 0; k < n; ++k) {
      const char* msg = nullptr;
      fnet_run_warning(result, k, &msg);
      std::fprintf(stderr, "warning: %s\n", msg);
    }
    fnet_run_files(result, &n);
    for (size_t k = 0; k < n; ++k) {
      const char* path = nullptr;
      fnet_run_file(result, k, &path);
      std::printf("%s\n", path);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : FNET_ERR_VALIDATION;
  }
  return call.status;
}
