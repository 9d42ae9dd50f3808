#include "fnet_c.h"

#include <cstring>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "fnet/correlate.hpp"
#include "fnet/defactor.hpp"
#include "fnet/embed.hpp"
#include "fnet/error.hpp"
#include "fnet/evaluate.hpp"
#include "fnet/hcluster.hpp"
#include "fnet/panel.hpp"
#include "fnet/pipeline.hpp"
#include "fnet/synth.hpp"
#include "fnet/text.hpp"

struct fnet_meta {
  std::vector<fnet::CompanyMeta> rows;
};

struct fnet_panel {
  fnet::ReturnsPanel panel;
  std::vector<std::string> dropped;
  std::vector<fnet::DefactorStage> provenance;
};

struct fnet_distance {
  fnet::DistanceMatrix dist;
};

struct fnet_tree {
  fnet::Dendrogram tree;
};

struct fnet_report {
  fnet::PurityReport report;
};

struct fnet_embedding {
  fnet::Embedding embedding;
};

struct fnet_series {
  std::vector<fnet::PurityPoint> points;
};

struct fnet_run_result {
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Translates exceptions into status codes at the C boundary.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FNET_OK;
  } catch (const fnet::ValidationError& e) {
    return fail(FNET_ERR_VALIDATION, e.what());
  } catch (const fnet::NumericError& e) {
    return fail(FNET_ERR_RUNTIME, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FNET_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(FNET_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(FNET_ERR_RUNTIME, "unknown error");
  }
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (p == nullptr) throw fnet::ValidationError(std::string("null ") + what);
  return *p;
}

void need_out(const void* p) {
  if (p == nullptr) throw fnet::ValidationError("null output pointer");
}

std::string need_str(const char* s, const char* what) {
  if (s == nullptr) throw fnet::ValidationError(std::string("null ") + what);
  return s;
}

fnet::Grouping grouping_of(fnet_grouping g) {
  switch (g) {
    case FNET_GROUP_SECTOR: return fnet::Grouping::sector;
    case FNET_GROUP_COUNTRY: return fnet::Grouping::country;
    case FNET_GROUP_ALL: return fnet::Grouping::all;
  }
  throw fnet::ValidationError("unknown grouping");
}

void check_index(std::size_t k, std::size_t size, const char* what) {
  if (k >= size) throw fnet::ValidationError(std::string(what) + " index out of range");
}

std::vector<fnet::MetaRecord> records_of(const fnet_meta& meta) {
  std::vector<fnet::MetaRecord> out;
  for (const auto& m : meta.rows) out.push_back({m, "EUR"});
  return out;
}

void copy_string(const std::string& src, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = src.size() + 1;
  if (buf && cap > 0) {
    std::size_t len = std::min(src.size(), cap - 1);
    std::memcpy(buf, src.data(), len);
    buf[len] = '\0';
  }
}

fnet_run_result* to_result(const fnet::ArtifactSet& a) {
  auto r = std::make_unique<fnet_run_result>();
  for (const auto& f : a.files) r->files.push_back(f.string());
  r->warnings = a.warnings;
  return r.release();
}

}  // namespace

extern "C" {

const char* fnet_version(void) { return "1.0.0"; }

const char* fnet_last_error(void) { return g_last_error.c_str(); }

int fnet_copy_string(const char* src, char* buf, size_t cap, size_t* needed) {
  return guarded([&] { copy_string(need_str(src, "string"), buf, cap, needed); });
}

int fnet_meta_read(const char* path, fnet_meta** out) {
  return guarded([&] {
    need_out(out);
    auto m = std::make_unique<fnet_meta>();
    for (const auto& r : fnet::read_metadata(need_str(path, "path"))) m->rows.push_back(r.meta);
    *out = m.release();
  });
}

int fnet_meta_size(const fnet_meta* meta, size_t* count) {
  return guarded([&] {
    need_out(count);
    *count = need(meta, "meta").rows.size();
  });
}

int fnet_meta_row(const fnet_meta* meta, size_t i, const char** id, const char** sector, const char** country) {
  return guarded([&] {
    const auto& m = need(meta, "meta");
    check_index(i, m.rows.size(), "meta");
    if (id) *id = m.rows[i].id.c_str();
    if (sector) *sector = m.rows[i].sector.c_str();
    if (country) *country = m.rows[i].country.c_str();
  });
}

void fnet_meta_free(fnet_meta* meta) { delete meta; }

int fnet_panel_ingest(const char* prices_path, const char* meta_path, const char* fx_path, const char* base_currency,
                      fnet_panel** out) {
  return guarded([&] {
    need_out(out);
    auto loaded = fnet::load_prices(need_str(prices_path, "prices path"), need_str(meta_path, "metadata path"));
    fnet::PricePanel prices = std::move(loaded.panel);
    if (fx_path != nullptr) {
      prices = fnet::convert_currency(prices, fnet::read_fx(fx_path), base_currency ? base_currency : "EUR");
    }
    auto p = std::make_unique<fnet_panel>();
    p->panel = fnet::to_log_returns(prices);
    p->dropped = std::move(loaded.dropped);
    *out = p.release();
  });
}

int fnet_panel_read_returns(const char* returns_path, const fnet_meta* meta, fnet_panel** out) {
  return guarded([&] {
    need_out(out);
    auto p = std::make_unique<fnet_panel>();
    p->panel = fnet::read_returns(need_str(returns_path, "returns path"), records_of(need(meta, "meta")));
    *out = p.release();
  });
}

int fnet_panel_generate(const char* synth_json, fnet_panel** out) {
  return guarded([&] {
    need_out(out);
    auto spec = fnet::parse_synth_spec(need_str(synth_json, "synth spec"));
    auto p = std::make_unique<fnet_panel>();
    p->panel = fnet::generate(spec);
    *out = p.release();
  });
}

int fnet_panel_size(const fnet_panel* panel, size_t* companies, size_t* days) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    if (companies) *companies = p.panel.size();
    if (days) *days = p.panel.days();
  });
}

int fnet_panel_company(const fnet_panel* panel, size_t i, const char** id) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    need_out(id);
    check_index(i, p.panel.size(), "company");
    *id = p.panel.companies[i].c_str();
  });
}

int fnet_panel_date(const fnet_panel* panel, size_t t, const char** date) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    need_out(date);
    check_index(t, p.panel.days(), "date");
    *date = p.panel.dates[t].c_str();
  });
}

int fnet_panel_returns(const fnet_panel* panel, double* buf, size_t len) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    need_out(buf);
    auto data = p.panel.returns.data();
    if (len != data.size()) throw fnet::ValidationError("buffer length must equal companies * days");
    std::copy(data.begin(), data.end(), buf);
  });
}

int fnet_panel_dropped_count(const fnet_panel* panel, size_t* count) {
  return guarded([&] {
    need_out(count);
    *count = need(panel, "panel").dropped.size();
  });
}

int fnet_panel_dropped(const fnet_panel* panel, size_t k, const char** id) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    need_out(id);
    check_index(k, p.dropped.size(), "dropped");
    *id = p.dropped[k].c_str();
  });
}

int fnet_panel_meta(const fnet_panel* panel, fnet_meta** out) {
  return guarded([&] {
    need_out(out);
    auto m = std::make_unique<fnet_meta>();
    m->rows = need(panel, "panel").panel.labels;
    *out = m.release();
  });
}

int fnet_panel_residualize(const fnet_panel* panel, fnet_grouping grouping, fnet_index_method index,
                           fnet_fit_method fit, int leave_one_out, fnet_panel** out) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    need_out(out);
    fnet::DefactorStage stage;
    stage.grouping = grouping_of(grouping);
    stage.index_method = index == FNET_INDEX_MEAN ? fnet::IndexMethod::mean : fnet::IndexMethod::median;
    stage.fit_method = fit == FNET_FIT_OLS ? fnet::FitMethod::ols : fnet::FitMethod::theil_sen;
    stage.leave_one_out = leave_one_out != 0;
    auto res = fnet::residualize(fnet::ResidualPanel{p.panel, p.provenance}, stage);
    auto r = std::make_unique<fnet_panel>();
    r->panel = std::move(res.panel);
    r->provenance = std::move(res.provenance);
    r->dropped = p.dropped;
    *out = r.release();
  });
}

int fnet_panel_write_returns(const fnet_panel* panel, const char* path) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    std::string comment;
    if (!p.provenance.empty()) comment = fnet::ResidualPanel{{}, p.provenance}.provenance_comment();
    fnet::write_returns(need_str(path, "path"), p.panel, comment);
  });
}

int fnet_panel_write_metadata(const fnet_panel* panel, const char* path) {
  return guarded([&] {
    const auto& p = need(panel, "panel");
    fnet::text::write_file(need_str(path, "path"),
                           fnet::format_metadata(p.panel.labels, std::vector<std::string>(p.panel.size(), "EUR")));
  });
}

void fnet_panel_free(fnet_panel* panel) { delete panel; }

int fnet_synth_write(const char* synth_json, const char* prices_path, const char* meta_path) {
  return guarded([&] {
    auto files = fnet::synth_files(fnet::parse_synth_spec(need_str(synth_json, "synth spec")));
    fnet::text::write_file(need_str(prices_path, "prices path"), files.prices);
    fnet::text::write_file(need_str(meta_path, "metadata path"), files.metadata);
  });
}

int fnet_distance_from_panel(const fnet_panel* panel, fnet_distance** out) {
  return guarded([&] {
    need_out(out);
    auto d = std::make_unique<fnet_distance>();
    d->dist = fnet::to_distance(fnet::pearson(need(panel, "panel").panel));
    *out = d.release();
  });
}

int fnet_distance_read(const char* path, fnet_distance** out) {
  return guarded([&] {
    need_out(out);
    auto d = std::make_unique<fnet_distance>();
    d->dist = fnet::read_distance(need_str(path, "path"));
    *out = d.release();
  });
}

int fnet_distance_write(const fnet_distance* dist, const char* path) {
  return guarded([&] { fnet::write_distance(need_str(path, "path"), need(dist, "distance").dist); });
}

int fnet_distance_size(const fnet_distance* dist, size_t* n) {
  return guarded([&] {
    need_out(n);
    *n = need(dist, "distance").dist.size();
  });
}

int fnet_distance_get(const fnet_distance* dist, size_t i, size_t j, double* value) {
  return guarded([&] {
    const auto& d = need(dist, "distance").dist;
    need_out(value);
    check_index(i, d.size(), "row");
    check_index(j, d.size(), "column");
    *value = d.w(i, j);
  });
}

void fnet_distance_free(fnet_distance* dist) { delete dist; }

int fnet_tree_build(const fnet_distance* dist, fnet_tree** out) {
  return guarded([&] {
    need_out(out);
    auto t = std::make_unique<fnet_tree>();
    t->tree = fnet::average_link(need(dist, "distance").dist);
    *out = t.release();
  });
}

int fnet_tree_read_newick(const char* path, fnet_tree** out) {
  return guarded([&] {
    need_out(out);
    auto t = std::make_unique<fnet_tree>();
    t->tree = fnet::read_newick(need_str(path, "path"));
    *out = t.release();
  });
}

int fnet_tree_write_newick(const fnet_tree* tree, const char* path) {
  return guarded([&] {
    fnet::text::write_file(need_str(path, "path"), fnet::to_newick(need(tree, "tree").tree) + "\n");
  });
}

int fnet_tree_write_merges(const fnet_tree* tree, const char* path) {
  return guarded([&] {
    fnet::text::write_file(need_str(path, "path"), fnet::format_merge_table(need(tree, "tree").tree));
  });
}

int fnet_tree_newick(const fnet_tree* tree, char* buf, size_t cap, size_t* needed) {
  return guarded([&] { copy_string(fnet::to_newick(need(tree, "tree").tree), buf, cap, needed); });
}

int fnet_tree_leaf_count(const fnet_tree* tree, size_t* n) {
  return guarded([&] {
    need_out(n);
    *n = need(tree, "tree").tree.leaf_count();
  });
}

int fnet_tree_merge(const fnet_tree* tree, size_t k, size_t* left, size_t* right, double* height, size_t* size) {
  return guarded([&] {
    const auto& t = need(tree, "tree").tree;
    check_index(k, t.merges.size(), "merge");
    const auto& m = t.merges[k];
    if (left) *left = m.left;
    if (right) *right = m.right;
    if (height) *height = m.height;
    if (size) *size = m.size;
  });
}

void fnet_tree_free(fnet_tree* tree) { delete tree; }

int fnet_purity_report(const fnet_tree* tree, const fnet_meta* meta, fnet_grouping grouping, size_t replicates,
                       uint64_t seed, fnet_report** out) {
  return guarded([&] {
    need_out(out);
    auto r = std::make_unique<fnet_report>();
    r->report = fnet::purity_report(need(tree, "tree").tree, need(meta, "meta").rows, grouping_of(grouping), replicates,
                                    seed);
    *out = r.release();
  });
}

int fnet_report_rows(const fnet_report* report, size_t* rows) {
  return guarded([&] {
    need_out(rows);
    *rows = need(report, "report").report.rows.size();
  });
}

int fnet_report_row(const fnet_report* report, size_t k, const char** label, size_t* members, double* purity,
                    double* p_value) {
  return guarded([&] {
    const auto& rows = need(report, "report").report.rows;
    check_index(k, rows.size(), "row");
    if (label) *label = rows[k].label.c_str();
    if (members) *members = rows[k].members;
    if (purity) *purity = rows[k].purity;
    if (p_value) *p_value = rows[k].p_value;
  });
}

int fnet_report_format(const fnet_report* report, int table, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    const auto& r = need(report, "report").report;
    copy_string(table ? fnet::format_report_table(r) : fnet::format_report_csv(r), buf, cap, needed);
  });
}

int fnet_report_write(const fnet_report* report, int table, const char* path) {
  return guarded([&] {
    const auto& r = need(report, "report").report;
    fnet::text::write_file(need_str(path, "path"),
                           table ? fnet::format_report_table(r) : fnet::format_report_csv(r));
  });
}

void fnet_report_free(fnet_report* report) { delete report; }

int fnet_embed(const fnet_distance* dist, size_t max_iters, double tol, fnet_embedding** out) {
  return guarded([&] {
    need_out(out);
    const auto& d = need(dist, "distance").dist;
    auto e = std::make_unique<fnet_embedding>();
    e->embedding = fnet::smacof(d, fnet::classical_mds_init(d), {max_iters, tol});
    *out = e.release();
  });
}

int fnet_embedding_info(const fnet_embedding* e, double* stress, size_t* iterations) {
  return guarded([&] {
    const auto& emb = need(e, "embedding").embedding;
    if (stress) *stress = emb.stress;
    if (iterations) *iterations = emb.iterations;
  });
}

int fnet_embedding_point(const fnet_embedding* e, size_t i, double* x, double* y) {
  return guarded([&] {
    const auto& emb = need(e, "embedding").embedding;
    check_index(i, emb.points.rows(), "point");
    if (x) *x = emb.points(i, 0);
    if (y) *y = emb.points(i, 1);
  });
}

int fnet_embedding_write_csv(const fnet_embedding* e, const fnet_meta* meta, const char* path) {
  return guarded([&] {
    fnet::text::write_file(need_str(path, "path"),
                           fnet::format_embedding_csv(need(e, "embedding").embedding, need(meta, "meta").rows));
  });
}

int fnet_embedding_write_svg(const fnet_embedding* e, const fnet_meta* meta, fnet_grouping grouping, const char* path) {
  return guarded([&] {
    const auto& emb = need(e, "embedding").embedding;
    std::unordered_map<std::string, const fnet::CompanyMeta*> by_id;
    for (const auto& m : need(meta, "meta").rows) by_id.emplace(m.id, &m);
    auto g = grouping_of(grouping);
    std::vector<std::string> labels;
    for (const auto& id : emb.companies) {
      auto it = by_id.find(id);
      labels.push_back(it == by_id.end() ? std::string() : fnet::group_label(*it->second, g));
    }
    fnet::text::write_file(need_str(path, "path"),
                           fnet::embedding_svg(emb, labels, "MDS embedding coloured by " + fnet::to_string(g)));
  });
}

void fnet_embedding_free(fnet_embedding* e) { delete e; }

int fnet_dynamic_purity(const fnet_panel* panel, fnet_grouping grouping, double lambda, int64_t burn_in,
                        fnet_series** out) {
  return guarded([&] {
    need_out(out);
    std::size_t burn = burn_in < 0 ? fnet::default_burn_in(lambda) : static_cast<std::size_t>(burn_in);
    auto s = std::make_unique<fnet_series>();
    s->points = fnet::dynamic_purity(need(panel, "panel").panel, grouping_of(grouping), lambda, burn);
    *out = s.release();
  });
}

int fnet_series_size(const fnet_series* s, size_t* points) {
  return guarded([&] {
    need_out(points);
    *points = need(s, "series").points.size();
  });
}

int fnet_series_point(const fnet_series* s, size_t k, const char** date, const char** label, double* purity) {
  return guarded([&] {
    const auto& pts = need(s, "series").points;
    check_index(k, pts.size(), "point");
    if (date) *date = pts[k].date.c_str();
    if (label) *label = pts[k].label.c_str();
    if (purity) *purity = pts[k].purity;
  });
}

int fnet_series_write_csv(const fnet_series* s, const char* path) {
  return guarded([&] {
    fnet::text::write_file(need_str(path, "path"), fnet::format_purity_series(need(s, "series").points));
  });
}

int fnet_series_write_svg(const fnet_series* s, const char* title, const char* path) {
  return guarded([&] {
    fnet::text::write_file(need_str(path, "path"),
                           fnet::purity_series_svg(need(s, "series").points, title ? title : "Purity over time"));
  });
}

void fnet_series_free(fnet_series* s) { delete s; }

int fnet_run(const char* config_path, const char* const* overrides, size_t n_overrides, fnet_run_result** out) {
  return guarded([&] {
    need_out(out);
    auto config = fnet::load_config(need_str(config_path, "config path"));
    for (size_t k = 0; k < n_overrides; ++k) fnet::apply_override(config, need_str(overrides[k], "override"));
    *out = to_result(fnet::run(config));
  });
}

int fnet_run_json(const char* config_json, const char* base_dir, const char* const* overrides, size_t n_overrides,
                  fnet_run_result** out) {
  return guarded([&] {
    need_out(out);
    auto config = fnet::parse_config(need_str(config_json, "config"), base_dir ? base_dir : "");
    for (size_t k = 0; k < n_overrides; ++k) fnet::apply_override(config, need_str(overrides[k], "override"));
    *out = to_result(fnet::run(config));
  });
}

int fnet_run_files(const fnet_run_result* r, size_t* count) {
  return guarded([&] {
    need_out(count);
    *count = need(r, "run result").files.size();
  });
}

int fnet_run_file(const fnet_run_result* r, size_t k, const char** path) {
  return guarded([&] {
    const auto& res = need(r, "run result");
    need_out(path);
    check_index(k, res.files.size(), "file");
    *path = res.files[k].c_str();
  });
}

int fnet_run_warnings(const fnet_run_result* r, size_t* count) {
  return guarded([&] {
    need_out(count);
    *count = need(r, "run result").warnings.size();
  });
}

int fnet_run_warning(const fnet_run_result* r, size_t k, const char** message) {
  return guarded([&] {
    const auto& res = need(r, "run result");
    need_out(message);
    check_index(k, res.warnings.size(), "warning");
    *message = res.warnings[k].c_str();
  });
}

void fnet_run_result_free(fnet_run_result* r) { delete r; }

}  // extern "C"
