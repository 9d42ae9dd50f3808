/*
 * C interface to the fnet correlation-network clustering library.
 *
 * Every object is an opaque handle created by a fnet_*_create/read/build call and released with
 * the matching fnet_*_free. Functions return FNET_OK or an error status; the message for the
 * most recent failure on the calling thread is available from fnet_last_error().
 *
 * Strings returned through `const char**` stay valid until the owning handle is freed.
 */
#ifndef FNET_C_H
#define FNET_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(FNET_BUILDING_LIBRARY)
#define FNET_API __attribute__((visibility("default")))
#else
#define FNET_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as CLI exit codes. */
typedef enum fnet_status {
  FNET_OK = 0,
  FNET_ERR_VALIDATION = 1, /* bad input, config, arguments or file contents */
  FNET_ERR_RUNTIME = 2     /* numeric degeneracy or I/O failure during computation */
} fnet_status;

typedef enum fnet_grouping { FNET_GROUP_SECTOR = 0, FNET_GROUP_COUNTRY = 1, FNET_GROUP_ALL = 2 } fnet_grouping;
typedef enum fnet_index_method { FNET_INDEX_MEAN = 0, FNET_INDEX_MEDIAN = 1 } fnet_index_method;
typedef enum fnet_fit_method { FNET_FIT_OLS = 0, FNET_FIT_THEIL_SEN = 1 } fnet_fit_method;

typedef struct fnet_meta fnet_meta;
typedef struct fnet_panel fnet_panel;
typedef struct fnet_distance fnet_distance;
typedef struct fnet_tree fnet_tree;
typedef struct fnet_report fnet_report;
typedef struct fnet_embedding fnet_embedding;
typedef struct fnet_series fnet_series;
typedef struct fnet_run_result fnet_run_result;

FNET_API const char* fnet_version(void);
FNET_API const char* fnet_last_error(void);

/* Copies `src` into buf (NUL-terminated, truncated to cap). *needed receives strlen(src) + 1. */
FNET_API int fnet_copy_string(const char* src, char* buf, size_t cap, size_t* needed);

/* ---- metadata ---------------------------------------------------------------------------- */
FNET_API int fnet_meta_read(const char* path, fnet_meta** out);
FNET_API int fnet_meta_size(const fnet_meta* meta, size_t* count);
FNET_API int fnet_meta_row(const fnet_meta* meta, size_t i, const char** id, const char** sector, const char** country);
FNET_API void fnet_meta_free(fnet_meta* meta);

/* ---- returns panels ---------------------------------------------------------------------- */
/* Prices + metadata (+ optional fx table, may be NULL) -> log returns in base_currency. */
FNET_API int fnet_panel_ingest(const char* prices_path, const char* meta_path, const char* fx_path,
                               const char* base_currency, fnet_panel** out);
FNET_API int fnet_panel_read_returns(const char* returns_path, const fnet_meta* meta, fnet_panel** out);
/* Synthetic factor-model panel from a JSON spec ("default" or an object). */
FNET_API int fnet_panel_generate(const char* synth_json, fnet_panel** out);
FNET_API int fnet_panel_size(const fnet_panel* panel, size_t* companies, size_t* days);
FNET_API int fnet_panel_company(const fnet_panel* panel, size_t i, const char** id);
FNET_API int fnet_panel_date(const fnet_panel* panel, size_t t, const char** date);
/* Row-major companies x days; len must equal companies * days. */
FNET_API int fnet_panel_returns(const fnet_panel* panel, double* buf, size_t len);
FNET_API int fnet_panel_dropped_count(const fnet_panel* panel, size_t* count);
FNET_API int fnet_panel_dropped(const fnet_panel* panel, size_t k, const char** id);
FNET_API int fnet_panel_meta(const fnet_panel* panel, fnet_meta** out);
FNET_API int fnet_panel_residualize(const fnet_panel* panel, fnet_grouping grouping, fnet_index_method index,
                                    fnet_fit_method fit, int leave_one_out, fnet_panel** out);
FNET_API int fnet_panel_write_returns(const fnet_panel* panel, const char* path);
FNET_API int fnet_panel_write_metadata(const fnet_panel* panel, const char* path);
FNET_API void fnet_panel_free(fnet_panel* panel);

/* Writes synthetic price and metadata files in the ingestion formats. */
FNET_API int fnet_synth_write(const char* synth_json, const char* prices_path, const char* meta_path);

/* ---- distances ----------------------------------------------------------------------------- */
FNET_API int fnet_distance_from_panel(const fnet_panel* panel, fnet_distance** out);
FNET_API int fnet_distance_read(const char* path, fnet_distance** out);
FNET_API int fnet_distance_write(const fnet_distance* dist, const char* path);
FNET_API int fnet_distance_size(const fnet_distance* dist, size_t* n);
FNET_API int fnet_distance_get(const fnet_distance* dist, size_t i, size_t j, double* value);
FNET_API void fnet_distance_free(fnet_distance* dist);

/* ---- dendrograms --------------------------------------------------------------------------- */
FNET_API int fnet_tree_build(const fnet_distance* dist, fnet_tree** out);
FNET_API int fnet_tree_read_newick(const char* path, fnet_tree** out);
FNET_API int fnet_tree_write_newick(const fnet_tree* tree, const char* path);
FNET_API int fnet_tree_write_merges(const fnet_tree* tree, const char* path);
FNET_API int fnet_tree_newick(const fnet_tree* tree, char* buf, size_t cap, size_t* needed);
FNET_API int fnet_tree_leaf_count(const fnet_tree* tree, size_t* n);
FNET_API int fnet_tree_merge(const fnet_tree* tree, size_t k, size_t* left, size_t* right, double* height,
                             size_t* size);
FNET_API void fnet_tree_free(fnet_tree* tree);

/* ---- purity -------------------------------------------------------------------------------- */
FNET_API int fnet_purity_report(const fnet_tree* tree, const fnet_meta* meta, fnet_grouping grouping,
                                size_t replicates, uint64_t seed, fnet_report** out);
FNET_API int fnet_report_rows(const fnet_report* report, size_t* rows);
FNET_API int fnet_report_row(const fnet_report* report, size_t k, const char** label, size_t* members,
                             double* purity, double* p_value);
/* table != 0 selects the aligned human-readable table, otherwise CSV. */
FNET_API int fnet_report_format(const fnet_report* report, int table, char* buf, size_t cap, size_t* needed);
FNET_API int fnet_report_write(const fnet_report* report, int table, const char* path);
FNET_API void fnet_report_free(fnet_report* report);

/* ---- MDS ----------------------------------------------------------------------------------- */
FNET_API int fnet_embed(const fnet_distance* dist, size_t max_iters, double tol, fnet_embedding** out);
FNET_API int fnet_embedding_info(const fnet_embedding* e, double* stress, size_t* iterations);
FNET_API int fnet_embedding_point(const fnet_embedding* e, size_t i, double* x, double* y);
FNET_API int fnet_embedding_write_csv(const fnet_embedding* e, const fnet_meta* meta, const char* path);
FNET_API int fnet_embedding_write_svg(const fnet_embedding* e, const fnet_meta* meta, fnet_grouping grouping,
                                      const char* path);
FNET_API void fnet_embedding_free(fnet_embedding* e);

/* ---- dynamic purity ------------------------------------------------------------------------ */
/* burn_in < 0 selects ceil(3 / lambda). */
FNET_API int fnet_dynamic_purity(const fnet_panel* panel, fnet_grouping grouping, double lambda, int64_t burn_in,
                                 fnet_series** out);
FNET_API int fnet_series_size(const fnet_series* s, size_t* points);
FNET_API int fnet_series_point(const fnet_series* s, size_t k, const char** date, const char** label, double* purity);
FNET_API int fnet_series_write_csv(const fnet_series* s, const char* path);
FNET_API int fnet_series_write_svg(const fnet_series* s, const char* title, const char* path);
FNET_API void fnet_series_free(fnet_series* s);

/* ---- full pipeline ------------------------------------------------------------------------- */
/* Runs the pipeline described by a JSON config file; overrides are "dotted.key=value" strings. */
FNET_API int fnet_run(const char* config_path, const char* const* overrides, size_t n_overrides,
                      fnet_run_result** out);
/* Same, with the config given as JSON text; relative paths resolve against base_dir (may be NULL). */
FNET_API int fnet_run_json(const char* config_json, const char* base_dir, const char* const* overrides,
                           size_t n_overrides, fnet_run_result** out);
FNET_API int fnet_run_files(const fnet_run_result* r, size_t* count);
FNET_API int fnet_run_file(const fnet_run_result* r, size_t k, const char** path);
FNET_API int fnet_run_warnings(const fnet_run_result* r, size_t* count);
FNET_API int fnet_run_warning(const fnet_run_result* r, size_t k, const char** message);
FNET_API void fnet_run_result_free(fnet_run_result* r);

#ifdef __cplusplus
}
#endif

#endif /* FNET_C_H */
