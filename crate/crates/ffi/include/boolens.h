#ifndef BOOLENS_H
#define BOOLENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BoolensStatus {
  BOOLENS_STATUS_OK = 0,
  BOOLENS_STATUS_NULL_POINTER = 1,
  BOOLENS_STATUS_VALIDATION = 2,
  BOOLENS_STATUS_PARSE = 3,
  BOOLENS_STATUS_UNSUPPORTED = 4,
  BOOLENS_STATUS_IO = 5,
  BOOLENS_STATUS_UTF8 = 6,
  BOOLENS_STATUS_PANIC = 7,
} BoolensStatus;

/**
 * Parsed ensemble expression.
 */
typedef struct BoolensExpr BoolensExpr;

/**
 * Ingested corpus: gold plus configured systems.
 */
typedef struct BoolensStore BoolensStore;

/**
 * Character-level scores for one prediction.
 */
typedef struct BoolensMetrics {
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  double precision;
  double recall;
  double f1;
  double precision_lo;
  double precision_hi;
  double recall_lo;
  double recall_hi;
  double f1_lo;
  double f1_hi;
  bool degenerate;
} BoolensMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread, or NULL when the last call
 * succeeded. Free with [`boolens_string_free`].
 */
char *boolens_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void boolens_string_free(char *s);

/**
 * Parses an expression such as `(A&B)|C`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum BoolensStatus boolens_expr_parse(const char *text, struct BoolensExpr **out);

/**
 * # Safety
 * `expr` must be NULL or a handle from [`boolens_expr_parse`], not yet freed.
 */
void boolens_expr_free(struct BoolensExpr *expr);

/**
 * Fully parenthesized form of the expression.
 *
 * # Safety
 * `expr` must be a live handle; `out` must be writable.
 */
enum BoolensStatus boolens_expr_to_string(const struct BoolensExpr *expr, char **out);

/**
 * Number of leaves, or 0 for NULL.
 *
 * # Safety
 * `expr` must be NULL or a live handle.
 */
size_t boolens_expr_leaf_count(const struct BoolensExpr *expr);

/**
 * Evaluates `expr` on one document whose sources are given as `'0'`/`'1'`
 * strings of equal length; writes the result bits as a new string.
 *
 * # Safety
 * `names` and `bits` must each point to `n` NUL-terminated strings.
 */
enum BoolensStatus boolens_expr_evaluate_bits(const struct BoolensExpr *expr,
                                              const char *const *names,
                                              const char *const *bits,
                                              size_t n,
                                              char **out);

/**
 * `p ± z·sqrt(p(1-p)/n)` clipped to `[0, 1]`.
 *
 * # Safety
 * `lo` and `hi` must be writable.
 */
enum BoolensStatus boolens_bernoulli_ci(double p, uint64_t n, double z, double *lo, double *hi);

/**
 * Distinct read-once Boolean functions over exactly `k` sources.
 *
 * # Safety
 * `out` must be writable.
 */
enum BoolensStatus boolens_semantic_count(size_t k, uint64_t *out);

/**
 * Loads the corpus described by a TOML run configuration. `seed` drives
 * overlap tie-breaks during ingest.
 *
 * # Safety
 * `config_path` must be a NUL-terminated path; `out` must be writable.
 */
enum BoolensStatus boolens_store_open(const char *config_path,
                                      uint64_t seed,
                                      struct BoolensStore **out);

/**
 * # Safety
 * `store` must be NULL or a handle from [`boolens_store_open`], not yet freed.
 */
void boolens_store_free(struct BoolensStore *store);

/**
 * # Safety
 * `store` must be NULL or a live handle.
 */
size_t boolens_store_num_documents(const struct BoolensStore *store);

/**
 * Scores `expr` against gold. `group` may be NULL for all groups.
 *
 * # Safety
 * `store` and `expr` must be live handles; `out` must be writable.
 */
enum BoolensStatus boolens_store_score(const struct BoolensStore *store,
                                       const struct BoolensExpr *expr,
                                       const char *group,
                                       struct BoolensMetrics *out);

/**
 * Exhaustive search over the configured systems; writes the result as JSON.
 * `group` may be NULL for all groups.
 *
 * # Safety
 * `store` must be a live handle; `out_json` must be writable.
 */
enum BoolensStatus boolens_store_search_json(const struct BoolensStore *store,
                                             const char *group,
                                             size_t top_k,
                                             char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOOLENS_H */
