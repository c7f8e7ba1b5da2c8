#ifndef CANDREFINE_H
#define CANDREFINE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Distance unit codes accepted by [`candrefine_edit_distance`].
 */
typedef enum CandrefineGranularity {
  CANDREFINE_GRANULARITY_TOKEN = 0,
  CANDREFINE_GRANULARITY_CHARACTER = 1,
} CandrefineGranularity;

/**
 * Selection method codes accepted by [`candrefine_pool_select`].
 */
typedef enum CandrefineMethod {
  CANDREFINE_METHOD_GREEDY = 0,
  CANDREFINE_METHOD_MBRD = 1,
  CANDREFINE_METHOD_ORACLE_RANK = 2,
  CANDREFINE_METHOD_ORACLE_COMBINE = 3,
} CandrefineMethod;

typedef enum CandrefineStatus {
  CANDREFINE_STATUS_OK = 0,
  CANDREFINE_STATUS_NULL_POINTER = 1,
  CANDREFINE_STATUS_INVALID_UTF8 = 2,
  CANDREFINE_STATUS_INVALID_ARGUMENT = 3,
  CANDREFINE_STATUS_POOL_TOO_SMALL = 4,
  CANDREFINE_STATUS_MISSING_TARGET = 5,
  CANDREFINE_STATUS_PARSE_ERROR = 6,
  CANDREFINE_STATUS_CORPUS_MISMATCH = 7,
  CANDREFINE_STATUS_IO_ERROR = 8,
  CANDREFINE_STATUS_INTERNAL = 9,
} CandrefineStatus;

/**
 * Opaque parsed M2 gold file.
 */
typedef struct CandrefineM2Document CandrefineM2Document;

/**
 * Opaque candidate pool.
 */
typedef struct CandrefinePool CandrefinePool;

typedef struct CandrefinePrf {
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  double precision;
  double recall;
  double f_beta;
} CandrefinePrf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *candrefine_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void candrefine_string_free(char *s);

/**
 * Levenshtein distance between two whitespace-and-punctuation tokenized
 * texts. `granularity_code` is a [`CandrefineGranularity`] value.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings; `out` must be writable.
 */
enum CandrefineStatus candrefine_edit_distance(const char *a,
                                               const char *b,
                                               int32_t granularity_code,
                                               size_t *out);

/**
 * Token-level `2·LCS/(|a|+|b|)`.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings; `out` must be writable.
 */
enum CandrefineStatus candrefine_sim_lcs(const char *a, const char *b, double *out);

/**
 * New empty pool for `source`. Returns NULL on invalid input.
 *
 * # Safety
 * `source` must be a NUL-terminated string.
 */
struct CandrefinePool *candrefine_pool_new(const char *source);

/**
 * Appends a candidate. The first candidate pushed is treated as greedy.
 *
 * # Safety
 * `pool` must come from [`candrefine_pool_new`]; `text` must be a
 * NUL-terminated string.
 */
enum CandrefineStatus candrefine_pool_push(struct CandrefinePool *pool, const char *text);

/**
 * Sets the gold target used by the oracle methods.
 *
 * # Safety
 * `pool` must come from [`candrefine_pool_new`]; `target` must be a
 * NUL-terminated string.
 */
enum CandrefineStatus candrefine_pool_set_target(struct CandrefinePool *pool, const char *target);

/**
 * Number of candidates, 0 for NULL.
 *
 * # Safety
 * `pool` must be NULL or come from [`candrefine_pool_new`].
 */
size_t candrefine_pool_len(const struct CandrefinePool *pool);

/**
 * # Safety
 * `pool` must be NULL or come from [`candrefine_pool_new`] and not yet be
 * freed.
 */
void candrefine_pool_free(struct CandrefinePool *pool);

/**
 * Runs a selection method (a [`CandrefineMethod`] code) with default
 * options. `out_index` receives the chosen candidate, or -1 for
 * oracle-combine; `out_text` receives a string to free with
 * [`candrefine_string_free`].
 *
 * # Safety
 * `pool` must come from [`candrefine_pool_new`]; both out pointers must be
 * writable.
 */
enum CandrefineStatus candrefine_pool_select(const struct CandrefinePool *pool,
                                             int32_t method_code,
                                             int64_t *out_index,
                                             char **out_text);

/**
 * Parses M2 text into a document handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum CandrefineStatus candrefine_m2_parse(const char *text, struct CandrefineM2Document **out);

/**
 * Reads and parses an M2 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CandrefineStatus candrefine_m2_read(const char *path, struct CandrefineM2Document **out);

/**
 * Number of sentences, 0 for NULL.
 *
 * # Safety
 * `doc` must be NULL or a live document handle.
 */
size_t candrefine_m2_len(const struct CandrefineM2Document *doc);

/**
 * Corpus M2-lite F0.5 of `n` whitespace-tokenized hypotheses.
 *
 * # Safety
 * `doc` must be a live document handle; `hypotheses` must point to `n`
 * NUL-terminated strings; `out` must be writable.
 */
enum CandrefineStatus candrefine_m2_score(const struct CandrefineM2Document *doc,
                                          const char *const *hypotheses,
                                          size_t n,
                                          struct CandrefinePrf *out);

/**
 * # Safety
 * `doc` must be NULL or a live document handle.
 */
void candrefine_m2_free(struct CandrefineM2Document *doc);

/**
 * ROUGE-N (lowercased, no stemming); F1 is in `f_beta`.
 *
 * # Safety
 * `hyp` and `reference` must be NUL-terminated strings; `out` must be
 * writable.
 */
enum CandrefineStatus candrefine_rouge_n(const char *hyp,
                                         const char *reference,
                                         size_t n,
                                         struct CandrefinePrf *out);

/**
 * ROUGE-L from the token LCS; F1 is in `f_beta`.
 *
 * # Safety
 * `hyp` and `reference` must be NUL-terminated strings; `out` must be
 * writable.
 */
enum CandrefineStatus candrefine_rouge_l(const char *hyp,
                                         const char *reference,
                                         struct CandrefinePrf *out);

/**
 * F-beta from counts.
 *
 * # Safety
 * `out` must be writable.
 */
enum CandrefineStatus candrefine_f_beta(int64_t tp,
                                        int64_t fp,
                                        int64_t fn_,
                                        double beta,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CANDREFINE_H */
