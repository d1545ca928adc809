#ifndef FEATMATCH_H
#define FEATMATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FmCompose {
  FM_COMPOSE_NAME_ONLY = 0,
  FM_COMPOSE_NAME_PLUS_DESCRIPTION = 1,
  FM_COMPOSE_NAME_PLUS_VALUES = 2,
} FmCompose;

typedef enum FmFormat {
  FM_FORMAT_CSV = 0,
  FM_FORMAT_JSON = 1,
} FmFormat;

// Result of every fallible call. The first three error codes match the
// command-line tool's exit codes.
typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_CONFIG = 1,
  FM_STATUS_IO = 2,
  FM_STATUS_PROVIDER = 3,
  FM_STATUS_NULL_POINTER = 4,
  FM_STATUS_INVALID_ARGUMENT = 5,
  FM_STATUS_PANIC = 6,
} FmStatus;

// Features of one dataset.
typedef struct FmFeatureList FmFeatureList;

// Scoring settings plus an embedder whose cache lives as long as the handle.
typedef struct FmMatcher FmMatcher;

typedef struct FmReport FmReport;

// One report row. Strings are borrowed from the report and stay valid until
// it is freed; absent ids are NULL.
typedef struct FmRow {
  const char *left_feature;
  const char *right_feature;
  const char *left_id;
  const char *right_id;
  double jaccard;
  double cosine;
  double weighted_score;
  bool degenerate;
} FmRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into this library on the same thread.
const char *fm_last_error(void);

const char *fm_version(void);

// New empty feature list. Returns NULL if `label` is NULL or not UTF-8.
//
// # Safety
// `label` must be NULL or a NUL-terminated string.
struct FmFeatureList *fm_features_new(const char *label);

// Append a feature. `description` may be NULL. Blank names are rejected.
//
// # Safety
// `list` must come from this library; strings must be NULL or NUL-terminated.
enum FmStatus fm_features_push(struct FmFeatureList *list,
                               const char *name,
                               const char *description);

// Load features from a CSV or JSON schema file with the default columns
// (`name`, `description`, `id`, `values`).
//
// # Safety
// `path` and `label` must be NUL-terminated; `out` must be writable.
enum FmStatus fm_features_load(const char *path, const char *label, struct FmFeatureList **out);

// Number of features; 0 for NULL.
//
// # Safety
// `list` must be NULL or come from this library.
size_t fm_features_len(const struct FmFeatureList *list);

// # Safety
// `list` must be NULL or come from this library, and not be used afterwards.
void fm_features_free(struct FmFeatureList *list);

// Matcher using the built-in hashing embedder.
//
// # Safety
// `out` must be writable.
enum FmStatus fm_matcher_new_baseline(size_t dim, uint64_t seed, struct FmMatcher **out);

// Matcher backed by an HTTP embedding service. `batch_size` 0 means the default.
//
// # Safety
// `endpoint` must be NUL-terminated; `out` must be writable.
enum FmStatus fm_matcher_new_remote(const char *endpoint,
                                    double timeout_secs,
                                    size_t batch_size,
                                    struct FmMatcher **out);

// Set the cosine weight; the Jaccard weight becomes `1 - w_cosine`.
//
// # Safety
// `matcher` must come from this library.
enum FmStatus fm_matcher_set_weights(struct FmMatcher *matcher, double w_cosine);

// # Safety
// `matcher` must come from this library.
enum FmStatus fm_matcher_set_threshold(struct FmMatcher *matcher, double threshold);

// # Safety
// `matcher` must come from this library.
enum FmStatus fm_matcher_set_compose(struct FmMatcher *matcher, enum FmCompose compose);

// Keep at most `k` rows per left feature; 0 keeps all.
//
// # Safety
// `matcher` must come from this library.
enum FmStatus fm_matcher_set_top_k(struct FmMatcher *matcher, size_t k);

// # Safety
// `matcher` must be NULL or come from this library, and not be used afterwards.
void fm_matcher_free(struct FmMatcher *matcher);

// Score every left/right pair and return the ranked report.
//
// # Safety
// Handles must come from this library; `out` must be writable.
enum FmStatus fm_match(const struct FmMatcher *matcher,
                       const struct FmFeatureList *left,
                       const struct FmFeatureList *right,
                       struct FmReport **out);

// Number of rows; 0 for NULL.
//
// # Safety
// `report` must be NULL or come from this library.
size_t fm_report_len(const struct FmReport *report);

// Number of pairs scored before the threshold was applied.
//
// # Safety
// `report` must be NULL or come from this library.
size_t fm_report_pairs_scored(const struct FmReport *report);

// # Safety
// `report` must come from this library; `out` must be writable.
enum FmStatus fm_report_row(const struct FmReport *report, size_t index, struct FmRow *out);

// Write the report atomically as CSV or JSON.
//
// # Safety
// `report` must come from this library; `path` must be NUL-terminated.
enum FmStatus fm_report_write(const struct FmReport *report,
                              const char *path,
                              enum FmFormat format);

// # Safety
// `report` must be NULL or come from this library, and not be used afterwards.
void fm_report_free(struct FmReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEATMATCH_H */
