#ifndef GML_H
#define GML_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum GmlStatus {
  GML_STATUS_OK = 0,
  GML_STATUS_NULL_POINTER = 1,
  GML_STATUS_INVALID_UTF8 = 2,
  GML_STATUS_PARSE = 3,
  GML_STATUS_CONFIG = 4,
  GML_STATUS_IO = 5,
  GML_STATUS_DOMAIN = 6,
  GML_STATUS_CAP = 7,
  GML_STATUS_OUT_OF_RANGE = 8,
  GML_STATUS_INTERNAL = 9,
} GmlStatus;

typedef enum GmlSetOp {
  GML_SET_OP_UNION = 0,
  GML_SET_OP_INTERSECTION = 1,
  GML_SET_OP_DIFFERENCE = 2,
  GML_SET_OP_SYMMETRIC_DIFFERENCE = 3,
} GmlSetOp;

typedef enum GmlRule {
  GML_RULE_GML = 0,
  GML_RULE_UNION_ERM = 1,
  GML_RULE_HOLDOUT = 2,
} GmlRule;

typedef enum GmlWeights {
  GML_WEIGHTS_HARMONIC = 0,
  GML_WEIGHTS_GEOMETRIC = 1,
} GmlWeights;

/**
 * Opaque hypothesis handle.
 */
typedef struct GmlHypothesis GmlHypothesis;

/**
 * Opaque labeled sample handle.
 */
typedef struct GmlSample GmlSample;

/**
 * Opaque selection result handle.
 */
typedef struct GmlSelection GmlSelection;

/**
 * One row of the per-n selection trace.
 */
typedef struct GmlTraceEntry {
  uint32_t n;
  double best_empirical_risk;
  double penalty;
  double objective;
} GmlTraceEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *gml_last_error(void);

/**
 * Library version; static, do not free.
 */
const char *gml_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from a `gml_*` function that documents an owned string.
 */
void gml_string_free(char *s);

/**
 * Parses `n:c1,c2,...`.
 *
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum GmlStatus gml_hypothesis_parse(const char *text, struct GmlHypothesis **out);

/**
 * # Safety
 * `h` must be null or a live handle from this library.
 */
void gml_hypothesis_free(struct GmlHypothesis *h);

/**
 * # Safety
 * `h` must be a live handle.
 */
enum GmlStatus gml_hypothesis_depth(const struct GmlHypothesis *h, uint32_t *out);

/**
 * Canonical text form. Free the result with [`gml_string_free`].
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum GmlStatus gml_hypothesis_to_string(const struct GmlHypothesis *h, char **out);

/**
 * Evaluates on a `0`/`1` instance string.
 *
 * # Safety
 * `h` must be a live handle, `bits` a nul-terminated string.
 */
enum GmlStatus gml_hypothesis_evaluate(const struct GmlHypothesis *h, const char *bits, bool *out);

/**
 * Exact premeasure as `numerator / 2^log2_denominator`, plus its nearest double.
 *
 * # Safety
 * `h` must be a live handle; all out-pointers must be writable.
 */
enum GmlStatus gml_hypothesis_premeasure(const struct GmlHypothesis *h,
                                         uint64_t *numerator,
                                         uint32_t *log2_denominator,
                                         double *value);

/**
 * Set operation on two hypotheses; the result lives at the deeper depth.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum GmlStatus gml_hypothesis_combine(const struct GmlHypothesis *a,
                                      const struct GmlHypothesis *b,
                                      enum GmlSetOp op,
                                      struct GmlHypothesis **out);

/**
 * Loads a JSON Lines dataset.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum GmlStatus gml_sample_read_jsonl(const char *path, struct GmlSample **out);

/**
 * Draws `m` examples from a distribution given as a JSON spec string.
 *
 * # Safety
 * `spec_json` must be a nul-terminated string; `out` must be writable.
 */
enum GmlStatus gml_sample_synth(const char *spec_json,
                                size_t m,
                                uint64_t seed,
                                struct GmlSample **out);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum GmlStatus gml_sample_len(const struct GmlSample *s, size_t *out);

/**
 * # Safety
 * `s` must be null or a live handle from this library.
 */
void gml_sample_free(struct GmlSample *s);

/**
 * Selects a hypothesis over classes `n_min..=n_max`. Pass zero for both
 * bounds to use the default range for the sample size. `weights` and
 * `delta` are ignored by the unpenalized rules, `holdout_ratio` by all
 * but the holdout rule.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
enum GmlStatus gml_select(const struct GmlSample *sample,
                          enum GmlRule rule,
                          double delta,
                          enum GmlWeights weights_kind,
                          uint32_t n_min,
                          uint32_t n_max,
                          double holdout_ratio,
                          struct GmlSelection **out);

/**
 * # Safety
 * `s` must be null or a live handle from this library.
 */
void gml_selection_free(struct GmlSelection *s);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum GmlStatus gml_selection_chosen_n(const struct GmlSelection *s, uint32_t *out);

/**
 * Empirical risk of the chosen hypothesis as `errors / m` and as a double.
 *
 * # Safety
 * `s` must be a live handle; all out-pointers must be writable.
 */
enum GmlStatus gml_selection_empirical_risk(const struct GmlSelection *s,
                                            uint64_t *errors,
                                            uint64_t *m,
                                            double *value);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum GmlStatus gml_selection_penalty(const struct GmlSelection *s, double *out);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum GmlStatus gml_selection_objective(const struct GmlSelection *s, double *out);

/**
 * Copy of the chosen hypothesis; free it with [`gml_hypothesis_free`].
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum GmlStatus gml_selection_hypothesis(const struct GmlSelection *s, struct GmlHypothesis **out);

/**
 * # Safety
 * `s` must be a live handle.
 */
enum GmlStatus gml_selection_trace_len(const struct GmlSelection *s, size_t *out);

/**
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum GmlStatus gml_selection_trace_entry(const struct GmlSelection *s,
                                         size_t index,
                                         struct GmlTraceEntry *out);

/**
 * Complexity penalty for class `n` at sample size `m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmlStatus gml_penalty(uint32_t n,
                           uint64_t m,
                           double delta,
                           enum GmlWeights weights_kind,
                           double *out);

/**
 * Uniform-convergence accuracy of class `n`; `saturated` is set when it is at least 1.
 *
 * # Safety
 * Out-pointers must be writable.
 */
enum GmlStatus gml_epsilon_n(uint32_t n, uint64_t m, double delta, double *out, bool *saturated);

/**
 * Realizable-style uniform convergence sample size for class `n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmlStatus gml_uc_sample_complexity(uint32_t n, double epsilon, double delta, uint64_t *out);

/**
 * Agnostic sample size for class `n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmlStatus gml_agnostic_sample_complexity(uint32_t n,
                                              double epsilon,
                                              double delta,
                                              uint64_t *out);

/**
 * Sample size sufficient for class `n` under the weighted union bound.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmlStatus gml_nul_sample_complexity(uint32_t n,
                                         double epsilon,
                                         double delta,
                                         enum GmlWeights weights_kind,
                                         uint64_t *out);

/**
 * VC dimension bound for a union of `r` classes of dimension at most `d_max`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GmlStatus gml_vc_union_bound(uint32_t d_max, uint32_t r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GML_H */
