#ifndef ELHLEARN_H
#define ELHLEARN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ElhLang {
  ELH_LANG_AQ = 0,
  ELH_LANG_IQ = 1,
  ELH_LANG_CQR = 2,
} ElhLang;

typedef enum ElhPolicy {
  ELH_POLICY_MINIMAL_DETERMINISTIC = 0,
  ELH_POLICY_SEED_RANDOMIZED = 1,
  ELH_POLICY_ADVERSARIAL_CQ = 2,
} ElhPolicy;

/**
 * Result of a call.
 */
typedef enum ElhStatus {
  ELH_STATUS_OK = 0,
  ELH_STATUS_NULL_ARGUMENT = 1,
  ELH_STATUS_INVALID_UTF8 = 2,
  ELH_STATUS_SYNTAX = 3,
  ELH_STATUS_TERMINOLOGY = 4,
  ELH_STATUS_UNSUPPORTED = 5,
  ELH_STATUS_BUDGET = 6,
  ELH_STATUS_STRUCTURE = 7,
  ELH_STATUS_CONTRACT = 8,
  ELH_STATUS_CONFIG = 9,
  ELH_STATUS_SIGNATURE = 10,
  ELH_STATUS_DATA = 11,
  ELH_STATUS_PANIC = 12,
} ElhStatus;

/**
 * Opaque ABox handle.
 */
typedef struct ElhAbox ElhAbox;

/**
 * Opaque TBox handle.
 */
typedef struct ElhTbox ElhTbox;

/**
 * Query counters of a learning run.
 */
typedef struct ElhStats {
  uint64_t mq_count;
  uint64_t eq_count;
  uint64_t total_input_size;
  uint64_t largest_counterexample;
  uint64_t hypothesis_size;
} ElhStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the next failing call.
 */
const char *elh_last_error(void);

/**
 * Parses a TBox in the text format into `*out_tbox`.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out_tbox` a valid pointer.
 */
enum ElhStatus elh_tbox_parse(const char *src, struct ElhTbox **out_tbox);

/**
 * Parses an ABox in the text format into `*out_abox`.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out_abox` a valid pointer.
 */
enum ElhStatus elh_abox_parse(const char *src, struct ElhAbox **out_abox);

/**
 * Releases a TBox handle.
 *
 * # Safety
 * `t` must come from this library and not be freed twice. NULL is ignored.
 */
void elh_tbox_free(struct ElhTbox *t);

/**
 * Releases an ABox handle.
 *
 * # Safety
 * `a` must come from this library and not be freed twice. NULL is ignored.
 */
void elh_abox_free(struct ElhAbox *a);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void elh_string_free(char *s);

/**
 * The TBox in the text format; free with `elh_string_free`.
 *
 * # Safety
 * `t` must be a live handle and `out_text` a valid pointer.
 */
enum ElhStatus elh_tbox_to_string(const struct ElhTbox *t, char **out_text);

/**
 * Size of the TBox.
 *
 * # Safety
 * `t` must be a live handle or NULL (size 0).
 */
uint64_t elh_tbox_size(const struct ElhTbox *t);

/**
 * Sets `*out_answer` to 1 if `(t, a)` entails the query (text format, with or without `Q:`), else 0.
 *
 * # Safety
 * Handles must be live, `query` NUL-terminated and `out_answer` valid.
 */
enum ElhStatus elh_answers(const struct ElhTbox *t,
                           const struct ElhAbox *a,
                           const char *query,
                           int32_t *out_answer);

/**
 * Sets `*out_answer` to 1 if `t` and `h` entail the same queries of `query_lang` over `a`, else 0.
 *
 * # Safety
 * Handles must be live and `out_answer` valid.
 */
enum ElhStatus elh_inseparable(const struct ElhTbox *t,
                               const struct ElhTbox *h,
                               const struct ElhAbox *a,
                               enum ElhLang query_lang,
                               int32_t *out_answer);

/**
 * Learns a hypothesis for `target` over `abox` against a simulated teacher.
 * `seed` is used by the randomized policy only. `stats` may be NULL.
 *
 * # Safety
 * Handles must be live; `out_hypothesis` valid; `stats` valid or NULL.
 */
enum ElhStatus elh_learn(const struct ElhTbox *target,
                         const struct ElhAbox *abox,
                         enum ElhLang query_lang,
                         enum ElhPolicy policy,
                         uint64_t seed,
                         struct ElhTbox **out_hypothesis,
                         struct ElhStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELHLEARN_H */
