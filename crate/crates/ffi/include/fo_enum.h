#ifndef FO_ENUM_H
#define FO_ENUM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FoStatus {
  FO_STATUS_OK = 0,
  FO_STATUS_NULL_POINTER = -1,
  /**
   * Structure document or query did not parse.
   */
  FO_STATUS_PARSE = -2,
  /**
   * Degree bound exceeded or unusable radius.
   */
  FO_STATUS_PRECONDITION = -3,
  /**
   * Output buffer too small.
   */
  FO_STATUS_BUFFER = -4,
  FO_STATUS_INTERNAL = -5,
  FO_STATUS_INVALID_UTF8 = -6,
} FoStatus;

/**
 * An enumeration in progress. Holds its own reference to the query.
 */
typedef struct FoCursor FoCursor;

/**
 * A prepared query over one structure.
 */
typedef struct FoQuery FoQuery;

/**
 * A loaded structure.
 */
typedef struct FoStructure FoStructure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *fo_last_error_message(void);

/**
 * Parses a structure document (`rel`, `node` and `fact` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FoStatus fo_structure_load(const char *text, struct FoStructure **out);

/**
 * Number of elements, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle from [`fo_structure_load`].
 */
size_t fo_structure_size(const struct FoStructure *s);

/**
 * Copies the name of element `elem` into `buf` with a trailing NUL.
 *
 * `needed` (if non-null) receives the buffer size required, NUL included.
 *
 * # Safety
 * `s` must be a live structure handle; `buf` must hold `cap` bytes.
 */
enum FoStatus fo_structure_element_name(const struct FoStructure *s,
                                        uint32_t elem,
                                        char *buf,
                                        size_t cap,
                                        size_t *needed);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void fo_structure_free(struct FoStructure *s);

/**
 * Runs preprocessing for `query` over `s`.
 *
 * `radius` 0 selects the default radius. `degree_bound` 0 skips the degree
 * check. The query keeps the structure alive; `s` may be freed afterwards.
 *
 * # Safety
 * `s` must be a live structure handle, `query` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum FoStatus fo_query_prepare(const struct FoStructure *s,
                               const char *query,
                               uint64_t radius,
                               size_t degree_bound,
                               struct FoQuery **out);

/**
 * Number of free variables, i.e. the length of each answer.
 *
 * # Safety
 * `q` must be null or a live query handle.
 */
size_t fo_query_arity(const struct FoQuery *q);

/**
 * Total preprocessing steps recorded for the query.
 *
 * # Safety
 * `q` must be null or a live query handle.
 */
uint64_t fo_query_preprocess_steps(const struct FoQuery *q);

/**
 * # Safety
 * `q` must be null or a handle not yet freed.
 */
void fo_query_free(struct FoQuery *q);

/**
 * Starts an enumeration. Several cursors may share one query.
 *
 * # Safety
 * `q` must be a live query handle and `out` a valid pointer.
 */
enum FoStatus fo_cursor_open(const struct FoQuery *q, struct FoCursor **out);

/**
 * Writes the next answer into `buf` and sets `*has_answer`.
 *
 * `*has_answer` is 0 once the enumeration is exhausted. `cap` must be at
 * least the query arity.
 *
 * # Safety
 * `c` must be a live cursor, `buf` must hold `cap` elements and
 * `has_answer` must be a valid pointer.
 */
enum FoStatus fo_cursor_next(struct FoCursor *c, uint32_t *buf, size_t cap, bool *has_answer);

/**
 * Number of answers emitted so far.
 *
 * # Safety
 * `c` must be null or a live cursor.
 */
uint64_t fo_cursor_emitted(const struct FoCursor *c);

/**
 * # Safety
 * `c` must be null or a handle not yet freed.
 */
void fo_cursor_free(struct FoCursor *c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FO_ENUM_H */
