#ifndef SURFCUT_H
#define SURFCUT_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Cut graph solver.
 */
typedef enum SurfcutCutMode {
  SURFCUT_CUT_MODE_EXACT = 0,
  SURFCUT_CUT_MODE_TREE_COTREE = 1,
} SurfcutCutMode;

/**
 * Status of a call.
 */
typedef enum SurfcutStatus {
  SURFCUT_STATUS_OK = 0,
  SURFCUT_STATUS_NULL_POINTER = 1,
  SURFCUT_STATUS_INVALID_UTF8 = 2,
  SURFCUT_STATUS_INVALID_INPUT = 3,
  SURFCUT_STATUS_STRUCTURAL = 4,
  SURFCUT_STATUS_DISCONNECTED = 5,
  SURFCUT_STATUS_GENUS_ZERO = 6,
  SURFCUT_STATUS_BUDGET_EXCEEDED = 7,
  SURFCUT_STATUS_VERIFICATION_FAILED = 8,
  SURFCUT_STATUS_INTERNAL = 9,
} SurfcutStatus;

/**
 * Opaque embedded graph.
 */
typedef struct SurfcutEmbedding SurfcutEmbedding;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *surfcut_last_error(void);

/**
 * Parse an embedded graph from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum SurfcutStatus surfcut_embedding_from_json(const char *json, struct SurfcutEmbedding **out);

/**
 * # Safety
 * `h` must come from `surfcut_embedding_from_json` and not be used afterwards.
 */
void surfcut_embedding_free(struct SurfcutEmbedding *h);

/**
 * Vertex and edge counts.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SurfcutStatus surfcut_embedding_size(const struct SurfcutEmbedding *h,
                                          size_t *vertices,
                                          size_t *edges);

/**
 * Euler genus and orientability of the surface.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SurfcutStatus surfcut_euler_genus(const struct SurfcutEmbedding *h,
                                       uint32_t *euler_genus,
                                       bool *orientable);

/**
 * Cut graph as JSON. `budget` of 0 means the default search budget.
 *
 * # Safety
 * Pointers must be valid; free the result with `surfcut_string_free`.
 */
enum SurfcutStatus surfcut_cut_graph_json(const struct SurfcutEmbedding *h,
                                          enum SurfcutCutMode mode,
                                          uint64_t budget,
                                          char **out);

/**
 * One planarization sample as JSON.
 *
 * # Safety
 * Pointers must be valid; free the result with `surfcut_string_free`.
 */
enum SurfcutStatus surfcut_planarize_json(const struct SurfcutEmbedding *h,
                                          enum SurfcutCutMode mode,
                                          uint64_t seed,
                                          char **out);

/**
 * Distortion report over `samples` samples as JSON. Returns
 * `VERIFICATION_FAILED` (with the report still written) if a sample failed.
 *
 * # Safety
 * Pointers must be valid; free the result with `surfcut_string_free`.
 */
enum SurfcutStatus surfcut_measure_json(const struct SurfcutEmbedding *h,
                                        enum SurfcutCutMode mode,
                                        size_t samples,
                                        uint64_t seed,
                                        char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void surfcut_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SURFCUT_H */
