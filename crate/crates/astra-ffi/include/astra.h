#ifndef ASTRA_H
#define ASTRA_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible entry point.
 */
typedef enum AstraStatus {
  ASTRA_STATUS_OK = 0,
  ASTRA_STATUS_NULL_ARGUMENT = 1,
  ASTRA_STATUS_INVALID_UTF8 = 2,
  ASTRA_STATUS_IO = 3,
  ASTRA_STATUS_PARSE = 4,
  ASTRA_STATUS_NOT_FOUND = 5,
  ASTRA_STATUS_INVALID_ARGUMENT = 6,
  ASTRA_STATUS_INTERNAL = 7,
} AstraStatus;

/**
 * Opaque handle over a loaded retrieval index.
 */
typedef struct AstraIndex AstraIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *astra_last_error_message(void);

/**
 * Library version as a static string; do not free.
 */
const char *astra_version(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by an astra function, or null.
 */
void astra_string_free(char *s);

/**
 * Loads a retrieval index from a JSON file produced by `astra index`.
 * Returns null on failure (see [`astra_last_error_message`]).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string or null.
 */
struct AstraIndex *astra_index_load(const char *path);

/**
 * Releases an index handle.
 *
 * # Safety
 * `index` must come from [`astra_index_load`], or be null.
 */
void astra_index_free(struct AstraIndex *index);

/**
 * Number of chunks in the index; 0 for null.
 *
 * # Safety
 * `index` must come from [`astra_index_load`], or be null.
 */
uintptr_t astra_index_chunk_count(const struct AstraIndex *index);

/**
 * Embedding dimension of the index; 0 for null.
 *
 * # Safety
 * `index` must come from [`astra_index_load`], or be null.
 */
uintptr_t astra_index_dimension(const struct AstraIndex *index);

/**
 * Ranks the index against `prompt` with the deterministic embedder and
 * writes a JSON array `[{"chunk_id", "score", "rank"}, ...]` to `out_json`.
 *
 * # Safety
 * `index` must come from [`astra_index_load`]; `prompt` must be a valid
 * NUL-terminated string; `out_json` must be a valid output slot.
 */
enum AstraStatus astra_index_query(const struct AstraIndex *index,
                                   const char *prompt,
                                   uintptr_t top_k,
                                   char **out_json);

/**
 * Extracts the structural report of a C++ source and writes it as JSON.
 *
 * # Safety
 * `source` and `path` must be valid NUL-terminated strings (`path` may be
 * null); `out_json` must be a valid output slot.
 */
enum AstraStatus astra_extract_structure_json(const char *source,
                                              const char *path,
                                              char **out_json);

/**
 * Finds the definition range of a function (optionally scoped to a class)
 * in a C++ source; writes the 1-based line range to the output pointers.
 *
 * # Safety
 * String arguments must be valid NUL-terminated strings (`class_name` may
 * be null); `out_start_line` and `out_end_line` must be valid output slots.
 */
enum AstraStatus astra_function_range(const char *source,
                                      const char *class_name,
                                      const char *function,
                                      uintptr_t *out_start_line,
                                      uintptr_t *out_end_line);

/**
 * Renames function-local variables to canonical placeholders.
 * `preserve_csv` is an optional comma-separated identifier list.
 *
 * # Safety
 * `function_text` must be a valid NUL-terminated string; `preserve_csv`
 * may be null; `out_text` must be a valid output slot.
 */
enum AstraStatus astra_normalize_identifiers(const char *function_text,
                                             const char *preserve_csv,
                                             char **out_text);

/**
 * Cosine similarity of two equal-length vectors.
 *
 * # Safety
 * `a` and `b` must point to `len_a` / `len_b` readable doubles; `out_score`
 * must be a valid output slot.
 */
enum AstraStatus astra_cosine_similarity(const double *a,
                                         uintptr_t len_a,
                                         const double *b,
                                         uintptr_t len_b,
                                         double *out_score);

/**
 * Embeds `text` with the deterministic provider into a caller-allocated
 * buffer of exactly `dimension` doubles.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out_values` must point to
 * `dimension` writable doubles.
 */
enum AstraStatus astra_embed_text(const char *text, double *out_values, uintptr_t dimension);

/**
 * Replaces lines `[start_line, end_line]` of `file_text` with `replacement`
 * under conflict-style markers labelled `astra:<label>`.
 *
 * # Safety
 * String arguments must be valid NUL-terminated strings; `out_text` must
 * be a valid output slot.
 */
enum AstraStatus astra_apply_with_markers(const char *file_text,
                                          uintptr_t start_line,
                                          uintptr_t end_line,
                                          const char *replacement,
                                          const char *label,
                                          char **out_text);

/**
 * Resolves the single marker block in `file_text`; `accept != 0` keeps the
 * replacement side, otherwise the original side is restored.
 *
 * # Safety
 * `file_text` must be a valid NUL-terminated string; `out_text` must be a
 * valid output slot.
 */
enum AstraStatus astra_resolve_markers(const char *file_text, int32_t accept, char **out_text);

/**
 * Isolates code from a model response (first fenced block, else the
 * longest brace-balanced run, else the whole response).
 *
 * # Safety
 * `response` must be a valid NUL-terminated string; `out_code` must be a
 * valid output slot.
 */
enum AstraStatus astra_extract_code_block(const char *response, char **out_code);

/**
 * Renders the four-section prompt from its parts.
 *
 * # Safety
 * Section arguments may be null (treated as empty) except `user_prompt`;
 * all non-null arguments must be valid NUL-terminated strings; `out_text`
 * must be a valid output slot.
 */
enum AstraStatus astra_compose_prompt(const char *general_instructions,
                                      const char *rag_context,
                                      const char *ast_context,
                                      const char *user_prompt,
                                      char **out_text);

/**
 * Identifier-normalized cosine similarity between two function texts,
 * using the deterministic embedder at `dimension`.
 *
 * # Safety
 * `generated` and `reference` must be valid NUL-terminated strings;
 * `preserve_csv` may be null; `out_score` must be a valid output slot.
 */
enum AstraStatus astra_score_pair(const char *generated,
                                  const char *reference,
                                  const char *preserve_csv,
                                  uintptr_t dimension,
                                  double *out_score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASTRA_H */
