/* C interface to the tree-embedding library. */

#ifndef TREEMBED_H
#define TREEMBED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status and error codes shared by every call.
typedef enum TmStatus {
  TM_STATUS_OK = 0,
  // The embedding attempt finished without an embedding.
  TM_STATUS_NOT_FOUND = 3,
  // The exhaustive search ran out of budget.
  TM_STATUS_BUDGET_EXCEEDED = 4,
  TM_STATUS_ERR_PARSE = -1,
  TM_STATUS_ERR_INVALID = -2,
  TM_STATUS_ERR_SIZE = -3,
  TM_STATUS_ERR_INTERNAL = -4,
  TM_STATUS_ERR_NULL = -5,
  TM_STATUS_ERR_UTF8 = -6,
} TmStatus;

typedef struct TmGraph TmGraph;

typedef struct TmTree TmTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent error on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *tm_last_error(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must have been returned by a `tm_*` function and not freed yet.
void tm_string_free(char *s);

// Parses an edge-list host graph (`n e` header, then `u v` lines).
//
// # Safety
// `text` must be a NUL-terminated string, `out` a valid pointer.
enum TmStatus tm_graph_parse(const char *text, struct TmGraph **out);

// Parses a tree (`n` header, `n-1` edges, optional `root r` line).
//
// # Safety
// `text` must be a NUL-terminated string, `out` a valid pointer.
enum TmStatus tm_tree_parse(const char *text, struct TmTree **out);

// # Safety
// `g` must come from [`tm_graph_parse`] and not be freed twice.
void tm_graph_free(struct TmGraph *g);

// # Safety
// `t` must come from [`tm_tree_parse`] and not be freed twice.
void tm_tree_free(struct TmTree *t);

// Vertex count, or -1 on a null handle.
//
// # Safety
// `g` must be a live graph handle or null.
int64_t tm_graph_n(const struct TmGraph *g);

// # Safety
// `t` must be a live tree handle or null.
int64_t tm_tree_n(const struct TmTree *t);

// Embeds the tree into the host. `method` is one of `auto`, `theorem1`,
// `theorem2`, `greedy`, `brute`; `constants` is an optional key=value
// block (the same format the CLI reads). Writes an embedding JSON and
// returns 0 (found), 3 (not found) or 4 (budget exhausted).
//
// # Safety
// `tree` and `graph` must be live handles; `method` NUL-terminated;
// `constants` NUL-terminated or null; `json_out` a valid pointer.
enum TmStatus tm_embed(const struct TmTree *tree,
                       const struct TmGraph *graph,
                       const char *method,
                       const char *constants,
                       uint64_t seed,
                       uint64_t budget,
                       char **json_out);

// Validates an embedding JSON (either a bare map array or an object with
// a `map` field). Returns 0 when the map is a complete valid embedding,
// 3 otherwise; the full report lands in `json_out`.
//
// # Safety
// Handles live, strings NUL-terminated, `json_out` valid.
enum TmStatus tm_validate(const struct TmTree *tree,
                          const struct TmGraph *graph,
                          const char *embedding_json,
                          char **json_out);

// Separator, stable set, bipartition and leaf profile of a tree as JSON.
//
// # Safety
// `tree` live, `json_out` valid.
enum TmStatus tm_analyze_tree(const struct TmTree *tree, char **json_out);

// Dense-structure report: `mode` is `seed` or `decompose`; `alpha` is a
// rational like `0.2` or `1/5`.
//
// # Safety
// `graph` live, strings NUL-terminated, `json_out` valid.
enum TmStatus tm_detect_dense(const struct TmGraph *graph,
                              uintptr_t m,
                              const char *alpha,
                              const char *mode,
                              char **json_out);

// Runs a conjecture scan and writes the report JSON.
//
// # Safety
// `json_out` must be a valid pointer.
enum TmStatus tm_scan(uintptr_t m,
                      uintptr_t hosts,
                      uint64_t seed,
                      uint64_t budget,
                      char **json_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TREEMBED_H */
