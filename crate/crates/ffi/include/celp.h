#ifndef CELP_H
#define CELP_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every entry point.
 */
typedef enum CelpStatus {
  CELP_STATUS_OK = 0,
  CELP_STATUS_NULL_POINTER = 1,
  CELP_STATUS_INVALID_ARGUMENT = 2,
  CELP_STATUS_OUT_OF_RANGE = 3,
  CELP_STATUS_LENGTH_MISMATCH = 4,
  CELP_STATUS_IO = 5,
  CELP_STATUS_PARSE = 6,
  CELP_STATUS_CONFIG = 7,
  CELP_STATUS_NOT_CONVERGED = 8,
  CELP_STATUS_NUMERIC_ERROR = 9,
  CELP_STATUS_PANIC = 10,
} CelpStatus;

typedef enum CelpCentrality {
  CELP_CENTRALITY_DEGREE = 0,
  CELP_CENTRALITY_BETWEENNESS = 1,
  CELP_CENTRALITY_CLOSENESS = 2,
  CELP_CENTRALITY_PAGERANK = 3,
} CelpCentrality;

typedef enum CelpHeuristic {
  CELP_HEURISTIC_COMMON_NEIGHBORS = 0,
  CELP_HEURISTIC_ADAMIC_ADAR = 1,
  CELP_HEURISTIC_RESOURCE_ALLOCATION = 2,
} CelpHeuristic;

/**
 * Opaque undirected graph.
 */
typedef struct CelpGraph CelpGraph;

/**
 * Opaque community partition, possibly with centers.
 */
typedef struct CelpPartition CelpPartition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call on the same thread.
 */
const char *celp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *celp_version(void);

/**
 * Builds a graph on `n` nodes from `m` edges `(src[i], dst[i])`.
 * Self-loops and duplicates are dropped.
 *
 * # Safety
 * `src` and `dst` must point to `m` readable elements (or be anything when
 * `m == 0`); `out` must be a valid pointer to write the handle to.
 */
enum CelpStatus celp_graph_new(uintptr_t n,
                               const uintptr_t *src,
                               const uintptr_t *dst,
                               uintptr_t m,
                               struct CelpGraph **out);

/**
 * Reads a whitespace-separated edge list. Node ids are relabelled to
 * `0..n` in ascending order of the original ids.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CelpStatus celp_graph_load(const char *path, struct CelpGraph **out);

/**
 * # Safety
 * `g` must be NULL or a handle from this library that was not yet freed.
 */
void celp_graph_free(struct CelpGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle; `nodes` and `edges` must be writable.
 */
enum CelpStatus celp_graph_counts(const struct CelpGraph *g, uintptr_t *nodes, uintptr_t *edges);

/**
 * Hop distances from `source`. Unreachable nodes get the node count.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must hold `len` elements.
 */
enum CelpStatus celp_bfs(const struct CelpGraph *g,
                         uintptr_t source,
                         uintptr_t *out,
                         uintptr_t len);

/**
 * # Safety
 * `g` must be a live graph handle; `out` must hold `len` elements.
 */
enum CelpStatus celp_pagerank(const struct CelpGraph *g,
                              double damping,
                              double tol,
                              uintptr_t max_iter,
                              double *out,
                              uintptr_t len);

/**
 * # Safety
 * `g` must be a live graph handle; `out` must hold `len` elements.
 */
enum CelpStatus celp_centrality(const struct CelpGraph *g,
                                enum CelpCentrality kind,
                                double *out,
                                uintptr_t len);

/**
 * Fluid communities with `k` communities.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum CelpStatus celp_fluidc(const struct CelpGraph *g,
                            uintptr_t k,
                            uintptr_t max_sweeps,
                            uint64_t seed,
                            struct CelpPartition **out);

/**
 * # Safety
 * `p` must be NULL or a handle from this library that was not yet freed.
 */
void celp_partition_free(struct CelpPartition *p);

/**
 * # Safety
 * `p` must be a live partition handle; `k` must be writable.
 */
enum CelpStatus celp_partition_k(const struct CelpPartition *p, uintptr_t *k);

/**
 * Community label of every node.
 *
 * # Safety
 * `p` must be a live partition handle; `out` must hold `len` elements.
 */
enum CelpStatus celp_partition_assignment(const struct CelpPartition *p,
                                          uintptr_t *out,
                                          uintptr_t len);

/**
 * Picks one center per community by `kind` centrality on `g` and writes
 * them to `out` (`len == k`). The centers are kept on the partition.
 *
 * # Safety
 * `p` and `g` must be live handles; `out` must hold `len` elements.
 */
enum CelpStatus celp_partition_centers(struct CelpPartition *p,
                                       const struct CelpGraph *g,
                                       enum CelpCentrality kind,
                                       uintptr_t *out,
                                       uintptr_t len);

/**
 * Heuristic link score of `(u, v)`.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be writable.
 */
enum CelpStatus celp_heuristic(const struct CelpGraph *g,
                               uintptr_t u,
                               uintptr_t v,
                               enum CelpHeuristic kind,
                               double *out);

/**
 * Fraction of positive scores beaten or tied by fewer than `k` negatives.
 *
 * # Safety
 * `pos` and `neg` must point to `n_pos` and `n_neg` readable values;
 * `out` must be writable.
 */
enum CelpStatus celp_hit_rate(const double *pos,
                              uintptr_t n_pos,
                              const double *neg,
                              uintptr_t n_neg,
                              uintptr_t k,
                              double *out);

/**
 * Runs the full pipeline from a TOML config and returns the report as a
 * JSON string in `*report_json`, to be released with [`celp_string_free`].
 * With a non-NULL `out_dir` all run artifacts are written there.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out_dir` must be NULL or
 * NUL-terminated; `report_json` must be writable.
 */
enum CelpStatus celp_run_pipeline(const char *config_path, const char *out_dir, char **report_json);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void celp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELP_H */
