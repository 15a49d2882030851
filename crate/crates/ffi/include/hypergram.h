#ifndef HYPERGRAM_H
#define HYPERGRAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  HG_STATUS_OK = 0,
  HG_STATUS_NULL_POINTER = 1,
  HG_STATUS_INVALID_ARGUMENT = 2,
  HG_STATUS_IO = 3,
  HG_STATUS_PARSE = 4,
  HG_STATUS_CONFIG = 5,
  HG_STATUS_RUNTIME = 6,
  HG_STATUS_PANIC = 7,
} HgStatus;

/**
 * Opaque hypergraph handle.
 */
typedef struct HgGraph HgGraph;

/**
 * Opaque trained model handle.
 */
typedef struct HgModel HgModel;

/**
 * Training options. Start from [`hg_train_options_default`].
 */
typedef struct {
  /**
   * Train the tuplewise channel too (hphg); pairwise only when false.
   */
  bool tuple_channel;
  uint64_t seed;
  size_t multiplier;
  size_t walks;
  size_t walk_length;
  double alpha;
  size_t dim;
  size_t window;
  size_t negatives;
  /**
   * 0 picks a default from the graph size.
   */
  size_t epochs;
  double lr;
  double lambda;
} HgTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *hg_last_error(void);

/**
 * Loads a hypergraph from an edge file and a type file.
 *
 * # Safety
 * Paths are NUL-terminated strings; `out` is writable.
 */
HgStatus hg_graph_load(const char *edges_path, const char *types_path, HgGraph **out);

/**
 * Parses a hypergraph from in-memory edge and type listings.
 *
 * # Safety
 * Texts are NUL-terminated strings; `out` is writable.
 */
HgStatus hg_graph_parse(const char *edges, const char *types, HgGraph **out);

/**
 * # Safety
 * `g` is null or a handle from this library not yet freed.
 */
void hg_graph_free(HgGraph *g);

/**
 * # Safety
 * `g` is null or a live handle.
 */
size_t hg_graph_node_count(const HgGraph *g);

/**
 * # Safety
 * `g` is null or a live handle.
 */
size_t hg_graph_edge_count(const HgGraph *g);

/**
 * # Safety
 * `g` is null or a live handle.
 */
size_t hg_graph_type_count(const HgGraph *g);

/**
 * Looks up the id of the node labelled `label`.
 *
 * # Safety
 * `g` is a live handle, `label` a NUL-terminated string, `out` writable.
 */
HgStatus hg_graph_node_id(const HgGraph *g, const char *label, uint32_t *out);

/**
 * Writes one indecomposable factor per node type into `out_xi`, which
 * holds `len` values; `len` must equal the type count.
 *
 * # Safety
 * `g` is a live handle; `out_xi` points to `len` writable doubles.
 */
HgStatus hg_factor(const HgGraph *g, size_t multiplier, uint64_t seed, double *out_xi, size_t len);

/**
 * Default options: hphg, dimension 32, window 6, 10 walks of length 80,
 * alpha 100, 5 negatives, lambda 1, learning rate 0.025.
 */
HgTrainOptions hg_train_options_default(void);

/**
 * Estimates factors, generates walks and trains a model on `g`.
 *
 * # Safety
 * `g` is a live handle; `options` is null (defaults) or readable; `out`
 * is writable.
 */
HgStatus hg_train(const HgGraph *g, const HgTrainOptions *options, HgModel **out);

/**
 * # Safety
 * `m` is null or a handle from this library not yet freed.
 */
void hg_model_free(HgModel *m);

/**
 * Embedding dimension, 0 for a null handle.
 *
 * # Safety
 * `m` is null or a live handle.
 */
size_t hg_model_dim(const HgModel *m);

/**
 * Tuple length the tuplewise channel scores, 0 when it is off.
 *
 * # Safety
 * `m` is null or a live handle.
 */
size_t hg_model_tuple_size(const HgModel *m);

/**
 * # Safety
 * `m` is a live handle; `path` a NUL-terminated string.
 */
HgStatus hg_model_save(const HgModel *m, const char *path);

/**
 * # Safety
 * `path` is a NUL-terminated string; `out` is writable.
 */
HgStatus hg_model_load(const char *path, HgModel **out);

/**
 * Copies the embedding of `node` into `out`, which holds `len == dim`
 * doubles.
 *
 * # Safety
 * `m` is a live handle; `out` points to `len` writable doubles.
 */
HgStatus hg_model_embedding(const HgModel *m, uint32_t node, double *out, size_t len);

/**
 * Tuplewise score in `[0, 1]` of `len` node ids; 0 for tuples whose type
 * signature matches no edge of `g` or that repeat a node.
 *
 * # Safety
 * `m` and `g` are live handles; `nodes` points to `len` readable ids;
 * `out` is writable.
 */
HgStatus hg_model_tuple_score(const HgModel *m,
                              const HgGraph *g,
                              const uint32_t *nodes,
                              size_t len,
                              double *out);

/**
 * Mann-Whitney AUC of two score arrays, ties counting one half.
 *
 * # Safety
 * `pos` and `neg` point to `n_pos` and `n_neg` readable doubles; `out` is
 * writable.
 */
HgStatus hg_auc(const double *pos, size_t n_pos, const double *neg, size_t n_neg, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERGRAM_H */
