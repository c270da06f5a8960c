#ifndef FPP_H
#define FPP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FppStatus {
  FPP_STATUS_OK = 0,
  FPP_STATUS_NULL_POINTER = 1,
  FPP_STATUS_INVALID_ARGUMENT = 2,
  FPP_STATUS_INVALID_GRAPH = 3,
  FPP_STATUS_OUT_OF_RANGE = 4,
  FPP_STATUS_TOO_LARGE = 5,
  FPP_STATUS_DISCONNECTED = 6,
  FPP_STATUS_BUFFER_TOO_SMALL = 7,
  FPP_STATUS_IO = 8,
  FPP_STATUS_PANIC = 9,
} FppStatus;

// A real function on `{0,1}^J`.
typedef struct FppBoolTable FppBoolTable;

// One sampled or edited edge-length assignment on a graph.
typedef struct FppEnvironment FppEnvironment;

// A box of `Z^d` or a torus product `H x Z/nZ`.
typedef struct FppGraph FppGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *fpp_last_error(void);

// Box `[0, sides[0]) x ... x [0, sides[d-1])` of `Z^d`.
//
// # Safety
// `sides` must point to `d` readable values and `out` must be writable.
enum FppStatus fpp_graph_box(size_t d, const size_t *sides, struct FppGraph **out);

// Torus product of a fiber graph with `Z/nZ`. `fiber_edges` holds
// `2 * fiber_edge_count` vertex indices, one pair per edge.
//
// # Safety
// `fiber_edges` must point to `2 * fiber_edge_count` readable values and
// `out` must be writable.
enum FppStatus fpp_graph_torus(size_t fiber_vertices,
                               const size_t *fiber_edges,
                               size_t fiber_edge_count,
                               size_t n,
                               struct FppGraph **out);

// The square torus `(Z/nZ)^2`.
//
// # Safety
// `out` must be writable.
enum FppStatus fpp_graph_square_torus(size_t n, struct FppGraph **out);

// # Safety
// `g` must be null or a handle from this library not yet freed.
void fpp_graph_free(struct FppGraph *g);

// # Safety
// `g` must be a live handle and `out` writable.
enum FppStatus fpp_graph_vertex_count(const struct FppGraph *g, size_t *out);

// # Safety
// `g` must be a live handle and `out` writable.
enum FppStatus fpp_graph_edge_count(const struct FppGraph *g, size_t *out);

// Vertex id at box coordinates, or `(h, t)` on a torus product.
//
// # Safety
// `coords` must point to `len` readable values; `g` live; `out` writable.
enum FppStatus fpp_graph_vertex_at(const struct FppGraph *g,
                                   const size_t *coords,
                                   size_t len,
                                   uint32_t *out);

// Environment `sample_index` of `seed` with edge lengths `a < b`.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum FppStatus fpp_env_sample(const struct FppGraph *g,
                              double a,
                              double b,
                              uint64_t seed,
                              uint64_t sample_index,
                              struct FppEnvironment **out);

// A new environment equal to `env` with edge `e` flipped.
//
// # Safety
// `env` must be a live handle and `out` writable.
enum FppStatus fpp_env_toggle(const struct FppEnvironment *env,
                              uint32_t e,
                              struct FppEnvironment **out);

// # Safety
// `env` must be null or a handle from this library not yet freed.
void fpp_env_free(struct FppEnvironment *env);

// # Safety
// `env` must be a live handle and `out` writable.
enum FppStatus fpp_env_weight(const struct FppEnvironment *env, uint32_t e, double *out);

// # Safety
// `env` must be a live handle and `out` writable.
enum FppStatus fpp_distance(const struct FppEnvironment *env, uint32_t u, uint32_t v, double *out);

// Length and edge count of the canonical geodesic from `u` to `v`. When
// `edges` is non-null the edge ids are copied into it; `capacity` smaller
// than the edge count fails with `BufferTooSmall` after setting
// `*edge_count`.
//
// # Safety
// `env` must be live; `length` and `edge_count` writable; `edges` null or
// writable for `capacity` values.
enum FppStatus fpp_geodesic(const struct FppEnvironment *env,
                            uint32_t u,
                            uint32_t v,
                            uint32_t *edges,
                            size_t capacity,
                            size_t *edge_count,
                            double *length);

// Minimal length of a closed path winding once around the cycle factor.
//
// # Safety
// `env` must be a live handle on a torus product and `out` writable.
enum FppStatus fpp_circumference(const struct FppEnvironment *env, double *out);

// Table of `2^j_count` values; index bit `i` is coordinate `i`.
//
// # Safety
// `values` must point to `len` readable values and `out` be writable.
enum FppStatus fpp_bool_table_new(size_t j_count,
                                  const double *values,
                                  size_t len,
                                  struct FppBoolTable **out);

// # Safety
// `t` must be null or a handle from this library not yet freed.
void fpp_bool_table_free(struct FppBoolTable *t);

// # Safety
// `t` must be a live handle and `out` writable.
enum FppStatus fpp_bool_table_variance(const struct FppBoolTable *t, double *out);

// Right-hand side of the explicit Talagrand inequality.
//
// # Safety
// `t` must be a live handle and `out` writable.
enum FppStatus fpp_bool_table_talagrand_rhs(const struct FppBoolTable *t, double *out);

// Staircase `k(m, j)`.
//
// # Safety
// `out` must be writable.
enum FppStatus fpp_staircase_k(size_t m, size_t j, size_t *out);

// `g_m` on `m^2` bits given as bytes, each 0 or 1.
//
// # Safety
// `bits` must point to `len` readable bytes and `out` be writable.
enum FppStatus fpp_g_m(size_t m, const uint8_t *bits, size_t len, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPP_H */
