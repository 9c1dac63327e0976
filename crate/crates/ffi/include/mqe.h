#ifndef MQE_H
#define MQE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum MqeStatus {
  MQE_STATUS_OK = 0,
  MQE_STATUS_NULL_POINTER = 1,
  MQE_STATUS_INVALID_ARGUMENT = 2,
  MQE_STATUS_NUMERIC_FAILURE = 3,
  MQE_STATUS_RECONSTRUCTION_FAILURE = 4,
  MQE_STATUS_OUT_OF_RANGE = 5,
  MQE_STATUS_INTERNAL = 6,
} MqeStatus;

/**
 * Built MQE network.
 */
typedef struct MqeNetwork MqeNetwork;

/**
 * Set of user positions.
 */
typedef struct MqeUserSet MqeUserSet;

/**
 * Pair-averaged observables of a network.
 */
typedef struct MqeObservables {
  double q_star;
  double l_star;
  double l_star_budget;
  double q_min;
  double rho;
  double efficiency;
} MqeObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mqe_last_error_message(void);

/**
 * Samples `n` users uniformly in a `side x side` square.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MqeStatus mqe_users_sample(size_t n,
                                double side,
                                double lambda0,
                                uint64_t seed,
                                struct MqeUserSet **out);

/**
 * Users from `n` interleaved `x, y` coordinates (`2 n` doubles).
 *
 * # Safety
 * `coords` must point to `2 * n` readable doubles and `out` to writable
 * storage for one handle.
 */
enum MqeStatus mqe_users_from_coords(const double *coords,
                                     size_t n,
                                     double side,
                                     double lambda0,
                                     struct MqeUserSet **out);

/**
 * Number of users, or 0 for a null handle.
 *
 * # Safety
 * `users` must be null or a live handle.
 */
size_t mqe_users_len(const struct MqeUserSet *users);

/**
 * Copies the coordinates of user `i` into `xy[0..2]`.
 *
 * # Safety
 * `users` must be a live handle and `xy` must point to 2 writable doubles.
 */
enum MqeStatus mqe_users_point(const struct MqeUserSet *users, size_t i, double *xy);

/**
 * # Safety
 * `users` must be null or a handle not freed before.
 */
void mqe_users_free(struct MqeUserSet *users);

/**
 * Builds the MQE network for trade-off `alpha` and eavesdropping
 * probability `p`. `users` is not consumed.
 *
 * # Safety
 * `users` must be a live handle and `out` writable storage for one handle.
 */
enum MqeStatus mqe_network_build(const struct MqeUserSet *users,
                                 double alpha,
                                 double p,
                                 struct MqeNetwork **out);

/**
 * # Safety
 * `net` must be null or a handle not freed before.
 */
void mqe_network_free(struct MqeNetwork *net);

/**
 * Number of links, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t mqe_network_edge_count(const struct MqeNetwork *net);

/**
 * Writes up to `capacity` links as `i, j` pairs into `pairs[0..2 capacity]`
 * and the total link count into `written`.
 *
 * # Safety
 * `net` must be a live handle, `pairs` must point to `2 * capacity`
 * writable `usize`s and `written` to one.
 */
enum MqeStatus mqe_network_edges(const struct MqeNetwork *net,
                                 size_t *pairs,
                                 size_t capacity,
                                 size_t *written);

/**
 * Writes the stored `a -> b` path into `nodes[0..capacity]` and its node
 * count into `len`. When `capacity < *len` nothing is written to `nodes`.
 *
 * # Safety
 * `net` must be a live handle, `nodes` must point to `capacity` writable
 * `usize`s and `len` to one.
 */
enum MqeStatus mqe_network_path(const struct MqeNetwork *net,
                                size_t a,
                                size_t b,
                                size_t *nodes,
                                size_t capacity,
                                size_t *len);

/**
 * Capacitance, budget and efficiency of the `a -> b` path.
 *
 * # Safety
 * `net` must be a live handle; each output pointer may be null.
 */
enum MqeStatus mqe_network_pair(const struct MqeNetwork *net,
                                size_t a,
                                size_t b,
                                double *capacitance,
                                size_t *m_star,
                                double *efficiency);

/**
 * # Safety
 * `net` must be a live handle and `out` writable.
 */
enum MqeStatus mqe_network_observables(const struct MqeNetwork *net, struct MqeObservables *out);

/**
 * Capacitance of a link of length `d`, in bits per use.
 *
 * # Safety
 * `out` must be writable.
 */
enum MqeStatus mqe_link_capacitance(double d, double lambda0, double *out);

/**
 * Trade-off value at which the `m - 1 -> m` relay transition happens for
 * short links.
 *
 * # Safety
 * `out` must be writable.
 */
enum MqeStatus mqe_alpha_c_step(size_t m, double p, double *out);

/**
 * Mean direct-link capacitance of uniform users in a square of side
 * `l_over_lambda`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MqeStatus mqe_q_fc(double l_over_lambda, double *out);

/**
 * Bottleneck capacitance of the maximum spanning tree of `n` users.
 *
 * # Safety
 * `out` must be writable.
 */
enum MqeStatus mqe_q_mst(size_t n, double l_over_lambda, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MQE_H */
