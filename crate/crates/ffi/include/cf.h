#ifndef CF_H
#define CF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_PARSE = 3,
  CF_STATUS_CONTRACT = 4,
  CF_STATUS_PARAMETER = 5,
  CF_STATUS_OVERFLOW = 6,
  CF_STATUS_INTERNAL = 7,
} CfStatus;

/**
 * Opaque circuit handle.
 */
typedef struct CfCircuit CfCircuit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses the text circuit format into a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CfStatus cf_circuit_parse(const char *text, struct CfCircuit **out);

/**
 * Prints a circuit in the text format.
 *
 * # Safety
 * `c` must be a live handle or null; `out` a valid pointer.
 */
enum CfStatus cf_circuit_to_text(const struct CfCircuit *c, char **out);

/**
 * Size, degree, variables, depth, gate counts and fan-ins as JSON.
 *
 * # Safety
 * `c` must be a live handle or null; `out` a valid pointer.
 */
enum CfStatus cf_circuit_stats_json(const struct CfCircuit *c, char **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `c` must be null or a handle not yet freed.
 */
void cf_circuit_free(struct CfCircuit *c);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void cf_string_free(char *s);

/**
 * Permanent of an `n x n` matrix of variables, `1 <= n <= 5`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CfStatus cf_gen_perm(uint32_t n, struct CfCircuit **out);

/**
 * Determinant of an `n x n` matrix of variables, `1 <= n <= 5`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CfStatus cf_gen_det(uint32_t n, struct CfCircuit **out);

/**
 * Right-nested product of `n >= 2` variables.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CfStatus cf_gen_comb(uint32_t n, struct CfCircuit **out);

/**
 * Reduces a single-output circuit to depth four. `a = 0` picks the split
 * parameter automatically. When `report` is non-null it receives the pass
 * report as JSON.
 *
 * # Safety
 * `c` must be a live handle or null; `out` a valid pointer; `report` null
 * or a valid pointer.
 */
enum CfStatus cf_reduce_to_depth4(const struct CfCircuit *c,
                                  uint32_t a,
                                  struct CfCircuit **out,
                                  char **report);

/**
 * Compares two circuits output by output, exactly when both expand within
 * the default term budget and otherwise at random points drawn from
 * `seed`.
 *
 * # Safety
 * `a`, `b` must be live handles or null; `equal` a valid pointer.
 */
enum CfStatus cf_equivalent(const struct CfCircuit *a,
                            const struct CfCircuit *b,
                            uint64_t seed,
                            bool *equal);

/**
 * Total number of parse trees over all outputs, in decimal.
 *
 * # Safety
 * `c` must be a live handle or null; `out` a valid pointer.
 */
enum CfStatus cf_count_parse_trees(const struct CfCircuit *c, char **out);

/**
 * Exact expansion of every output, one polynomial per line.
 *
 * # Safety
 * `c` must be a live handle or null; `out` a valid pointer.
 */
enum CfStatus cf_expand(const struct CfCircuit *c, size_t term_budget, char **out);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cf_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CF_H */
