#ifndef ORLICZ_LAB_H
#define ORLICZ_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible entry point.
typedef enum OlStatus {
  OL_STATUS_OK = 0,
  OL_STATUS_NULL_POINTER = 1,
  OL_STATUS_INVALID_STRING = 2,
  OL_STATUS_DOMAIN = 3,
  OL_STATUS_SPACE_MISMATCH = 4,
  OL_STATUS_WINDOW_TOO_SHORT = 5,
  OL_STATUS_DELTA2_FAILED = 6,
  OL_STATUS_BOUND_VIOLATION = 7,
  OL_STATUS_BUFFER_TOO_SMALL = 8,
  OL_STATUS_CONFIG = 9,
  OL_STATUS_PANIC = 10,
} OlStatus;

// A simple function on a space.
typedef struct OlFunction OlFunction;

// A finite partition of a space.
typedef struct OlPartition OlPartition;

// A dyadic grid of `2^k` weighted cells.
typedef struct OlSpace OlSpace;

// A Young function.
typedef struct OlYoung OlYoung;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ol_version(void);

// Message of the most recent failure on this thread, or NULL if none.
// The pointer stays valid until the next failing call on the same thread.
const char *ol_last_error_message(void);

// Releases a string returned by the library.
//
// # Safety
// `s` must be NULL or a string obtained from this library, freed once.
void ol_string_free(char *s);

// Uniform grid of `2^k` cells.
//
// # Safety
// `out` must be NULL or valid for writes.
enum OlStatus ol_space_uniform(uint32_t k, struct OlSpace **out);

// Grid of `2^k` cells with the given positive weights.
//
// # Safety
// `weights` must point to `len` readable doubles; `out` must be NULL or
// valid for writes.
enum OlStatus ol_space_from_weights(uint32_t k,
                                    const double *weights,
                                    size_t len,
                                    struct OlSpace **out);

// # Safety
// `space` must be a live handle; `out` must be NULL or valid for writes.
enum OlStatus ol_space_n_cells(const struct OlSpace *space, size_t *out);

// # Safety
// `space` must be NULL or a handle not yet freed.
void ol_space_free(struct OlSpace *space);

// Parses `power:P`, `powerlog:P` or `expminus`.
//
// # Safety
// `spec` must be NULL or NUL-terminated; `out` must be NULL or valid for
// writes.
enum OlStatus ol_young_parse(const char *spec, struct OlYoung **out);

// # Safety
// `phi` must be NULL or a handle not yet freed.
void ol_young_free(struct OlYoung *phi);

// `φ(x)`.
//
// # Safety
// `phi` must be a live handle; `out` must be NULL or valid for writes.
enum OlStatus ol_young_eval(const struct OlYoung *phi, double x, double *out);

// The `x ≥ 0` with `φ(x) = y`.
//
// # Safety
// `phi` must be a live handle; `out` must be NULL or valid for writes.
enum OlStatus ol_young_inverse(const struct OlYoung *phi, double y, double *out);

// The complementary function `ψ(y)`.
//
// # Safety
// `phi` must be a live handle; `out` must be NULL or valid for writes.
enum OlStatus ol_young_conjugate(const struct OlYoung *phi, double y, double *out);

// Whether `φ` passes the default numerical Δ₂ certificate.
//
// # Safety
// `phi` must be a live handle; `out` must be NULL or valid for writes.
enum OlStatus ol_young_is_delta2(const struct OlYoung *phi, bool *out);

// Function with one value per cell.
//
// # Safety
// `space` must be a live handle, `values` must point to `len` readable
// doubles and `out` must be NULL or valid for writes.
enum OlStatus ol_function_from_values(const struct OlSpace *space,
                                      const double *values,
                                      size_t len,
                                      struct OlFunction **out);

// Parses `identity`, `zero`, `constant:C`, `indicator:A,B` or `random:SEED`.
//
// # Safety
// `space` must be a live handle, `spec` NUL-terminated and `out` NULL or
// valid for writes.
enum OlStatus ol_function_parse(const struct OlSpace *space,
                                const char *spec,
                                struct OlFunction **out);

// Copies the cell values into `buf`, which must hold at least `n_cells`
// entries.
//
// # Safety
// `f` must be a live handle and `buf` valid for `capacity` writes.
enum OlStatus ol_function_values(const struct OlFunction *f, double *buf, size_t capacity);

// # Safety
// `f` must be NULL or a handle not yet freed.
void ol_function_free(struct OlFunction *f);

// Luxemburg norm of `f` under `φ`.
//
// # Safety
// Handles must be live; `out` must be NULL or valid for writes.
enum OlStatus ol_norm(const struct OlFunction *f, const struct OlYoung *phi, double *out);

// Luxemburg norm of `f` under the complementary function of `φ`.
//
// # Safety
// Handles must be live; `out` must be NULL or valid for writes.
enum OlStatus ol_conjugate_norm(const struct OlFunction *f, const struct OlYoung *phi, double *out);

// Conditional expectation of `f` given the partition.
//
// # Safety
// Handles must be live; `out` must be NULL or valid for writes.
enum OlStatus ol_cond_exp(const struct OlFunction *f,
                          const struct OlPartition *partition,
                          struct OlFunction **out);

// Partition whose blocks are the cells sharing a label.
//
// # Safety
// `space` must be a live handle, `labels` must point to `len` readable
// entries and `out` must be NULL or valid for writes.
enum OlStatus ol_partition_from_labels(const struct OlSpace *space,
                                       const size_t *labels,
                                       size_t len,
                                       struct OlPartition **out);

// Parses `trivial`, `finest`, `dyadic:J`, `shifted:J`, `random:B:SEED` or
// `labels:L0,L1,...`.
//
// # Safety
// `space` must be a live handle, `spec` NUL-terminated and `out` NULL or
// valid for writes.
enum OlStatus ol_partition_parse(const struct OlSpace *space,
                                 const char *spec,
                                 struct OlPartition **out);

// Common refinement of two partitions.
//
// # Safety
// Handles must be live; `out` must be NULL or valid for writes.
enum OlStatus ol_partition_join(const struct OlPartition *a,
                                const struct OlPartition *b,
                                struct OlPartition **out);

// Finest common coarsening of two partitions.
//
// # Safety
// Handles must be live; `out` must be NULL or valid for writes.
enum OlStatus ol_partition_meet(const struct OlPartition *a,
                                const struct OlPartition *b,
                                struct OlPartition **out);

// Whether every block of `fine` lies inside a block of `coarse`.
//
// # Safety
// Handles must be live; `out` must be NULL or valid for writes.
enum OlStatus ol_partition_refines(const struct OlPartition *fine,
                                   const struct OlPartition *coarse,
                                   bool *out);

// # Safety
// `p` must be a live handle; `out` must be NULL or valid for writes.
enum OlStatus ol_partition_n_blocks(const struct OlPartition *p, size_t *out);

// Copies the canonical block label of every cell into `buf`.
//
// # Safety
// `p` must be a live handle and `buf` valid for `capacity` writes.
enum OlStatus ol_partition_labels(const struct OlPartition *p, uint32_t *buf, size_t capacity);

// # Safety
// `p` must be NULL or a handle not yet freed.
void ol_partition_free(struct OlPartition *p);

// Runs a scenario given as TOML text. `passed` receives the overall result
// and `verdicts` a newly allocated copy of the verdict report, to be freed
// with [`ol_string_free`].
//
// # Safety
// `toml` must be NUL-terminated; the out-pointers must be NULL or valid
// for writes.
enum OlStatus ol_scenario_run(const char *toml, bool *passed, char **verdicts);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORLICZ_LAB_H */
