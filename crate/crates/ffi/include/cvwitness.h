#ifndef CVWITNESS_H
#define CVWITNESS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `CVW_STATUS_OK` is zero; everything else is an error.
typedef enum cvw_status {
  CVW_STATUS_OK = 0,
  CVW_STATUS_NULL_POINTER = 1,
  CVW_STATUS_INVALID_ARGUMENT = 2,
  CVW_STATUS_IO = 3,
  CVW_STATUS_FORMAT = 4,
  CVW_STATUS_LEAKAGE = 5,
  CVW_STATUS_GENERATION_FAILED = 6,
  CVW_STATUS_NUMERICAL = 7,
  CVW_STATUS_PANIC = 8,
} cvw_status;

// Opaque density-matrix handle.
typedef struct cvw_state cvw_state;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *cvw_last_error(void);

// Library version as a static NUL-terminated string.
const char *cvw_version(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and must not be used afterwards.
void cvw_string_free(char *s);

// Release a state handle. Null is ignored.
//
// # Safety
// `state` must come from this library and must not be used afterwards.
void cvw_state_free(struct cvw_state *state);

// Read a binary density-matrix file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum cvw_status cvw_state_load(const char *path, struct cvw_state **out);

// Write a state in the binary density-matrix format.
//
// # Safety
// `state` must be a live handle and `path` a NUL-terminated string.
enum cvw_status cvw_state_save(const struct cvw_state *state, const char *path);

// Draw a random structured state. `structure` is JSON such as
// `"[[0,1],[2]]"` or null for a single block; `eta` is the uniform loss
// efficiency (1 for none).
//
// # Safety
// `structure` must be null or NUL-terminated; `out` must be writable.
enum cvw_status cvw_state_random_structured(size_t num_modes,
                                            size_t cutoff,
                                            const char *structure,
                                            uint8_t stellar_rank,
                                            double eta,
                                            uint64_t seed,
                                            struct cvw_state **out);

// Number of modes and per-mode cutoff of a state.
//
// # Safety
// `state` must be a live handle; the out-pointers must be writable.
enum cvw_status cvw_state_dims(const struct cvw_state *state, size_t *num_modes, size_t *cutoff);

// Certify an entanglement structure at one observable order with the default
// options. `certificate_json` may be null; otherwise it receives the full
// certificate, to be released with [`cvw_string_free`].
//
// # Safety
// `state` must be a live handle; `structure` null or NUL-terminated;
// `certified` and `g` writable.
enum cvw_status cvw_certify(const struct cvw_state *state,
                            const char *structure,
                            uint8_t order,
                            bool *certified,
                            double *g,
                            char **certificate_json);

// Largest eigenvalue of the witness matrix for `partition` at `order`.
// Positive values certify inseparability across that partition.
//
// # Safety
// `state` must be a live handle; `partition` NUL-terminated; `out` writable.
enum cvw_status cvw_witness_max_eigenvalue(const struct cvw_state *state,
                                           const char *partition,
                                           uint8_t order,
                                           double *out);

// van Loock–Furusawa value `V` with mode 0 as lead; `V > 0` flags full
// inseparability.
//
// # Safety
// `state` must be a live handle; `v` writable.
enum cvw_status cvw_van_loock(const struct cvw_state *state, double *v);

// Smallest eigenvalue of the partial transpose over the modes in `block`.
//
// # Safety
// `state` must be a live handle; `block` must point to `block_len` entries;
// `out` writable.
enum cvw_status cvw_ppt_min_eigenvalue(const struct cvw_state *state,
                                       const size_t *block,
                                       size_t block_len,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVWITNESS_H */
