#ifndef MKG_H
#define MKG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MkgStatus {
  MKG_STATUS_OK = 0,
  MKG_STATUS_NULL_POINTER = 1,
  MKG_STATUS_INVALID_ARGUMENT = 2,
  MKG_STATUS_PARSE = 3,
  MKG_STATUS_VALIDATION = 4,
  MKG_STATUS_NON_FINITE = 5,
  MKG_STATUS_RADIUS_EXCEEDED = 6,
  MKG_STATUS_DEGENERATE_METRIC = 7,
  MKG_STATUS_IO = 8,
  MKG_STATUS_PANIC = 9,
  MKG_STATUS_OTHER = 10,
} MkgStatus;

// Opaque simulation handle.
typedef struct MkgSimulation MkgSimulation;

// Scalar diagnostics at the current time.
typedef struct MkgDiagnostics {
  double t;
  double energy_e0;
  double flat_j;
  double sobolev_e0;
  double sobolev_e1;
  double gauss_res_l2;
  double gauss_res_linf;
  double bianchi_res_linf;
} MkgDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *mkg_version(void);

// Message of the last failed call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *mkg_last_error_message(void);

// Creates a simulation from a TOML config file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum MkgStatus mkg_simulation_from_config(const char *path, struct MkgSimulation **out);

// Creates a simulation from TOML text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum MkgStatus mkg_simulation_from_toml(const char *text, struct MkgSimulation **out);

// Releases a handle; null is ignored.
//
// # Safety
// `sim` must come from this library and not be used afterwards.
void mkg_simulation_free(struct MkgSimulation *sim);

// Advances by `n` time steps. On `NonFinite` the state is left at the last
// finite step.
//
// # Safety
// `sim` must be a live handle.
enum MkgStatus mkg_simulation_step(struct MkgSimulation *sim, uint64_t n);

// Steps taken so far and the configured step count.
//
// # Safety
// `sim` must be a live handle; either output may be null.
enum MkgStatus mkg_simulation_steps(const struct MkgSimulation *sim,
                                    uint64_t *taken,
                                    uint64_t *configured);

// Fills `out` with the diagnostics of the current state.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum MkgStatus mkg_simulation_diagnostics(const struct MkgSimulation *sim,
                                          struct MkgDiagnostics *out);

// Writes the current state as a binary snapshot.
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated string.
enum MkgStatus mkg_simulation_write_snapshot(const struct MkgSimulation *sim, const char *path);

// Copies scalar component `a` into `re`/`im`, each of length `len`, which
// must equal the site count.
//
// # Safety
// `re` and `im` must point to `len` writable doubles.
enum MkgStatus mkg_simulation_copy_phi(const struct MkgSimulation *sim,
                                       uintptr_t a,
                                       double *re,
                                       double *im,
                                       uintptr_t len);

// Kähler metric g_{ab̄} of Φ(r) = Σ coeffs[n] rⁿ at φ ∈ ℂⁿ, written
// row-major into `out_re`/`out_im` (n² entries each).
//
// # Safety
// Input arrays must hold `ncoeffs` and `n` doubles, outputs `n * n`.
enum MkgStatus mkg_kahler_metric(const double *coeffs,
                                 uintptr_t ncoeffs,
                                 const double *phi_re,
                                 const double *phi_im,
                                 uintptr_t n,
                                 double *out_re,
                                 double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MKG_H */
