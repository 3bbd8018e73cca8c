#ifndef SCATTER_TELEPORT_H
#define SCATTER_TELEPORT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StStatus {
  ST_STATUS_OK = 0,
  ST_STATUS_NULL_POINTER = 1,
  ST_STATUS_INVALID_ARGUMENT = 2,
  ST_STATUS_BUFFER_TOO_SMALL = 3,
  ST_STATUS_NUMERICAL = 4,
  ST_STATUS_DETECTION_IMPOSSIBLE = 5,
  ST_STATUS_PANIC = 6,
} StStatus;

// Values for the `kind` fields.
typedef enum StCouplingKind {
  ST_COUPLING_KIND_HEISENBERG = 0,
  ST_COUPLING_KIND_XY = 1,
} StCouplingKind;

// Values for the `dispersion` fields.
typedef enum StDispersion {
  ST_DISPERSION_QUADRATIC = 0,
  ST_DISPERSION_LINEAR = 1,
} StDispersion;

// Values for the `sampler` argument.
typedef enum StSampler {
  ST_SAMPLER_BLOCH_ANGLES = 0,
  ST_SAMPLER_QUTRIT_ANGLES = 1,
  ST_SAMPLER_HAAR_UNIFORM = 2,
} StSampler;

// Opaque handle to a solved Kraus set.
typedef struct StKrausSet StKrausSet;

// One scattering event in physical units.
typedef struct StScatterConfig {
  // 2s, from 1 to 5.
  uint32_t twice_spin;
  // An `StCouplingKind` value.
  uint32_t kind;
  // An `StDispersion` value.
  uint32_t dispersion;
  double couplings[3];
  double wavevector;
  double velocity;
  double d12;
  double d23;
} StScatterConfig;

typedef struct StComplex {
  double re;
  double im;
} StComplex;

// Protocol with symmetric couplings, in dimensionless units.
typedef struct StProtocolParams {
  uint32_t twice_spin;
  uint32_t kind;
  uint32_t dispersion;
  // J2 = J3 during step (b).
  double jb_over_v;
  // J1 = J2 during step (c).
  double jc_over_v;
  uint32_t n23;
  uint32_t n12;
  double kd12_over_pi;
  double kd23_over_pi;
} StProtocolParams;

typedef struct StProtocolOutcome {
  double fidelity;
  double success_probability;
  double stage_probabilities[2];
} StProtocolOutcome;

typedef struct StPerformance {
  double mean_fidelity;
  double mean_probability;
  double stderr_fidelity;
  double stderr_probability;
  uint64_t samples;
  uint64_t failures;
} StPerformance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Solves one scattering event. On success `*out` receives a new handle.
//
// # Safety
// `config` must point to a valid `StScatterConfig`; `out` must be writable.
enum StStatus st_kraus_solve(const struct StScatterConfig *config, struct StKrausSet **out);

// Releases a handle from [`st_kraus_solve`]. Null is ignored.
//
// # Safety
// `ks` must be null or a handle not yet freed.
void st_kraus_free(struct StKrausSet *ks);

// Dimension (2s+1)^3 of the centers' space, or 0 for a null handle.
//
// # Safety
// `ks` must be null or a live handle.
uintptr_t st_kraus_dim(const struct StKrausSet *ks);

// Max-norm of Σ (T†T + R†R) - 1 over the left-incidence isometry.
//
// # Safety
// `ks` must be a live handle and `out` writable.
enum StStatus st_kraus_closure_residual(const struct StKrausSet *ks, double *out);

// Copies T[m_in][m_out] row-major into `buf` (at least dim*dim entries).
// Index 0 is mediator spin up, 1 is down.
//
// # Safety
// `ks` must be a live handle; `buf` must hold `len` writable entries.
enum StStatus st_kraus_transmission(const struct StKrausSet *ks,
                                    uint32_t m_in,
                                    uint32_t m_out,
                                    struct StComplex *buf,
                                    uintptr_t len);

// Copies R[m_in][m_out] row-major into `buf`.
//
// # Safety
// As for [`st_kraus_transmission`].
enum StStatus st_kraus_reflection(const struct StKrausSet *ks,
                                  uint32_t m_in,
                                  uint32_t m_out,
                                  struct StComplex *buf,
                                  uintptr_t len);

// Teleports the state with amplitudes `phi` (2s+1 entries, normalized on
// input) and writes fidelity and success probability to `out`.
//
// # Safety
// `params` and `out` must be valid; `phi` must hold `len` readable entries.
enum StStatus st_protocol_run(const struct StProtocolParams *params,
                              const struct StComplex *phi,
                              uintptr_t len,
                              struct StProtocolOutcome *out);

// Mean fidelity and success probability over `count` states drawn with
// `sampler` (an `StSampler` value) from `seed`.
//
// # Safety
// `params` and `out` must be valid.
enum StStatus st_average_performance(const struct StProtocolParams *params,
                                     uint32_t sampler,
                                     uint64_t count,
                                     uint64_t seed,
                                     struct StPerformance *out);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into this library on the same thread.
const char *st_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *st_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCATTER_TELEPORT_H */
