#ifndef TRITTERSIM_H
#define TRITTERSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes of every fallible call.
typedef enum {
  TSIM_STATUS_OK = 0,
  TSIM_STATUS_NULL_POINTER = 1,
  TSIM_STATUS_INVALID_ARGUMENT = 2,
  TSIM_STATUS_OUT_OF_RANGE = 3,
  TSIM_STATUS_DIMENSION_MISMATCH = 4,
  TSIM_STATUS_NOT_UNITARY = 5,
  TSIM_STATUS_NOT_POSITIVE_SEMIDEFINITE = 6,
  TSIM_STATUS_UNDEFINED_VISIBILITY = 7,
  TSIM_STATUS_NUMERICAL_FAILURE = 8,
  TSIM_STATUS_BUFFER_TOO_SMALL = 9,
  TSIM_STATUS_INTERNAL_PANIC = 10,
} TsimStatus;

// Opaque circuit handle.
typedef struct TsimCircuit TsimCircuit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string; do not free.
const char *tsim_version(void);

// The ideal three-mode Fourier tritter.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_circuit_ideal_tritter(TsimCircuit **out);

// Identity circuit on `modes` modes.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_circuit_identity(uintptr_t modes, TsimCircuit **out);

// Physical tritter: couplers of reflectivity `r1`, `r2`, `r1` with an
// intermediate phase `phi` on the middle mode.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_circuit_tritter(double r1, double r2, double phi, TsimCircuit **out);

// Circuit from an explicit `modes x modes` complex matrix in row-major
// `re`/`im` arrays; the matrix must be unitary.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_circuit_from_matrix(uintptr_t modes,
                                    const double *re,
                                    const double *im,
                                    TsimCircuit **out);

// Release a circuit handle. Null is a no-op.
//
// # Safety
// `circuit` must be a pointer previously returned by one of the
// `tsim_circuit_*` constructors and not freed since.
void tsim_circuit_free(TsimCircuit *circuit);

// Mode count of a circuit.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_circuit_modes(const TsimCircuit *circuit, uintptr_t *out);

// One matrix element of a circuit.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_circuit_element(const TsimCircuit *circuit,
                                uintptr_t row,
                                uintptr_t col,
                                double *re,
                                double *im);

// Number of occupation patterns of `photons` photons over `modes` modes,
// i.e. the length of every distribution buffer.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_pattern_count(uintptr_t photons, uintptr_t modes, uintptr_t *out);

// Fill `out` (length `len >= count * modes`) with the canonical pattern
// table, row-major: pattern `i` occupies `out[i*modes .. (i+1)*modes]`.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_patterns(uintptr_t photons, uintptr_t modes, uint32_t *out, uintptr_t len);

// Output distribution of `photons` photons entering `input_modes`
// through the circuit. `gram_re`/`gram_im` give the photon overlap Gram
// matrix (row-major `photons x photons`); pass NULL for both to use the
// fully indistinguishable all-ones matrix. `out_probs` receives the
// probabilities in canonical pattern order and must hold
// `tsim_pattern_count(photons, modes)` entries.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_distribution(const TsimCircuit *circuit,
                             const uintptr_t *input_modes,
                             uintptr_t photons,
                             const double *gram_re,
                             const double *gram_im,
                             double *out_probs,
                             uintptr_t out_len);

// Three-photon output distribution of the laser-contamination source
// mixture through a three-mode circuit. Pairwise QD indistinguishabilities
// `m01`, `m02`, `m12`; `out_probs` must hold 10 entries.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_mixture_distribution(const TsimCircuit *circuit,
                                     double p1_qd,
                                     double g2,
                                     double m01,
                                     double m02,
                                     double m12,
                                     double *out_probs,
                                     uintptr_t out_len);

// Laser-to-QD mean photon number ratio from a measured g2(0).
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_chi_from_g2(double g2, double *out);

// Active and passive conversion rates of the ideal cascaded-binary
// demultiplexer with the given arm count, period, modulation contrast,
// and edge rise time (seconds). Pass `grid_step <= 0` for the default
// 0.1 ns sampling.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_demux_rates(uintptr_t arms,
                            double period,
                            double contrast,
                            double rise_time,
                            double grid_step,
                            double *c_active,
                            double *c_passive);

// Active efficiency `(r_exp - 1) / (r_ideal - 1)`; `anomalous` is set
// when the value leaves [0, 1].
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_active_efficiency(double r_exp, double r_ideal, double *value, bool *anomalous);

// Conversion rate of the ideal cascaded-binary scheme with `arms` arms;
// 0 signals an invalid arm count.
double tsim_ideal_active_conversion(uintptr_t arms);

// Visibility fidelity between two circuits of equal mode count
// (1 when their visibility matrices agree).
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_visibility_fidelity(const TsimCircuit *a, const TsimCircuit *b, double *out);

// Simulate noisy chip characterization of the circuit, reconstruct the
// transfer matrix, and report the visibility fidelity to the original.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_reconstruct_roundtrip_fidelity(const TsimCircuit *circuit,
                                               double noise_sigma,
                                               uint64_t seed,
                                               double *out);

// Modeled n-photon source rate
// `rep_rate * (brightness * demux_transmission)^n * conversion`.
//
// # Safety
// All pointer arguments must be valid for their documented length
// and alignment (or null only where explicitly allowed); circuit
// handles must originate from a `tsim_circuit_*` constructor.
TsimStatus tsim_source_rate(double rep_rate,
                            double fibered_brightness,
                            double demux_transmission,
                            double demux_conversion,
                            uintptr_t photons,
                            double *out);

// Rate after a further per-photon efficiency: `source_rate * eff^n`.
double tsim_downstream_rate(double source_rate, double per_photon_eff, uintptr_t photons);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRITTERSIM_H */
