#ifndef BLOCHPULSE_H
#define BLOCHPULSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum BpStatus {
  BpStatus_Ok = 0,
  BpStatus_NullArgument = 1,
  BpStatus_InvalidUtf8 = 2,
  BpStatus_ParseError = 3,
  BpStatus_InvalidArgument = 4,
  BpStatus_SynthesisError = 5,
  BpStatus_SimulationError = 6,
} BpStatus;

/**
 * Opaque design handle.
 */
typedef struct BpDesign BpDesign;

/**
 * Opaque pulse-program handle.
 */
typedef struct BpProgram BpProgram;

/**
 * Message of the most recent error on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *bp_last_error_message(void);

/**
 * Synthesizes a design. `method`: 0 = Fourier synthesis, 1 = delta
 * modulation. `selection`: 0 = heuristic, 1 = greedy, 2 = gradient.
 * Angles are degrees.
 */
enum BpStatus bp_design_new(uint32_t method,
                            uint32_t selection,
                            uintptr_t terms,
                            double theta_deg,
                            double delta,
                            uint64_t seed,
                            struct BpDesign **out);

/**
 * Parses a design record from TOML text.
 */
enum BpStatus bp_design_from_toml(const char *text, struct BpDesign **out);

/**
 * Serializes a design to TOML. The returned string must be released with
 * `bp_string_free`.
 */
enum BpStatus bp_design_to_toml(const struct BpDesign *design, char **out);

/**
 * Compiles a design into a pulse program using the amplitude splitter.
 */
enum BpStatus bp_compile(const struct BpDesign *design,
                         double threshold_deg,
                         struct BpProgram **out);

/**
 * Parses pulse program text.
 */
enum BpStatus bp_program_parse(const char *text, struct BpProgram **out);

/**
 * Serializes a program to canonical text. Release with `bp_string_free`.
 */
enum BpStatus bp_program_serialize(const struct BpProgram *program, char **out);

/**
 * Evaluates the ensemble L2 error and flip angles of a program against an
 * ideal `theta_deg` rotation about the phase-90 axis. `omega` is the static
 * Larmor offset in radians per radian of nominal flip. `points` must be odd.
 */
enum BpStatus bp_program_evaluate(const struct BpProgram *program,
                                  double theta_deg,
                                  double delta,
                                  uintptr_t points,
                                  double omega,
                                  double *out_l2_error,
                                  double *out_flip_benchmark_rad,
                                  double *out_flip_rf_sum_rad);

/**
 * Releases a design handle. Null is accepted.
 */
void bp_design_free(struct BpDesign *design);

/**
 * Releases a program handle. Null is accepted.
 */
void bp_program_free(struct BpProgram *program);

/**
 * Releases a string returned by this library. Null is accepted.
 */
void bp_string_free(char *s);

#endif  /* BLOCHPULSE_H */
