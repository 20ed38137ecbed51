#ifndef SWARM3D_H
#define SWARM3D_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Swarm3dStatus {
  SWARM3D_STATUS_OK = 0,
  SWARM3D_STATUS_NULL_ARGUMENT = 1,
  SWARM3D_STATUS_INVALID_UTF8 = 2,
  SWARM3D_STATUS_CONFIG = 3,
  SWARM3D_STATUS_IO = 4,
  SWARM3D_STATUS_SIMULATION = 5,
  SWARM3D_STATUS_PANIC = 6,
} Swarm3dStatus;

typedef enum Swarm3dStopReason {
  SWARM3D_STOP_REASON_COMPLETE = 0,
  SWARM3D_STOP_REASON_ALL_VISITED = 1,
  SWARM3D_STOP_REASON_ALL_TARGETS_FOUND = 2,
  SWARM3D_STOP_REASON_HORIZON = 3,
} Swarm3dStopReason;

typedef enum Swarm3dLattice {
  SWARM3D_LATTICE_TRUNCATED_OCTAHEDRON = 0,
  SWARM3D_LATTICE_CUBE = 1,
  SWARM3D_LATTICE_HEXAGONAL_PRISM = 2,
  SWARM3D_LATTICE_RHOMBIC_DODECAHEDRON = 3,
} Swarm3dLattice;

/**
 * The result of running a scenario.
 */
typedef struct Swarm3dRun Swarm3dRun;

/**
 * A parsed and validated scenario.
 */
typedef struct Swarm3dScenario Swarm3dScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string. Do not free.
 */
const char *swarm3d_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *swarm3d_last_error(void);

/**
 * Release a string returned through an out-parameter. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void swarm3d_string_free(char *s);

/**
 * Parse and validate a TOML scenario.
 *
 * # Safety
 * `toml` must be a nul-terminated string; `out` must be writable.
 */
enum Swarm3dStatus swarm3d_scenario_from_toml(const char *toml, struct Swarm3dScenario **out);

/**
 * # Safety
 * `scenario` must be a live handle or null.
 */
enum Swarm3dStatus swarm3d_scenario_set_seed(struct Swarm3dScenario *scenario, uint64_t seed);

/**
 * Release a scenario. Null is ignored.
 *
 * # Safety
 * `scenario` must come from `swarm3d_scenario_from_toml` and not have been freed.
 */
void swarm3d_scenario_free(struct Swarm3dScenario *scenario);

/**
 * Run a scenario to its stop rule or horizon.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum Swarm3dStatus swarm3d_run(const struct Swarm3dScenario *scenario, struct Swarm3dRun **out);

/**
 * Release a run. Null is ignored.
 *
 * # Safety
 * `run` must come from `swarm3d_run` and not have been freed.
 */
void swarm3d_run_free(struct Swarm3dRun *run);

/**
 * # Safety
 * `run` must be a live handle; `steps` must be writable.
 */
enum Swarm3dStatus swarm3d_run_steps(const struct Swarm3dRun *run, uint64_t *steps);

/**
 * # Safety
 * `run` must be a live handle; `reason` must be writable.
 */
enum Swarm3dStatus swarm3d_run_stop_reason(const struct Swarm3dRun *run,
                                           enum Swarm3dStopReason *reason);

/**
 * Metrics as JSON. Free the string with `swarm3d_string_free`.
 *
 * # Safety
 * `run` must be a live handle; `json` must be writable.
 */
enum Swarm3dStatus swarm3d_run_metrics_json(const struct Swarm3dRun *run, char **json);

/**
 * Number of warnings raised while validating the scenario.
 *
 * # Safety
 * `run` must be a live handle; `count` must be writable.
 */
enum Swarm3dStatus swarm3d_run_warning_count(const struct Swarm3dRun *run, size_t *count);

/**
 * Write `trajectory.csv`, `metrics.json` and `metadata.json` into `dir`.
 *
 * # Safety
 * `run` must be a live handle; `dir` must be a nul-terminated string.
 */
enum Swarm3dStatus swarm3d_run_write(const struct Swarm3dRun *run, const char *dir);

/**
 * Volumetric quotient of the lattice's space-filling cell.
 */
double swarm3d_volumetric_quotient(enum Swarm3dLattice lattice);

/**
 * Smallest `r_c / r_s` that keeps grid neighbours in range.
 */
double swarm3d_min_connectivity_ratio(enum Swarm3dLattice lattice);

/**
 * Covering-set size of the box `[min, max]` with the lattice seeded at its centre.
 *
 * # Safety
 * `min_corner` and `max_corner` must point to three doubles each; `count` must be writable.
 */
enum Swarm3dStatus swarm3d_covering_set_count(enum Swarm3dLattice lattice,
                                              double r_s,
                                              const double *min_corner,
                                              const double *max_corner,
                                              size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWARM3D_H */
