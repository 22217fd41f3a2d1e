#ifndef GRNOBS_H
#define GRNOBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result codes shared by every function.
 */
typedef enum GrnobsStatus {
  GRNOBS_STATUS_OK = 0,
  GRNOBS_STATUS_NULL_POINTER = 1,
  GRNOBS_STATUS_INVALID_UTF8 = 2,
  GRNOBS_STATUS_CONFIG = 3,
  GRNOBS_STATUS_VALIDATION = 4,
  GRNOBS_STATUS_NOT_FEASIBLE = 5,
  GRNOBS_STATUS_SOLVER_FAILED = 6,
  GRNOBS_STATUS_SIMULATION = 7,
  GRNOBS_STATUS_BUFFER_TOO_SMALL = 8,
  GRNOBS_STATUS_INVALID_ARGUMENT = 9,
  GRNOBS_STATUS_PANIC = 10,
} GrnobsStatus;

/*
 Parsed and validated run configuration.
 */
typedef struct GrnobsConfig GrnobsConfig;

/*
 Observer gains with the margin of their certificate.
 */
typedef struct GrnobsGains GrnobsGains;

/*
 Result of a plant/observer simulation.
 */
typedef struct GrnobsTrajectory GrnobsTrajectory;

/*
 Copies the last error message of this thread into `buf` as a
 NUL-terminated string, truncating if needed. Returns the full message
 length excluding the terminator; `buf` may be null to query it.
 */
size_t grnobs_last_error_message(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *grnobs_version(void);

/*
 Parses a JSON run configuration. On success `*out` owns a new handle.
 */
enum GrnobsStatus grnobs_config_parse(const char *json, struct GrnobsConfig **out);

void grnobs_config_free(struct GrnobsConfig *config);

/*
 Gene count and output counts of a configuration.
 */
enum GrnobsStatus grnobs_config_dims(const struct GrnobsConfig *config,
                                     size_t *n,
                                     size_t *r_m,
                                     size_t *r_p);

/*
 Solves the observer conditions for `config`. Returns `NotFeasible` when
 the solver ends without a positive margin; `*out` is then null.
 */
enum GrnobsStatus grnobs_synthesize(const struct GrnobsConfig *config, struct GrnobsGains **out);

void grnobs_gains_free(struct GrnobsGains *gains);

/*
 Smallest constraint margin of the certificate behind the gains.
 */
enum GrnobsStatus grnobs_gains_margin(const struct GrnobsGains *gains, double *margin);

/*
 Copies `K1` row-major into `out`. `rows`/`cols` may be null; when
 given they receive the shape even if `len` is too small.
 */
enum GrnobsStatus grnobs_gains_k1(const struct GrnobsGains *gains,
                                  double *out,
                                  size_t len,
                                  size_t *rows,
                                  size_t *cols);

/*
 As [`grnobs_gains_k1`] for `K2`.
 */
enum GrnobsStatus grnobs_gains_k2(const struct GrnobsGains *gains,
                                  double *out,
                                  size_t len,
                                  size_t *rows,
                                  size_t *cols);

/*
 `K1 = P1^-1 W1` and `K2 = P2^-1 W2` from the diagonals of `P1`, `P2`
 (length `n`) and row-major `W1` (`n x r_m`), `W2` (`n x r_p`). The
 gains are written row-major into `k1` and `k2`.
 */
enum GrnobsStatus grnobs_extract_gains(size_t n,
                                       size_t r_m,
                                       size_t r_p,
                                       const double *p1_diag,
                                       const double *p2_diag,
                                       const double *w1,
                                       const double *w2,
                                       double *k1,
                                       double *k2);

/*
 Global sector slope of the shifted Hill function with coefficient
 `hill`.
 */
enum GrnobsStatus grnobs_sector_bound(uint32_t hill, double *xi);

/*
 Simulates plant and observer with the configuration's simulation
 block. `gains` may be null, in which case the configuration's gains are
 used, or synthesized if it has none.
 */
enum GrnobsStatus grnobs_simulate(const struct GrnobsConfig *config,
                                  const struct GrnobsGains *gains,
                                  struct GrnobsTrajectory **out);

void grnobs_trajectory_free(struct GrnobsTrajectory *trajectory);

/*
 Number of stored error-norm samples (one per time step plus the
 initial one).
 */
enum GrnobsStatus grnobs_trajectory_len(const struct GrnobsTrajectory *trajectory, size_t *len);

/*
 Copies the first `len` error-norm samples. Any of `t`, `err_m`,
 `err_p` may be null to skip that column.
 */
enum GrnobsStatus grnobs_trajectory_norms(const struct GrnobsTrajectory *trajectory,
                                          double *t,
                                          double *err_m,
                                          double *err_p,
                                          size_t len);

/*
 Final-to-initial ratios of the mRNA and protein error norms.
 */
enum GrnobsStatus grnobs_trajectory_decay_ratios(const struct GrnobsTrajectory *trajectory,
                                                 double *ratio_m,
                                                 double *ratio_p);

#endif  /* GRNOBS_H */
