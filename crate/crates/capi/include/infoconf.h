/* C bindings for the infoconf calibration toolkit. */

#ifndef INFOCONF_H
#define INFOCONF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every fallible entry point.
 */
typedef enum InfoconfStatus {
  INFOCONF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  INFOCONF_STATUS_NULL_POINTER = 1,
  /**
   * An input was outside the mathematical domain of the operation.
   */
  INFOCONF_STATUS_DOMAIN = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  INFOCONF_STATUS_UTF8 = 3,
  /**
   * JSON input did not parse as the expected structure.
   */
  INFOCONF_STATUS_PARSE = 4,
} InfoconfStatus;

/**
 * A loaded calibration lookup table. Opaque; create with
 * `infoconf_table_from_json`, release with `infoconf_table_free`.
 */
typedef struct InfoconfTable InfoconfTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns a static, null-terminated description of a status code.
 */
const char *infoconf_status_message(enum InfoconfStatus status);

/**
 * Sigmoid 1 / (1 + e^(-k / e)) for expectation e > 0.
 */
enum InfoconfStatus infoconf_sigmoid(double k, double e, double *out);

/**
 * Confidence force -e ln(1 - p) for p in [0, 1).
 */
enum InfoconfStatus infoconf_force_a(double p, double e, double *out);

/**
 * Counter-confidence force -e ln(p) for p in (0, 1].
 */
enum InfoconfStatus infoconf_force_b(double p, double e, double *out);

/**
 * Net force -e ln((1 - p) / p) for p in (0, 1).
 */
enum InfoconfStatus infoconf_net_force(double p, double e, double *out);

/**
 * Writes the two roots of p^2 + p - 1 = 0, the golden-ratio pair.
 */
enum InfoconfStatus infoconf_golden_roots(double *out_positive, double *out_negative);

/**
 * Inverse Lorentz factor sqrt(1 - (v/c)^2) for v/c in [0, 1).
 */
enum InfoconfStatus infoconf_lorentz_factor(double v_over_c, double *out);

/**
 * Perceived-performance correction 1 / (1 + p_observed).
 */
enum InfoconfStatus infoconf_perception_correction(double observed_perf, double *out);

/**
 * Neuron output value 1 / (1 + p_hat^(1 / i_c)).
 */
enum InfoconfStatus infoconf_output_value(double p_hat, double i_c, double *out);

/**
 * Parses a calibration-table JSON document (as written by the
 * `calibrate` command) into an opaque handle. On success the handle is
 * owned by the caller and must be released with `infoconf_table_free`.
 */
enum InfoconfStatus infoconf_table_from_json(const char *json, struct InfoconfTable **out);

/**
 * Maps a raw confidence through the table's monotone lookup;
 * out-of-range inputs clamp to the endpoint entries.
 */
enum InfoconfStatus infoconf_table_map(const struct InfoconfTable *table, double raw, double *out);

/**
 * Number of (bin, K_new) entries in the table.
 */
uintptr_t infoconf_table_entry_count(const struct InfoconfTable *table);

/**
 * Writes the table's recognition rate R, information content I_C, and
 * normalization expectation E_hat. Null out-pointers are skipped.
 */
enum InfoconfStatus infoconf_table_terms(const struct InfoconfTable *table,
                                         double *out_r,
                                         double *out_i_c,
                                         double *out_e_hat);

/**
 * Releases a table handle. Null is a no-op.
 */
void infoconf_table_free(struct InfoconfTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFOCONF_H */
