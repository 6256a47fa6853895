#ifndef SMD_H
#define SMD_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdint.h>
#include <stddef.h>

typedef enum SmdStatus {
  SMD_STATUS_OK = 0,
  SMD_STATUS_NULL_POINTER = 1,
  SMD_STATUS_DOMAIN = 2,
  SMD_STATUS_DIVERGENT_INTEGRAL = 3,
  SMD_STATUS_CONVERGENCE_FAILURE = 4,
  SMD_STATUS_OVERFLOW = 5,
  SMD_STATUS_PARSE = 6,
  SMD_STATUS_IO = 7,
  SMD_STATUS_PANIC = 8,
} SmdStatus;

/**
 * An evaluated error table.
 */
typedef struct SmdTable SmdTable;

/**
 * A target function `g`.
 */
typedef struct SmdTarget SmdTarget;

typedef struct SmdOperatorValue {
  double value;
  uint64_t series_terms_used;
  uint64_t last_index;
  double tail_mass;
  double tail_bound;
  double inner_integral_error;
} SmdOperatorValue;

/**
 * One table cell; `ok` is 0 when the cell failed to evaluate and the
 * numeric fields are NaN.
 */
typedef struct SmdTableCell {
  double x;
  uint64_t n;
  double u_n;
  double operator_value;
  double g_value;
  double abs_error;
  int32_t ok;
} SmdTableCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *smd_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *smd_last_error(void);

/**
 * Looks up a built-in target (`x2e2x`, `negx3e5x`, `one`, `t`, `t2`,
 * `expneg`, `abs1`) or parses a `coeff:power:rate[;...]` literal.
 */
enum SmdStatus smd_target_parse(const char *spec, struct SmdTarget **out);

/**
 * `Σ_i coeffs[i] t^powers[i] e^{rates[i] t}`.
 */
enum SmdStatus smd_target_exp_poly(const double *coeffs,
                                   const uint32_t *powers,
                                   const double *rates,
                                   size_t len,
                                   struct SmdTarget **out);

/**
 * Releases a target; null is ignored.
 */
void smd_target_free(struct SmdTarget *target);

enum SmdStatus smd_target_eval(const struct SmdTarget *target, double t, double *out);

/**
 * `B*(g;x)`; `eps <= 0` selects the default tail epsilon.
 */
enum SmdStatus smd_apply(const struct SmdTarget *target,
                         double u,
                         double x,
                         double eps,
                         struct SmdOperatorValue *out);

/**
 * `B*(g;x)` with the series cut after index `j_max`.
 */
enum SmdStatus smd_apply_truncated(const struct SmdTarget *target,
                                   double u,
                                   double x,
                                   uint64_t j_max,
                                   struct SmdOperatorValue *out);

/**
 * `s_{u,j}(x) = e^{-ux} (ux)^j / j!`.
 */
enum SmdStatus smd_szasz_weight(double u, uint64_t j, double x, double *out);

enum SmdStatus smd_truncation_index(double u, double x, double eps, uint64_t *out);

enum SmdStatus smd_kernel_value(double u, double x, double t, double *out);

enum SmdStatus smd_kernel_cdf(double u, double x, double y, double *out);

/**
 * `B*(t^m; x)`.
 */
enum SmdStatus smd_raw_moment(double u, double x, uint32_t m, double *out);

/**
 * `B*((t − x)^m; x)`.
 */
enum SmdStatus smd_central_moment(double u, double x, uint32_t m, double *out);

/**
 * `u_n` for a rule written as `n`, `n1.5`, `n2`, `n^p` or
 * `explicit:u1,u2,...`.
 */
enum SmdStatus smd_sequence_value(const char *rule, uint64_t n, double *out);

/**
 * Evaluates `|B*(g;x) − g(x)|` on the grid `xs × ns` at `u = u_n`.
 * Cells are stored row-major in `(x, n)`.
 */
enum SmdStatus smd_table_new(const struct SmdTarget *target,
                             const char *rule,
                             const double *xs,
                             size_t xs_len,
                             const uint64_t *ns,
                             size_t ns_len,
                             double eps,
                             struct SmdTable **out);

/**
 * Number of cells; 0 for null.
 */
size_t smd_table_len(const struct SmdTable *table);

enum SmdStatus smd_table_cell(const struct SmdTable *table, size_t index, struct SmdTableCell *out);

/**
 * Writes the table as CSV (`x,n,u_n,operator_value,g_value,abs_error`).
 */
enum SmdStatus smd_table_write_csv(const struct SmdTable *table, const char *path);

/**
 * Releases a table; null is ignored.
 */
void smd_table_free(struct SmdTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMD_H */
