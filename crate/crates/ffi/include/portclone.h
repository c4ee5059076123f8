#ifndef PORTCLONE_H
#define PORTCLONE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_ARGUMENT = 2,
  PC_STATUS_DIMENSION_CAP = 3,
  PC_STATUS_NUMERICAL = 4,
  PC_STATUS_CHECKS_FAILED = 5,
  PC_STATUS_PANIC = 6,
  PC_STATUS_INTERNAL = 7,
} PcStatus;

/**
 * Opaque measurement returned by [`pc_povm_build`]. Outcome labels are
 * stored in their printed form.
 */
typedef struct PcPovm PcPovm;

/**
 * Opaque result of [`pc_fidelity`].
 */
typedef struct PcReport PcReport;

/**
 * Counts from one run of the verification suite.
 */
typedef struct PcVerifySummary {
  uint32_t checks;
  uint32_t failed;
  uint32_t skipped;
  /**
   * 1 when every exact check passed.
   */
  uint8_t exact_pass;
} PcVerifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *pc_version(void);

/**
 * Message for the last failing call on this thread, or null. The caller
 * owns the returned string.
 */
char *pc_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void pc_string_free(char *s);

/**
 * Sets the process-wide cap on operator dimension.
 */
enum PcStatus pc_set_dimension_cap(size_t cap);

/**
 * Evaluates `protocol` (e.g. `"std-pbtc"`) and stores a new report in
 * `*out`.
 *
 * # Safety
 * `protocol_name` must be a NUL-terminated string; `out` must be writable.
 */
enum PcStatus pc_fidelity(const char *protocol_name,
                          size_t d,
                          size_t n,
                          size_t m,
                          struct PcReport **out);

/**
 * # Safety
 * `report` must be null or come from [`pc_fidelity`].
 */
void pc_report_free(struct PcReport *report);

/**
 * Entanglement fidelity `F`; NaN for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
double pc_report_entanglement_fidelity(const struct PcReport *report);

/**
 * Average fidelity `f`; NaN for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
double pc_report_average_fidelity(const struct PcReport *report);

/**
 * # Safety
 * `report` must be null or a live report.
 */
double pc_report_delta_contribution(const struct PcReport *report);

/**
 * Number of per-clone fidelities held by the report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
size_t pc_report_clone_count(const struct PcReport *report);

/**
 * Average fidelity of clone `k` (1-based).
 *
 * # Safety
 * `report` must be a live report and `out` writable.
 */
enum PcStatus pc_report_clone_fidelity(const struct PcReport *report, size_t k, double *out);

/**
 * Report as JSON, or null on a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
char *pc_report_to_json(const struct PcReport *report);

/**
 * Builds the measurement used by `protocol` and stores it in `*out`.
 *
 * # Safety
 * `protocol_name` must be a NUL-terminated string; `out` must be writable.
 */
enum PcStatus pc_povm_build(const char *protocol_name,
                            size_t d,
                            size_t n,
                            size_t m,
                            struct PcPovm **out);

/**
 * # Safety
 * `povm` must be null or come from [`pc_povm_build`].
 */
void pc_povm_free(struct PcPovm *povm);

/**
 * Number of outcomes.
 *
 * # Safety
 * `povm` must be null or a live measurement.
 */
size_t pc_povm_len(const struct PcPovm *povm);

/**
 * Matrix size of every element.
 *
 * # Safety
 * `povm` must be null or a live measurement.
 */
size_t pc_povm_dim(const struct PcPovm *povm);

/**
 * Copies element `index` row-major into `re` and `im`, each of length
 * `len` which must equal `dim * dim`.
 *
 * # Safety
 * `povm` must be a live measurement; `re` and `im` must hold `len` doubles.
 */
enum PcStatus pc_povm_element(const struct PcPovm *povm,
                              size_t index,
                              double *re,
                              double *im,
                              size_t len);

/**
 * Printed label of outcome `index`, or null when out of range.
 *
 * # Safety
 * `povm` must be null or a live measurement.
 */
char *pc_povm_outcome(const struct PcPovm *povm, size_t index);

/**
 * Runs the verification suite. `summary` may be null; `json_out`, when
 * non-null, receives the full results as a caller-owned string. Returns
 * `ChecksFailed` when an exact check fails.
 *
 * # Safety
 * `summary` and `json_out` must be null or writable.
 */
enum PcStatus pc_verify(size_t d,
                        size_t n,
                        size_t m,
                        double tol,
                        uint8_t fault,
                        struct PcVerifySummary *summary,
                        char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PORTCLONE_H */
