#ifndef NETSHIFT_H
#define NETSHIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Link-count distribution.
 */
typedef enum NsFamily {
  /**
   * Bernoulli for simple graphs, Poisson otherwise.
   */
  NS_FAMILY_AUTO = 0,
  NS_FAMILY_BERNOULLI = 1,
  NS_FAMILY_POISSON = 2,
} NsFamily;

/**
 * Result code of every fallible call.
 */
typedef enum NsStatus {
  NS_STATUS_OK = 0,
  NS_STATUS_NULL_POINTER = 1,
  NS_STATUS_INVALID_ARGUMENT = 2,
  NS_STATUS_INVALID_INPUT = 3,
  NS_STATUS_IO = 4,
  NS_STATUS_NUMERICAL = 5,
  /**
   * The output buffer is too small; the required length was written.
   */
  NS_STATUS_BUFFER_TOO_SMALL = 6,
  NS_STATUS_INTERNAL = 7,
} NsStatus;

/**
 * Fitted block model handle.
 */
typedef struct NsFit NsFit;

/**
 * Temporal network handle.
 */
typedef struct NsNetwork NsNetwork;

/**
 * Detection report handle.
 */
typedef struct NsReport NsReport;

/**
 * Engine settings shared by fitting and detection.
 */
typedef struct NsFitOptions {
  size_t k_min;
  size_t k_max;
  enum NsFamily family;
  bool degree_corrected;
  size_t restarts;
  double damping;
  double tolerance;
  size_t max_sweeps;
  size_t max_outer;
  double param_tolerance;
  uint64_t seed;
} NsFitOptions;

/**
 * Detector settings. `fit.family` is ignored: window models are Poisson.
 */
typedef struct NsDetectOptions {
  size_t window;
  double alpha;
  size_t bootstrap;
  bool active_nodes;
  struct NsFitOptions fit;
} NsDetectOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *ns_version(void);

/**
 * Message of the last error on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *ns_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ns_string_free(char *s);

/**
 * Default engine settings.
 */
struct NsFitOptions ns_fit_options_default(void);

/**
 * Default detector settings (window 16, alpha 0.05, 200 bootstrap samples).
 */
struct NsDetectOptions ns_detect_options_default(void);

/**
 * Loads an edge list (`t,u,v[,count]` records, `#` comments), picking up
 * `<path>.sidecar.json` when present.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum NsStatus ns_network_load(const char *path, struct NsNetwork **out);

/**
 * Builds a network from parallel arrays of `len` links. Snapshot `t[i]`
 * gains `count[i]` links between `u[i]` and `v[i]`; `count` may be null
 * for unit multiplicities.
 *
 * # Safety
 * `t`, `u`, `v` (and `count` when non-null) must point to `len` elements.
 */
enum NsStatus ns_network_from_edges(size_t node_count,
                                    size_t snapshot_count,
                                    bool directed,
                                    const size_t *t,
                                    const size_t *u,
                                    const size_t *v,
                                    const uint32_t *count,
                                    size_t len,
                                    struct NsNetwork **out);

/**
 * # Safety
 * `net` must be null or a live handle from this library.
 */
void ns_network_free(struct NsNetwork *net);

/**
 * Number of snapshots, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t ns_network_len(const struct NsNetwork *net);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t ns_network_node_count(const struct NsNetwork *net);

/**
 * Fits a block model to the sum of all snapshots, choosing `K` in
 * `k_min..=k_max` by description length.
 *
 * # Safety
 * `net` and `options` must be live; `out` must be writable.
 */
enum NsStatus ns_fit(const struct NsNetwork *net,
                     const struct NsFitOptions *options,
                     struct NsFit **out);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
void ns_fit_free(struct NsFit *fit);

/**
 * Number of blocks, or 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t ns_fit_k(const struct NsFit *fit);

/**
 * Complete-data log-likelihood at the MAP partition (NaN for null).
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double ns_fit_log_likelihood(const struct NsFit *fit);

/**
 * Description length in nats (NaN for null).
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double ns_fit_description_length(const struct NsFit *fit);

/**
 * Copies the MAP block of every node into `buf` (capacity `cap`). The node
 * count is always written to `len`; a short buffer yields `BufferTooSmall`.
 *
 * # Safety
 * `buf` must hold `cap` elements; `len` must be writable.
 */
enum NsStatus ns_fit_partition(const struct NsFit *fit, size_t *buf, size_t cap, size_t *len);

/**
 * The fit as a JSON object; release with `ns_string_free`.
 *
 * # Safety
 * `fit` must be live; `out` must be writable.
 */
enum NsStatus ns_fit_to_json(const struct NsFit *fit, char **out);

/**
 * Runs the sliding-window block-model detector.
 *
 * # Safety
 * `net` and `options` must be live; `out` must be writable.
 */
enum NsStatus ns_detect(const struct NsNetwork *net,
                        const struct NsDetectOptions *options,
                        struct NsReport **out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void ns_report_free(struct NsReport *report);

/**
 * Number of tested windows, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t ns_report_window_count(const struct NsReport *report);

/**
 * Copies the detected instants (ascending) into `buf`; see
 * `ns_fit_partition` for the buffer protocol.
 *
 * # Safety
 * `buf` must hold `cap` elements; `len` must be writable.
 */
enum NsStatus ns_report_detected(const struct NsReport *report,
                                 size_t *buf,
                                 size_t cap,
                                 size_t *len);

/**
 * The report as JSON; release with `ns_string_free`.
 *
 * # Safety
 * `report` must be live; `out` must be writable.
 */
enum NsStatus ns_report_to_json(const struct NsReport *report, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETSHIFT_H */
