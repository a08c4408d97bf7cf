#ifndef WSDT_H
#define WSDT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum WsdtStatus {
  WSDT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  WSDT_STATUS_NULL_POINTER = 1,
  /**
   * Unknown name, bad length, or a string that is not UTF-8.
   */
  WSDT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed JSON.
   */
  WSDT_STATUS_PARSE_ERROR = 3,
  /**
   * Input values violate the network model (negative capacity, no peers, ...).
   */
  WSDT_STATUS_VALIDATION_ERROR = 4,
  /**
   * The allocator or simulator could not produce a result.
   */
  WSDT_STATUS_RUNTIME_ERROR = 5,
  /**
   * Output buffer shorter than required.
   */
  WSDT_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A panic was caught at the boundary.
   */
  WSDT_STATUS_PANIC = 7,
} WsdtStatus;

/**
 * Dynamic simulation mode.
 */
typedef enum WsdtMode {
  /**
   * Finished peers keep uploading.
   */
  WSDT_MODE_RETAIN = 0,
  /**
   * Finished peers leave.
   */
  WSDT_MODE_LEAVE = 1,
} WsdtMode;

/**
 * Opaque static allocation.
 */
typedef struct WsdtAllocation WsdtAllocation;

/**
 * Opaque validated network.
 */
typedef struct WsdtNetwork WsdtNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call into this library on the
 * same thread.
 */
const char *wsdt_last_error_message(void);

/**
 * Builds a network from per-peer arrays of length `n`. Uplinks larger
 * than the downlink are clamped to it.
 *
 * # Safety
 * The three arrays must hold `n` values; `out` must be writable.
 */
enum WsdtStatus wsdt_network_new(double source_uplink,
                                 double file_size,
                                 const double *uplinks,
                                 const double *downlinks,
                                 const double *weights,
                                 size_t n,
                                 struct WsdtNetwork **out);

/**
 * Parses a scenario document
 * (`{"source_uplink", "file_size", "peers": [{"uplink", "downlink", "weight"}]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WsdtStatus wsdt_network_from_json(const char *json, struct WsdtNetwork **out);

/**
 * Benchmark network: `case_name` is "I".."VI", `weights` a profile name
 * ("uniform", "linear", "two-class", "two-class-mild").
 *
 * # Safety
 * `case_name` and `weights` must be NUL-terminated strings; `out` must be
 * writable.
 */
enum WsdtStatus wsdt_network_generate_case(const char *case_name,
                                           size_t n,
                                           double source_uplink,
                                           const char *weights,
                                           double file_size,
                                           struct WsdtNetwork **out);

/**
 * # Safety
 * `network` must come from this library and not be freed twice. Null is
 * ignored.
 */
void wsdt_network_free(struct WsdtNetwork *network);

/**
 * Number of peers, or 0 for a null handle.
 *
 * # Safety
 * `network` must be null or a live handle.
 */
size_t wsdt_network_peer_count(const struct WsdtNetwork *network);

/**
 * Lower bound on the weighted sum download time. `rates_out` (optional)
 * receives the relaxed optimal rates; pass null and 0 to skip them. The
 * bound is `INFINITY` when a positive-weight peer cannot get any rate.
 *
 * # Safety
 * `network` must be a live handle, `value_out` writable, and `rates_out`
 * null or writable for `rates_len` values.
 */
enum WsdtStatus wsdt_lower_bound(const struct WsdtNetwork *network,
                                 double *value_out,
                                 double *rates_out,
                                 size_t rates_len);

/**
 * Runs a static allocator: "mutualcast", "extended", "depth2" or "routing".
 *
 * # Safety
 * `network` must be a live handle, `scheme` a NUL-terminated string and
 * `out` writable.
 */
enum WsdtStatus wsdt_allocate(const struct WsdtNetwork *network,
                              const char *scheme,
                              struct WsdtAllocation **out);

/**
 * # Safety
 * `allocation` must come from [`wsdt_allocate`] and not be freed twice.
 * Null is ignored.
 */
void wsdt_allocation_free(struct WsdtAllocation *allocation);

/**
 * Number of peers, or 0 for a null handle.
 *
 * # Safety
 * `allocation` must be null or a live handle.
 */
size_t wsdt_allocation_peer_count(const struct WsdtAllocation *allocation);

/**
 * Claimed flow rate of every peer (`n` values).
 *
 * # Safety
 * `allocation` must be a live handle and `out` writable for `len` values.
 */
enum WsdtStatus wsdt_allocation_flow_rates(const struct WsdtAllocation *allocation,
                                           double *out,
                                           size_t len);

/**
 * Rate matrix in row-major order (`n * n` values): entry `(i, j)` is the
 * rate from peer `i` to peer `j`, and `(i, i)` the source rate to `i`.
 *
 * # Safety
 * `allocation` must be a live handle and `out` writable for `len` values.
 */
enum WsdtStatus wsdt_allocation_rates(const struct WsdtAllocation *allocation,
                                      double *out,
                                      size_t len);

/**
 * Weighted sum download time of the allocation's flow rates.
 *
 * # Safety
 * `allocation` must be a live handle and `out` writable.
 */
enum WsdtStatus wsdt_allocation_wsdt(const struct WsdtAllocation *allocation, double *out);

/**
 * Runs the dynamic scheme without joins. `finish_times_out` (optional)
 * receives each peer's finish time.
 *
 * # Safety
 * `network` must be a live handle, `wsdt_out` writable, and
 * `finish_times_out` null or writable for `len` values.
 */
enum WsdtStatus wsdt_simulate_dynamic(const struct WsdtNetwork *network,
                                      enum WsdtMode mode,
                                      double *wsdt_out,
                                      double *finish_times_out,
                                      size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WSDT_H */
