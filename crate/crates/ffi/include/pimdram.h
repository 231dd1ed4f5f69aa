#ifndef PIMDRAM_H
#define PIMDRAM_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PIM_OK 0

#define PIM_NULL_POINTER -1

#define PIM_INVALID_UTF8 -2

#define PIM_BUFFER_TOO_SMALL -3

#define PIM_PANIC -4

#define PIM_BAD_OP -5

typedef enum PimOp {
  PIM_OP_NOT = 0,
  PIM_OP_AND = 1,
  PIM_OP_OR = 2,
  PIM_OP_NAND = 3,
  PIM_OP_NOR = 4,
  PIM_OP_XOR = 5,
  PIM_OP_XNOR = 6,
} PimOp;

/**
 * Opaque simulator: one rank with its timing and energy model.
 */
typedef struct PimSim PimSim;

typedef struct PimGeometry {
  uint32_t chips;
  uint32_t banks;
  uint32_t subarrays;
  uint32_t rows_per_subarray;
  /**
   * Rows per subarray open to data; the rest are reserved.
   */
  uint32_t data_rows;
  uint64_t row_bytes;
  uint32_t cacheline_bytes;
} PimGeometry;

/**
 * Cost of one call.
 */
typedef struct PimCost {
  double elapsed_ns;
  double energy_nj;
  uint64_t bus_bytes;
  uint64_t commands;
} PimCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *pim_last_error(void);

/**
 * Creates a simulator from a built-in profile name or config file path.
 * `overrides` may be null or hold `key = value` lines.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
int32_t pim_sim_new(const char *profile, const char *overrides, struct PimSim **out);

/**
 * Creates a simulator from full `key = value` config text.
 *
 * # Safety
 * `config` must be NUL-terminated; `out` must be writable.
 */
int32_t pim_sim_from_text(const char *config, struct PimSim **out);

/**
 * # Safety
 * `sim` must come from `pim_sim_new` and not be used afterwards. Null is
 * ignored.
 */
void pim_sim_free(struct PimSim *sim);

/**
 * # Safety
 * `sim` must be valid; `out` writable.
 */
int32_t pim_sim_geometry(const struct PimSim *sim, struct PimGeometry *out);

/**
 * Overwrites a row without cost. `words` holds `row_bytes / 8` words.
 *
 * # Safety
 * `sim` must be valid; `words` must point to `len` readable words.
 */
int32_t pim_sim_set_row(struct PimSim *sim,
                        uint32_t bank,
                        uint32_t subarray,
                        uint32_t row,
                        const uint64_t *words,
                        size_t len);

/**
 * Reads a row without cost into `out`, which holds `len` words.
 *
 * # Safety
 * `sim` must be valid; `out` must point to `len` writable words.
 */
int32_t pim_sim_get_row(const struct PimSim *sim,
                        uint32_t bank,
                        uint32_t subarray,
                        uint32_t row,
                        uint64_t *out,
                        size_t len);

/**
 * Runs a DRAM command trace. `cost` may be null.
 *
 * # Safety
 * `sim` must be valid; `trace` NUL-terminated.
 */
int32_t pim_sim_run_trace(struct PimSim *sim, const char *trace, struct PimCost *cost);

/**
 * Copies `src_row` to `dst_row` of one subarray with two back-to-back
 * activations. `cost` may be null.
 *
 * # Safety
 * `sim` must be valid.
 */
int32_t pim_rowclone_fpm(struct PimSim *sim,
                         uint32_t bank,
                         uint32_t subarray,
                         uint32_t src_row,
                         uint32_t dst_row,
                         struct PimCost *cost);

/**
 * `dk = op(di, dj)` in one subarray, `op` being a `PimOp` value; `dj`
 * is ignored for `Not`. `cost` may be null.
 *
 * # Safety
 * `sim` must be valid.
 */
int32_t pim_buddy_execute(struct PimSim *sim,
                          uint32_t op,
                          uint32_t bank,
                          uint32_t subarray,
                          uint32_t di,
                          uint32_t dj,
                          uint32_t dk,
                          struct PimCost *cost);

/**
 * Result throughput in GiB/s of `banks` banks running `op` back to back.
 *
 * # Safety
 * `sim` must be valid; `out` writable.
 */
int32_t pim_buddy_throughput(const struct PimSim *sim, uint32_t op, uint32_t banks, double *out);

/**
 * Opens a row, gathers `(pattern, column)` into `out` (one word per chip,
 * ascending value order) and closes the row. `cost` may be null.
 *
 * # Safety
 * `sim` must be valid; `out` must point to `len` writable words.
 */
int32_t pim_gsdram_gather(struct PimSim *sim,
                          uint32_t bank,
                          uint32_t subarray,
                          uint32_t row,
                          uint32_t pattern,
                          uint32_t column,
                          uint64_t *out,
                          size_t len,
                          struct PimCost *cost);

/**
 * 1 when every zero and constant row still holds its value, else 0.
 *
 * # Safety
 * `sim` must be valid; `out` writable.
 */
int32_t pim_sim_reserved_rows_intact(const struct PimSim *sim, uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIMDRAM_H */
