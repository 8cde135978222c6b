#ifndef LUTQEC_H
#define LUTQEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LqStatus {
  LQ_STATUS_OK = 0,
  LQ_STATUS_NULL_POINTER = 1,
  LQ_STATUS_INVALID_ARGUMENT = 2,
  LQ_STATUS_TABLE_TOO_LARGE = 3,
  LQ_STATUS_UNSUPPORTED = 4,
  LQ_STATUS_FORMAT = 5,
  LQ_STATUS_IO = 6,
  LQ_STATUS_ALREADY_FINISHED = 7,
  LQ_STATUS_PANIC = 8,
} LqStatus;

/**
 * Table representation requested from [`lq_table_build`].
 */
typedef enum LqTableKind {
  LQ_TABLE_KIND_DENSE = 0,
  LQ_TABLE_KIND_SPARSE = 1,
  LQ_TABLE_KIND_COMPRESSED = 2,
} LqTableKind;

typedef struct LqDecoder LqDecoder;

typedef struct LqLayout LqLayout;

typedef struct LqTable LqTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length without the terminator. `buf` may be null when `len` is 0.
 */
size_t lq_last_error(char *buf, size_t len);

enum LqStatus lq_layout_new(uint32_t distance, struct LqLayout **out_layout);

void lq_layout_free(struct LqLayout *layout);

uint32_t lq_layout_num_data(const struct LqLayout *layout);

/**
 * Number of stabilizers of `stab_type`, or 0 for a null handle or bad type.
 */
uint32_t lq_layout_num_stabilizers(const struct LqLayout *layout, uint8_t stab_type);

enum LqStatus lq_layout_syndrome(const struct LqLayout *layout,
                                 uint8_t stab_type,
                                 uint64_t errors,
                                 uint64_t *out_syndrome);

/**
 * Logical outcome of a final data measurement after applying the X-error
 * log. Writes 1 for a logical error.
 */
enum LqStatus lq_layout_logical_outcome(const struct LqLayout *layout,
                                        uint64_t data_measurement,
                                        uint64_t x_error_log,
                                        uint8_t *out_error);

/**
 * Builds a table for `rounds` layers of `stab_type` syndromes.
 *
 * `weight_cutoff` bounds the address weight for sparse and compressed
 * tables; 0 picks the default (full table for the frame scheme, 5
 * otherwise). Dense tables above 16 address bits need `force_full != 0`.
 */
enum LqStatus lq_table_build(const struct LqLayout *layout,
                             uint32_t rounds,
                             uint8_t stab_type,
                             enum LqTableKind kind,
                             uint32_t weight_cutoff,
                             uint8_t force_full,
                             struct LqTable **out_table);

/**
 * Compresses a dense or sparse table. `scheme` is 0 for the frame scheme
 * (dense d=3, m=2 only) and 1 for the rank scheme.
 */
enum LqStatus lq_table_compress(const struct LqTable *table,
                                uint8_t scheme,
                                uint32_t weight_cutoff,
                                struct LqTable **out_table);

enum LqStatus lq_table_load(const char *path, struct LqTable **out_table);

enum LqStatus lq_table_save(const struct LqTable *table, const char *path);

/**
 * Releases a table. Decoders created from it keep their own reference.
 */
void lq_table_free(struct LqTable *table);

uint32_t lq_table_address_bits(const struct LqTable *table);

/**
 * Stored payload size in bytes: packed entries for dense and sparse
 * tables, the compressed payload otherwise.
 */
uint64_t lq_table_payload_bytes(const struct LqTable *table);

/**
 * Looks up `address`. `out_found` is set to 0 when the table does not
 * store the address, in which case both outputs are zeroed.
 */
enum LqStatus lq_table_lookup(const struct LqTable *table,
                              uint64_t address,
                              uint64_t *out_correction,
                              uint64_t *out_state_delta,
                              uint8_t *out_found);

enum LqStatus lq_decoder_new(const struct LqTable *table, struct LqDecoder **out_decoder);

void lq_decoder_free(struct LqDecoder *decoder);

/**
 * Feeds one cycle's syndrome. `out_correction` (may be null) receives the
 * correction committed this cycle, 0 while the window is filling.
 */
enum LqStatus lq_decoder_step(struct LqDecoder *decoder,
                              uint64_t syndrome,
                              uint64_t *out_correction);

/**
 * Flushes the window. Pass `has_final != 0` with the syndrome computed
 * from the final data measurement for the Z-type decoder. Writes the
 * accumulated error log.
 */
enum LqStatus lq_decoder_finish(struct LqDecoder *decoder,
                                uint8_t has_final,
                                uint64_t final_syndrome,
                                uint64_t *out_error_log);

uint64_t lq_decoder_error_log(const struct LqDecoder *decoder);

/**
 * Number of lookups that missed the table so far.
 */
uint64_t lq_decoder_failures(const struct LqDecoder *decoder);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LUTQEC_H */
