#ifndef RCPOLAR_H
#define RCPOLAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum RcpStatus {
  RCP_OK = 0,
  RCP_ERR_NULL = -1,
  RCP_ERR_CONTRACT = -2,
  RCP_ERR_CONFIG = -3,
  RCP_ERR_UNSUPPORTED = -4,
  RCP_ERR_PARSE = -5,
  RCP_ERR_IO = -6,
  RCP_ERR_PANIC = -99,
} RcpStatus;

// A polar code: length, base split and information set, plus decoder scratch.
typedef struct RcpCode RcpCode;

// A rate matcher bound to one code length, sequence and modulation.
typedef struct RcpRateMatcher RcpRateMatcher;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rcp_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// always NUL-terminated when `len > 0`). Returns the full message length
// excluding the terminator; 0 when there is no message.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t rcp_last_error_message(char *buf, size_t len);

// Creates a code of length `2^n` with base split `p` and the given 0-based
// information set of `k` indices.
//
// # Safety
// `info` must be valid for `k` reads; `out` must be valid for one write.
enum RcpStatus rcp_code_new(uint32_t n,
                            uint32_t p,
                            const size_t *info,
                            size_t k,
                            struct RcpCode **out);

// Creates a code whose information set is the `k` most reliable indices
// under Gaussian-approximation construction at `snr_db`, with the `m`
// coded positions in `punctured` treated as never sent.
//
// # Safety
// `punctured` must be valid for `m` reads; `out` must be valid for one write.
enum RcpStatus rcp_code_new_ga(uint32_t n,
                               uint32_t p,
                               size_t k,
                               double snr_db,
                               uint32_t convention,
                               const size_t *punctured,
                               size_t m,
                               struct RcpCode **out);

// Releases a code; null is ignored.
//
// # Safety
// `code` must come from `rcp_code_new*` and not be used afterwards.
void rcp_code_free(struct RcpCode *code);

// Code length `N`, or 0 for a null handle.
//
// # Safety
// `code` must be null or a live handle.
size_t rcp_code_len(const struct RcpCode *code);

// Number of information bits, or 0 for a null handle.
//
// # Safety
// `code` must be null or a live handle.
size_t rcp_code_k(const struct RcpCode *code);

// Copies the 0-based information set (`k` entries) into `out`.
//
// # Safety
// `out` must be valid for `k` writes.
enum RcpStatus rcp_code_info_set(const struct RcpCode *code, size_t *out, size_t k);

// Encodes `k` message bits into `N` codeword bits.
//
// # Safety
// `message` must be valid for `k` reads and `codeword` for `n_len` writes.
enum RcpStatus rcp_code_encode(const struct RcpCode *code,
                               const uint8_t *message,
                               size_t k,
                               uint8_t *codeword,
                               size_t n_len);

// Successive-cancellation decoding of `N` LLRs into `k` message bits.
//
// # Safety
// `llrs` must be valid for `n_len` reads and `message` for `k` writes. The
// handle must not be used concurrently from another thread.
enum RcpStatus rcp_code_decode(struct RcpCode *code,
                               const double *llrs,
                               size_t n_len,
                               uint8_t *message,
                               size_t k);

// Gaussian-approximation bit-channel error probabilities of the length-`2^n`
// code with `m` punctured coded positions, written to `out` (`2^n` entries).
//
// # Safety
// `punctured` must be valid for `m` reads and `out` for `n_len` writes.
enum RcpStatus rcp_ga_profile(uint32_t n,
                              double snr_db,
                              uint32_t convention,
                              const size_t *punctured,
                              size_t m,
                              double *out,
                              size_t n_len);

// Progressive puncturing order of the length-`2^p` base code with `base_k`
// information bits, designed by Gaussian approximation at `snr_db`.
//
// # Safety
// `out` must be valid for `len` writes, `len = 2^p`.
enum RcpStatus rcp_ppa(uint32_t p,
                       size_t base_k,
                       double snr_db,
                       uint32_t convention,
                       size_t *out,
                       size_t len);

// Creates a rate matcher for `code` from a puncturing order of length `2^p`.
//
// # Safety
// `order` must be valid for `order_len` reads; `out` for one write.
enum RcpStatus rcp_rate_matcher_new(const struct RcpCode *code,
                                    const size_t *order,
                                    size_t order_len,
                                    uint32_t modulation_order,
                                    size_t max_transmissions,
                                    struct RcpRateMatcher **out);

// Releases a rate matcher; null is ignored.
//
// # Safety
// `rm` must come from `rcp_rate_matcher_new` and not be used afterwards.
void rcp_rate_matcher_free(struct RcpRateMatcher *rm);

// Selects the `l` bits of transmission `r` (1-based) from an `N`-bit codeword.
//
// # Safety
// `codeword` must be valid for `n_len` reads and `out` for `l` writes.
enum RcpStatus rcp_rate_match(const struct RcpRateMatcher *rm,
                              const uint8_t *codeword,
                              size_t n_len,
                              size_t l,
                              size_t r,
                              uint32_t mode,
                              uint8_t *out);

// Adds the `l` LLRs of transmission `r` into the `N`-entry accumulator `acc`.
//
// # Safety
// `llrs` must be valid for `l` reads and `acc` for `n_len` reads and writes.
enum RcpStatus rcp_de_rate_match(const struct RcpRateMatcher *rm,
                                 const double *llrs,
                                 size_t l,
                                 size_t r,
                                 uint32_t mode,
                                 double *acc,
                                 size_t n_len);

// Normalised throughput `R·log2(M)·(1 − BLER)/t̄`.
//
// # Safety
// `out` must be valid for one write.
enum RcpStatus rcp_throughput(double rate,
                              uint32_t modulation_order,
                              double bler,
                              double t_bar,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCPOLAR_H */
