//! C ABI over `rcpolar`.
//!
//! Conventions:
//! - every fallible function returns an [`RcpStatus`]; on failure a message
//!   is kept per thread and can be read with [`rcp_last_error_message`];
//! - objects are opaque handles created by `*_new` and released by `*_free`;
//! - bits are passed as one `uint8_t` (0 or 1) per bit, LLRs as `double`
//!   with positive values favouring bit 0;
//! - panics never cross the boundary; they are reported as `RCP_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rcpolar::channel::{LlrSoftVector, Modulation, SnrConvention};
use rcpolar::construction::{ga_profile, select_information_set};
use rcpolar::decoder::{CheckNode, ScDecoder};
use rcpolar::harq::throughput;
use rcpolar::polar::{encode, PolarCodeSpec};
use rcpolar::puncturing::{ppa, DesignChannel, PpaOptions, PuncturingSequence};
use rcpolar::rate_matching::{HarqMode, RateMatcher, TxPlan};
use rcpolar::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcpStatus {
    RcpOk = 0,
    RcpErrNull = -1,
    RcpErrContract = -2,
    RcpErrConfig = -3,
    RcpErrUnsupported = -4,
    RcpErrParse = -5,
    RcpErrIo = -6,
    RcpErrPanic = -99,
}

/// A polar code: length, base split and information set, plus decoder scratch.
pub struct RcpCode {
    spec: PolarCodeSpec,
    decoder: ScDecoder,
}

/// A rate matcher bound to one code length, sequence and modulation.
pub struct RcpRateMatcher {
    inner: RateMatcher,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RcpStatus {
    match e {
        Error::Contract(_) | Error::EnumerationBudget { .. } => RcpStatus::RcpErrContract,
        Error::Config { .. } => RcpStatus::RcpErrConfig,
        Error::Unsupported(_) => RcpStatus::RcpErrUnsupported,
        Error::Parse(_) => RcpStatus::RcpErrParse,
        Error::Io(_) | Error::Csv(_) => RcpStatus::RcpErrIo,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcpStatus::RcpOk,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RcpStatus::RcpErrNull
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RcpStatus::RcpErrPanic
        }
    }
}

/// Borrows `len` elements; a null pointer is allowed only when `len == 0`.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

fn bits_arg(bits: &[u8]) -> Result<(), Fail> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => Err(Error::Contract(format!("bit {i} has value {}, expected 0 or 1", bits[i])).into()),
        None => Ok(()),
    }
}

fn modulation_arg(order: u32) -> Result<Modulation, Fail> {
    match order {
        2 => Ok(Modulation::Bpsk),
        16 => Ok(Modulation::Qam16),
        64 => Ok(Modulation::Qam64),
        other => Err(Error::Unsupported(format!("modulation order {other} (use 2, 16 or 64)")).into()),
    }
}

fn mode_arg(mode: u32) -> Result<HarqMode, Fail> {
    match mode {
        0 => Ok(HarqMode::Cc),
        1 => Ok(HarqMode::Ir),
        other => Err(Error::Contract(format!("HARQ mode {other} (use 0 = CC, 1 = IR)")).into()),
    }
}

fn convention_arg(c: u32) -> Result<SnrConvention, Fail> {
    match c {
        0 => Ok(SnrConvention::PerRealDimension),
        1 => Ok(SnrConvention::PerComplexSymbol),
        other => Err(Error::Contract(format!("SNR convention {other} (use 0 = 1/σ², 1 = 1/(2σ²))")).into()),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length
/// excluding the terminator; 0 when there is no message.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rcp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a code of length `2^n` with base split `p` and the given 0-based
/// information set of `k` indices.
///
/// # Safety
/// `info` must be valid for `k` reads; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_new(
    n: u32,
    p: u32,
    info: *const usize,
    k: usize,
    out: *mut *mut RcpCode,
) -> RcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let info = slice(info, k, "info")?;
        let spec = PolarCodeSpec::new(n, p, info.iter().copied())?;
        let code = RcpCode { decoder: ScDecoder::new(n, CheckNode::Exact), spec };
        *out = Box::into_raw(Box::new(code));
        Ok(())
    })
}

/// Creates a code whose information set is the `k` most reliable indices
/// under Gaussian-approximation construction at `snr_db`, with the `m`
/// coded positions in `punctured` treated as never sent.
///
/// # Safety
/// `punctured` must be valid for `m` reads; `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_new_ga(
    n: u32,
    p: u32,
    k: usize,
    snr_db: f64,
    convention: u32,
    punctured: *const usize,
    m: usize,
    out: *mut *mut RcpCode,
) -> RcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let punctured = slice(punctured, m, "punctured")?;
        let all = PolarCodeSpec::all_information(n, p)?;
        let profile = ga_profile(&all, snr_db, convention_arg(convention)?, punctured)?;
        let spec = PolarCodeSpec::new(n, p, select_information_set(&profile, k)?)?;
        let code = RcpCode { decoder: ScDecoder::new(n, CheckNode::Exact), spec };
        *out = Box::into_raw(Box::new(code));
        Ok(())
    })
}

/// Releases a code; null is ignored.
///
/// # Safety
/// `code` must come from `rcp_code_new*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_free(code: *mut RcpCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Code length `N`, or 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_len(code: *const RcpCode) -> usize {
    code.as_ref().map_or(0, |c| c.spec.len())
}

/// Number of information bits, or 0 for a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_k(code: *const RcpCode) -> usize {
    code.as_ref().map_or(0, |c| c.spec.k())
}

/// Copies the 0-based information set (`k` entries) into `out`.
///
/// # Safety
/// `out` must be valid for `k` writes.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_info_set(code: *const RcpCode, out: *mut usize, k: usize) -> RcpStatus {
    guard(|| {
        let code = handle(code, "code")?;
        if k != code.spec.k() {
            return Err(Error::Contract(format!("buffer holds {k} entries, code has k = {}", code.spec.k())).into());
        }
        slice_mut(out, k, "out")?.copy_from_slice(code.spec.info_set());
        Ok(())
    })
}

/// Encodes `k` message bits into `N` codeword bits.
///
/// # Safety
/// `message` must be valid for `k` reads and `codeword` for `n_len` writes.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_encode(
    code: *const RcpCode,
    message: *const u8,
    k: usize,
    codeword: *mut u8,
    n_len: usize,
) -> RcpStatus {
    guard(|| {
        let code = handle(code, "code")?;
        let msg = slice(message, k, "message")?;
        bits_arg(msg)?;
        if n_len != code.spec.len() {
            return Err(Error::Contract(format!("codeword buffer {n_len} != N = {}", code.spec.len())).into());
        }
        let out = slice_mut(codeword, n_len, "codeword")?;
        let x = encode(&code.spec.embed_message(msg)?, &code.spec)?;
        out.copy_from_slice(x.as_slice());
        Ok(())
    })
}

/// Successive-cancellation decoding of `N` LLRs into `k` message bits.
///
/// # Safety
/// `llrs` must be valid for `n_len` reads and `message` for `k` writes. The
/// handle must not be used concurrently from another thread.
#[no_mangle]
pub unsafe extern "C" fn rcp_code_decode(
    code: *mut RcpCode,
    llrs: *const f64,
    n_len: usize,
    message: *mut u8,
    k: usize,
) -> RcpStatus {
    guard(|| {
        let code = code.as_mut().ok_or(Fail::Null("code"))?;
        let llrs = LlrSoftVector(slice(llrs, n_len, "llrs")?.to_vec());
        if k != code.spec.k() {
            return Err(Error::Contract(format!("message buffer {k} != k = {}", code.spec.k())).into());
        }
        let out = slice_mut(message, k, "message")?;
        let res = code.decoder.decode(&llrs, &code.spec)?;
        out.copy_from_slice(&res.info_bits);
        Ok(())
    })
}

/// Gaussian-approximation bit-channel error probabilities of the length-`2^n`
/// code with `m` punctured coded positions, written to `out` (`2^n` entries).
///
/// # Safety
/// `punctured` must be valid for `m` reads and `out` for `n_len` writes.
#[no_mangle]
pub unsafe extern "C" fn rcp_ga_profile(
    n: u32,
    snr_db: f64,
    convention: u32,
    punctured: *const usize,
    m: usize,
    out: *mut f64,
    n_len: usize,
) -> RcpStatus {
    guard(|| {
        let spec = PolarCodeSpec::all_information(n, n)?;
        if n_len != spec.len() {
            return Err(Error::Contract(format!("output buffer {n_len} != N = {}", spec.len())).into());
        }
        let punctured = slice(punctured, m, "punctured")?;
        let profile = ga_profile(&spec, snr_db, convention_arg(convention)?, punctured)?;
        slice_mut(out, n_len, "out")?.copy_from_slice(&profile.error_prob);
        Ok(())
    })
}

/// Progressive puncturing order of the length-`2^p` base code with `base_k`
/// information bits, designed by Gaussian approximation at `snr_db`.
///
/// # Safety
/// `out` must be valid for `len` writes, `len = 2^p`.
#[no_mangle]
pub unsafe extern "C" fn rcp_ppa(
    p: u32,
    base_k: usize,
    snr_db: f64,
    convention: u32,
    out: *mut usize,
    len: usize,
) -> RcpStatus {
    guard(|| {
        let design = DesignChannel::Ga { snr_db, convention: convention_arg(convention)? };
        let base = design.base_code(p, base_k)?;
        if len != base.len() {
            return Err(Error::Contract(format!("output buffer {len} != 2^p = {}", base.len())).into());
        }
        let res = ppa(&base, &design, &PpaOptions::default())?;
        slice_mut(out, len, "out")?.copy_from_slice(res.sequence.order());
        Ok(())
    })
}

/// Creates a rate matcher for `code` from a puncturing order of length `2^p`.
///
/// # Safety
/// `order` must be valid for `order_len` reads; `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn rcp_rate_matcher_new(
    code: *const RcpCode,
    order: *const usize,
    order_len: usize,
    modulation_order: u32,
    max_transmissions: usize,
    out: *mut *mut RcpRateMatcher,
) -> RcpStatus {
    guard(|| {
        let code = handle(code, "code")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let seq = PuncturingSequence::new(slice(order, order_len, "order")?.to_vec())?;
        let inner = RateMatcher::new(&code.spec, &seq, modulation_arg(modulation_order)?, max_transmissions)?;
        *out = Box::into_raw(Box::new(RcpRateMatcher { inner }));
        Ok(())
    })
}

/// Releases a rate matcher; null is ignored.
///
/// # Safety
/// `rm` must come from `rcp_rate_matcher_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rcp_rate_matcher_free(rm: *mut RcpRateMatcher) {
    if !rm.is_null() {
        drop(Box::from_raw(rm));
    }
}

/// Selects the `l` bits of transmission `r` (1-based) from an `N`-bit codeword.
///
/// # Safety
/// `codeword` must be valid for `n_len` reads and `out` for `l` writes.
#[no_mangle]
pub unsafe extern "C" fn rcp_rate_match(
    rm: *const RcpRateMatcher,
    codeword: *const u8,
    n_len: usize,
    l: usize,
    r: usize,
    mode: u32,
    out: *mut u8,
) -> RcpStatus {
    guard(|| {
        let rm = &handle(rm, "rm")?.inner;
        let cw = slice(codeword, n_len, "codeword")?;
        bits_arg(cw)?;
        let plan = TxPlan::new(l, r, mode_arg(mode)?);
        let bits = rm.rate_match(&rcpolar::polar::BitBlock::new(cw.to_vec())?, &plan)?;
        slice_mut(out, l, "out")?.copy_from_slice(bits.as_slice());
        Ok(())
    })
}

/// Adds the `l` LLRs of transmission `r` into the `N`-entry accumulator `acc`.
///
/// # Safety
/// `llrs` must be valid for `l` reads and `acc` for `n_len` reads and writes.
#[no_mangle]
pub unsafe extern "C" fn rcp_de_rate_match(
    rm: *const RcpRateMatcher,
    llrs: *const f64,
    l: usize,
    r: usize,
    mode: u32,
    acc: *mut f64,
    n_len: usize,
) -> RcpStatus {
    guard(|| {
        let rm = &handle(rm, "rm")?.inner;
        let llrs = LlrSoftVector(slice(llrs, l, "llrs")?.to_vec());
        let acc = slice_mut(acc, n_len, "acc")?;
        let mut buf = LlrSoftVector(acc.to_vec());
        rm.de_rate_match(&llrs, &TxPlan::new(l, r, mode_arg(mode)?), &mut buf)?;
        acc.copy_from_slice(buf.as_slice());
        Ok(())
    })
}

/// Normalised throughput `R·log2(M)·(1 − BLER)/t̄`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rcp_throughput(
    rate: f64,
    modulation_order: u32,
    bler: f64,
    t_bar: f64,
    out: *mut f64,
) -> RcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = throughput(rate, modulation_order as usize, bler, t_bar)?;
        Ok(())
    })
}
