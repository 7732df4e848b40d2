use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rcpolar_ffi::*;

const REFERENCE_32: [usize; 32] = [
    0, 16, 8, 24, 2, 20, 26, 12, 10, 18, 4, 22, 25, 6, 13, 14, 1, 17, 28, 3, 5, 9, 29, 11, 19, 7, 21, 15, 23, 27, 30,
    31,
];

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { rcp_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

fn ga_code(n: u32, p: u32, k: usize) -> *mut RcpCode {
    let mut code = ptr::null_mut();
    let st = unsafe { rcp_code_new_ga(n, p, k, 3.5, 0, ptr::null(), 0, &mut code) };
    assert_eq!(st, RcpStatus::RcpOk, "{}", last_error());
    code
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(rcp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn encode_then_decode_noiseless() {
    let code = ga_code(7, 5, 40);
    unsafe {
        assert_eq!(rcp_code_len(code), 128);
        assert_eq!(rcp_code_k(code), 40);
        let msg: Vec<u8> = (0..40).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let mut cw = vec![0u8; 128];
        assert_eq!(rcp_code_encode(code, msg.as_ptr(), 40, cw.as_mut_ptr(), 128), RcpStatus::RcpOk);
        let llrs: Vec<f64> = cw.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
        let mut out = vec![9u8; 40];
        assert_eq!(rcp_code_decode(code, llrs.as_ptr(), 128, out.as_mut_ptr(), 40), RcpStatus::RcpOk);
        assert_eq!(out, msg);
        rcp_code_free(code);
    }
}

#[test]
fn explicit_information_set() {
    let info = [3usize, 5, 6, 7];
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(rcp_code_new(3, 1, info.as_ptr(), 4, &mut code), RcpStatus::RcpOk);
        let mut back = [0usize; 4];
        assert_eq!(rcp_code_info_set(code, back.as_mut_ptr(), 4), RcpStatus::RcpOk);
        assert_eq!(back, info);
        rcp_code_free(code);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(rcp_code_new(3, 1, ptr::null(), 2, &mut code), RcpStatus::RcpErrNull);
        assert!(last_error().contains("info"));
        let info = [9usize];
        assert_eq!(rcp_code_new(3, 1, info.as_ptr(), 1, &mut code), RcpStatus::RcpErrContract);
        assert!(last_error().starts_with("contract violation"));
        let mut t = 0.0;
        assert_eq!(rcp_throughput(0.5, 2, 0.1, 0.5, &mut t), RcpStatus::RcpErrContract);

        let c = ga_code(6, 5, 20);
        let bad = [2u8; 20];
        let mut cw = [0u8; 64];
        assert_eq!(rcp_code_encode(c, bad.as_ptr(), 20, cw.as_mut_ptr(), 64), RcpStatus::RcpErrContract);
        let mut rm = ptr::null_mut();
        assert_eq!(
            rcp_rate_matcher_new(c, REFERENCE_32.as_ptr(), 32, 8, 1, &mut rm),
            RcpStatus::RcpErrUnsupported
        );
        rcp_code_free(c);
        rcp_code_free(ptr::null_mut());
        rcp_rate_matcher_free(ptr::null_mut());
    }
}

#[test]
fn truncated_error_message_is_terminated() {
    let mut code = ptr::null_mut();
    unsafe {
        rcp_code_new(3, 1, ptr::null(), 2, &mut code);
        let mut buf = [0x7fu8; 5];
        let full = rcp_last_error_message(buf.as_mut_ptr().cast(), buf.len());
        assert!(full > 4);
        assert_eq!(buf[4], 0);
    }
}

#[test]
fn ppa_matches_reference_sequence() {
    let mut order = [0usize; 32];
    let st = unsafe { rcp_ppa(5, 11, 3.5, 1, order.as_mut_ptr(), 32) };
    assert_eq!(st, RcpStatus::RcpOk);
    assert_eq!(order, REFERENCE_32);
}

#[test]
fn ga_profile_is_monotone_under_puncturing() {
    let mut plain = [0.0f64; 16];
    let mut punct = [0.0f64; 16];
    let punctured = [0usize, 8];
    unsafe {
        assert_eq!(rcp_ga_profile(4, 2.0, 0, ptr::null(), 0, plain.as_mut_ptr(), 16), RcpStatus::RcpOk);
        assert_eq!(rcp_ga_profile(4, 2.0, 0, punctured.as_ptr(), 2, punct.as_mut_ptr(), 16), RcpStatus::RcpOk);
    }
    assert!(plain.iter().zip(&punct).all(|(a, b)| b >= a));
    assert_eq!(punct[0], 0.5);
}

#[test]
fn rate_match_round_trip() {
    let code = ga_code(8, 5, 88);
    let mut rm = ptr::null_mut();
    unsafe {
        assert_eq!(rcp_rate_matcher_new(code, REFERENCE_32.as_ptr(), 32, 2, 2, &mut rm), RcpStatus::RcpOk);
        let msg = [1u8; 88];
        let mut cw = [0u8; 256];
        rcp_code_encode(code, msg.as_ptr(), 88, cw.as_mut_ptr(), 256);
        let mut acc = [0.0f64; 256];
        for r in 1..=2 {
            let mut bits = [0u8; 128];
            assert_eq!(rcp_rate_match(rm, cw.as_ptr(), 256, 128, r, 1, bits.as_mut_ptr()), RcpStatus::RcpOk);
            let llrs: Vec<f64> = bits.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
            assert_eq!(rcp_de_rate_match(rm, llrs.as_ptr(), 128, r, 1, acc.as_mut_ptr(), 256), RcpStatus::RcpOk);
        }
        // Two IR transmissions of half the codeword each start 16 columns apart: everything is covered once.
        assert!(acc.iter().zip(&cw).all(|(a, &b)| *a == if b == 0 { 4.0 } else { -4.0 }));
        let mut out = [0u8; 88];
        assert_eq!(rcp_code_decode(code, acc.as_ptr(), 256, out.as_mut_ptr(), 88), RcpStatus::RcpOk);
        assert_eq!(out, msg);
        assert_eq!(rcp_rate_match(rm, cw.as_ptr(), 256, 128, 3, 1, [0u8; 128].as_mut_ptr()), RcpStatus::RcpErrContract);
        rcp_rate_matcher_free(rm);
        rcp_code_free(code);
    }
}

#[test]
fn throughput_formula() {
    let mut t = 0.0;
    assert_eq!(unsafe { rcp_throughput(11.0 / 32.0, 16, 0.0, 1.0, &mut t) }, RcpStatus::RcpOk);
    assert!((t - 1.375).abs() < 1e-15);
    assert_eq!(unsafe { rcp_throughput(0.5, 2, 0.0, 1.0, ptr::null_mut()) }, RcpStatus::RcpErrNull);
}

/// Compiles and runs a small C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("rcpolar.h").exists());
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("librcpolar_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C link test: static library or C compiler unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "rcpolar.h"
int main(void) {
    size_t order[32];
    if (rcp_ppa(5, 11, 3.5, 1, order, 32) != RCP_OK) return 1;
    if (order[0] != 0 || order[1] != 16 || order[31] != 31) return 2;
    RcpCode *code = NULL;
    if (rcp_code_new_ga(6, 5, 20, 3.5, 0, NULL, 0, &code) != RCP_OK) return 3;
    uint8_t msg[20] = {1, 0, 1, 1};
    uint8_t cw[64];
    double llr[64];
    uint8_t out[20];
    if (rcp_code_encode(code, msg, 20, cw, 64) != RCP_OK) return 4;
    for (int i = 0; i < 64; i++) llr[i] = cw[i] ? -5.0 : 5.0;
    if (rcp_code_decode(code, llr, 64, out, 20) != RCP_OK) return 5;
    for (int i = 0; i < 20; i++) if (out[i] != msg[i]) return 6;
    rcp_code_free(code);
    if (rcp_code_new(3, 1, NULL, 2, &code) != RCP_ERR_NULL) return 7;
    char buf[128];
    if (rcp_last_error_message(buf, sizeof buf) == 0) return 8;
    printf("ok %s\n", rcp_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
