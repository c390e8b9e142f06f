use std::ffi::{CStr, CString};
use std::ptr;

use gml_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = gml_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn hypothesis_roundtrip() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(gml_hypothesis_parse(cstr("2:11,00").as_ptr(), &mut h), GmlStatus::Ok);

        let mut s = ptr::null_mut();
        assert_eq!(gml_hypothesis_to_string(h, &mut s), GmlStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "2:00,11");
        gml_string_free(s);

        let mut depth = 0;
        assert_eq!(gml_hypothesis_depth(h, &mut depth), GmlStatus::Ok);
        assert_eq!(depth, 2);

        let (mut num, mut log2, mut value) = (0u64, 0u32, 0.0);
        assert_eq!(
            gml_hypothesis_premeasure(h, &mut num, &mut log2, &mut value),
            GmlStatus::Ok
        );
        assert_eq!((num, log2, value), (1, 1, 0.5));

        let mut y = false;
        assert_eq!(gml_hypothesis_evaluate(h, cstr("110").as_ptr(), &mut y), GmlStatus::Ok);
        assert!(y);
        assert_eq!(
            gml_hypothesis_evaluate(h, cstr("1").as_ptr(), &mut y),
            GmlStatus::Domain
        );
        assert!(last_error().contains("shorter"), "{}", last_error());

        let mut g = ptr::null_mut();
        assert_eq!(gml_hypothesis_parse(cstr("1:1").as_ptr(), &mut g), GmlStatus::Ok);
        let mut u = ptr::null_mut();
        assert_eq!(gml_hypothesis_combine(h, g, GmlSetOp::Union, &mut u), GmlStatus::Ok);
        assert_eq!(gml_hypothesis_to_string(u, &mut s), GmlStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "2:00,10,11");
        gml_string_free(s);

        gml_hypothesis_free(u);
        gml_hypothesis_free(g);
        gml_hypothesis_free(h);
        gml_hypothesis_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(gml_hypothesis_parse(cstr("2:0").as_ptr(), &mut h), GmlStatus::Parse);
        assert!(h.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(gml_hypothesis_parse(ptr::null(), &mut h), GmlStatus::NullPointer);
        assert_eq!(
            gml_hypothesis_parse(cstr("1:0").as_ptr(), ptr::null_mut()),
            GmlStatus::NullPointer
        );
        assert_eq!(gml_hypothesis_parse(cstr("30:0").as_ptr(), &mut h), GmlStatus::Parse);
        let deep = format!("21:{}", "0".repeat(21));
        assert_eq!(gml_hypothesis_parse(cstr(&deep).as_ptr(), &mut h), GmlStatus::Cap);

        let bad = [0xffu8, 0];
        assert_eq!(
            gml_hypothesis_parse(bad.as_ptr().cast(), &mut h),
            GmlStatus::InvalidUtf8
        );

        let mut s = ptr::null_mut();
        assert_eq!(
            gml_sample_read_jsonl(cstr("/nonexistent/data.jsonl").as_ptr(), &mut s),
            GmlStatus::Io
        );
        assert!(last_error().contains("/nonexistent/data.jsonl"));

        let mut x = 0.0;
        assert_eq!(
            gml_penalty(1, 100, 0.0, GmlWeights::Geometric, &mut x),
            GmlStatus::Domain
        );
        assert_eq!(gml_vc_union_bound(0, 1, &mut x), GmlStatus::Domain);
    }
}

#[test]
fn bounds_match_core() {
    unsafe {
        let mut p = 0.0;
        assert_eq!(gml_penalty(1, 200, 0.1, GmlWeights::Geometric, &mut p), GmlStatus::Ok);
        assert!((p - 0.112640732144658).abs() < 1e-12);
        assert_eq!(gml_penalty(1, 200, 0.1, GmlWeights::Harmonic, &mut p), GmlStatus::Ok);
        assert!((p - 0.110450519884976).abs() < 1e-12);

        let (mut e, mut sat) = (0.0, true);
        assert_eq!(gml_epsilon_n(1, 200, 0.1, &mut e, &mut sat), GmlStatus::Ok);
        assert!((e - 0.104666453970146).abs() < 1e-12);
        assert!(!sat);

        let mut k = 0u64;
        assert_eq!(gml_uc_sample_complexity(1, 0.1, 0.1, &mut k), GmlStatus::Ok);
        assert_eq!(k, 220);
        assert_eq!(gml_agnostic_sample_complexity(1, 0.1, 0.1, &mut k), GmlStatus::Ok);
        assert_eq!(k, 877);

        let mut v = 0.0;
        assert_eq!(gml_vc_union_bound(2, 2, &mut v), GmlStatus::Ok);
        assert!((v - 12.476649250079).abs() < 1e-9);
    }
}

#[test]
fn synth_and_select() {
    let spec = cstr(r#"{"bit_model":"uniform","target":"2:00,11","noise":"1/10","length":8}"#);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(gml_sample_synth(spec.as_ptr(), 2000, 7, &mut s), GmlStatus::Ok);
        let mut len = 0;
        assert_eq!(gml_sample_len(s, &mut len), GmlStatus::Ok);
        assert_eq!(len, 2000);

        let mut sel = ptr::null_mut();
        assert_eq!(
            gml_select(s, GmlRule::Gml, 0.1, GmlWeights::Geometric, 1, 4, 0.7, &mut sel),
            GmlStatus::Ok
        );
        let mut n = 0;
        assert_eq!(gml_selection_chosen_n(sel, &mut n), GmlStatus::Ok);
        assert_eq!(n, 2);

        let mut h = ptr::null_mut();
        assert_eq!(gml_selection_hypothesis(sel, &mut h), GmlStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(gml_hypothesis_to_string(h, &mut text), GmlStatus::Ok);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "2:00,11");
        gml_string_free(text);
        gml_hypothesis_free(h);

        let (mut errors, mut m, mut risk) = (0u64, 0u64, 0.0);
        assert_eq!(
            gml_selection_empirical_risk(sel, &mut errors, &mut m, &mut risk),
            GmlStatus::Ok
        );
        assert_eq!(m, 2000 / num_gcd(errors, 2000));
        assert!(risk > 0.05 && risk < 0.15);

        let (mut penalty, mut objective) = (0.0, 0.0);
        gml_selection_penalty(sel, &mut penalty);
        gml_selection_objective(sel, &mut objective);
        assert!((risk + penalty - objective).abs() < 1e-12);

        let mut tl = 0;
        assert_eq!(gml_selection_trace_len(sel, &mut tl), GmlStatus::Ok);
        assert_eq!(tl, 4);
        let mut entry = GmlTraceEntry::default();
        assert_eq!(gml_selection_trace_entry(sel, 1, &mut entry), GmlStatus::Ok);
        assert_eq!(entry.n, 2);
        assert_eq!(entry.objective, objective);
        assert_eq!(gml_selection_trace_entry(sel, 4, &mut entry), GmlStatus::OutOfRange);

        gml_selection_free(sel);

        assert_eq!(
            gml_select(s, GmlRule::Gml, 0.1, GmlWeights::Geometric, 3, 1, 0.7, &mut sel),
            GmlStatus::Domain
        );
        assert_eq!(
            gml_select(s, GmlRule::Holdout, 0.1, GmlWeights::Geometric, 0, 0, 0.7, &mut sel),
            GmlStatus::Ok
        );
        gml_selection_free(sel);
        gml_sample_free(s);
    }
}

fn num_gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

#[test]
fn bad_spec_is_config_error() {
    unsafe {
        let mut s = ptr::null_mut();
        let spec = cstr(r#"{"bit_model":"uniform","target":"2:00","noise":"1/2","length":8}"#);
        assert_eq!(gml_sample_synth(spec.as_ptr(), 10, 0, &mut s), GmlStatus::Config);
        assert!(last_error().contains("noise"));
        let spec = cstr(r#"{"bit_model":"uniform","extra":1}"#);
        assert_eq!(gml_sample_synth(spec.as_ptr(), 10, 0, &mut s), GmlStatus::Config);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(gml_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
