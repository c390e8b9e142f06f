//! C ABI over `gml-core`.
//!
//! Every fallible call returns a [`GmlStatus`] and writes its result through
//! an out-pointer. On failure the message is kept per thread and can be read
//! with [`gml_last_error`]. Handles are opaque and owned by the caller, who
//! frees them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gml_core::bounds::{self, ClassSize, WeightScheme};
use gml_core::learner::{self, risk_to_f64, LearnerConfig, NRange, SelectionResult};
use gml_core::measure::premeasure;
use gml_core::synth::DistributionSpec;
use gml_core::{dataset, BitString, DepthCap, Error, Hypothesis, LabeledSample, SetOp};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    Io = 5,
    Domain = 6,
    Cap = 7,
    OutOfRange = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmlWeights {
    Harmonic = 0,
    Geometric = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmlRule {
    Gml = 0,
    UnionErm = 1,
    Holdout = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmlSetOp {
    Union = 0,
    Intersection = 1,
    Difference = 2,
    SymmetricDifference = 3,
}

/// One row of the per-n selection trace.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GmlTraceEntry {
    pub n: u32,
    pub best_empirical_risk: f64,
    pub penalty: f64,
    pub objective: f64,
}

/// Opaque hypothesis handle.
pub struct GmlHypothesis(Hypothesis);

/// Opaque labeled sample handle.
pub struct GmlSample(LabeledSample);

/// Opaque selection result handle.
pub struct GmlSelection(SelectionResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> GmlStatus {
    match err {
        Error::Parse(_) => GmlStatus::Parse,
        Error::Config(_) | Error::Json { .. } | Error::InvalidWeights(_) => GmlStatus::Config,
        Error::Io { .. } => GmlStatus::Io,
        Error::DepthCap { .. } | Error::CapExceeded { .. } | Error::ClassSizeOverflow { .. } => GmlStatus::Cap,
        _ => GmlStatus::Domain,
    }
}

fn fail(status: GmlStatus, msg: impl Into<String>) -> GmlStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), GmlStatus>) -> GmlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GmlStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(GmlStatus::Internal, "panic inside gml"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, GmlStatus>;
}

impl<T> OrStatus<T> for gml_core::Result<T> {
    fn or_status(self) -> Result<T, GmlStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, GmlStatus> {
    if p.is_null() {
        return Err(fail(GmlStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(GmlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, GmlStatus> {
    p.as_ref()
        .ok_or_else(|| fail(GmlStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), GmlStatus> {
    if out.is_null() {
        return Err(fail(GmlStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn weights(w: GmlWeights) -> WeightScheme {
    match w {
        GmlWeights::Harmonic => WeightScheme::Harmonic,
        GmlWeights::Geometric => WeightScheme::Geometric,
    }
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version; static, do not free.
#[no_mangle]
pub extern "C" fn gml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from a `gml_*` function that documents an owned string.
#[no_mangle]
pub unsafe extern "C" fn gml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `n:c1,c2,...`.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_parse(text: *const c_char, out: *mut *mut GmlHypothesis) -> GmlStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let h: Hypothesis = text.parse().or_status()?;
        DepthCap::from_env().and_then(|cap| cap.check(h.depth())).or_status()?;
        write_out(out, Box::into_raw(Box::new(GmlHypothesis(h))))
    })
}

/// # Safety
/// `h` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_free(h: *mut GmlHypothesis) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_depth(h: *const GmlHypothesis, out: *mut u32) -> GmlStatus {
    guard(|| write_out(out, ref_arg(h, "hypothesis")?.0.depth()))
}

/// Canonical text form. Free the result with [`gml_string_free`].
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_to_string(h: *const GmlHypothesis, out: *mut *mut c_char) -> GmlStatus {
    guard(|| write_out(out, owned_string(ref_arg(h, "hypothesis")?.0.to_string())))
}

/// Evaluates on a `0`/`1` instance string.
///
/// # Safety
/// `h` must be a live handle, `bits` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_evaluate(
    h: *const GmlHypothesis,
    bits: *const c_char,
    out: *mut bool,
) -> GmlStatus {
    guard(|| {
        let h = ref_arg(h, "hypothesis")?;
        let x: BitString = str_arg(bits, "bits")?.parse().or_status()?;
        write_out(out, h.0.evaluate(&x).or_status()?)
    })
}

/// Exact premeasure as `numerator / 2^log2_denominator`, plus its nearest double.
///
/// # Safety
/// `h` must be a live handle; all out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_premeasure(
    h: *const GmlHypothesis,
    numerator: *mut u64,
    log2_denominator: *mut u32,
    value: *mut f64,
) -> GmlStatus {
    guard(|| {
        let p = premeasure(&ref_arg(h, "hypothesis")?.0);
        // depth is at most 62, so the reduced numerator fits
        let num = u64::try_from(p.numerator()).map_err(|_| fail(GmlStatus::OutOfRange, "numerator overflow"))?;
        write_out(numerator, num)?;
        write_out(log2_denominator, p.log2_denominator())?;
        write_out(value, p.to_f64())
    })
}

/// Set operation on two hypotheses; the result lives at the deeper depth.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_hypothesis_combine(
    a: *const GmlHypothesis,
    b: *const GmlHypothesis,
    op: GmlSetOp,
    out: *mut *mut GmlHypothesis,
) -> GmlStatus {
    guard(|| {
        let a = ref_arg(a, "a")?;
        let b = ref_arg(b, "b")?;
        let op = match op {
            GmlSetOp::Union => SetOp::Union,
            GmlSetOp::Intersection => SetOp::Intersection,
            GmlSetOp::Difference => SetOp::Difference,
            GmlSetOp::SymmetricDifference => SetOp::SymmetricDifference,
        };
        write_out(out, Box::into_raw(Box::new(GmlHypothesis(a.0.combine(&b.0, op)))))
    })
}

/// Loads a JSON Lines dataset.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_sample_read_jsonl(path: *const c_char, out: *mut *mut GmlSample) -> GmlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let sample = dataset::read_jsonl(Path::new(path)).or_status()?;
        write_out(out, Box::into_raw(Box::new(GmlSample(sample))))
    })
}

/// Draws `m` examples from a distribution given as a JSON spec string.
///
/// # Safety
/// `spec_json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_sample_synth(
    spec_json: *const c_char,
    m: usize,
    seed: u64,
    out: *mut *mut GmlSample,
) -> GmlStatus {
    guard(|| {
        let spec = DistributionSpec::from_json(str_arg(spec_json, "spec_json")?).or_status()?;
        let sample = spec.build().and_then(|d| d.sample(m, seed)).or_status()?;
        write_out(out, Box::into_raw(Box::new(GmlSample(sample))))
    })
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gml_sample_len(s: *const GmlSample, out: *mut usize) -> GmlStatus {
    guard(|| write_out(out, ref_arg(s, "sample")?.0.len()))
}

/// # Safety
/// `s` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gml_sample_free(s: *mut GmlSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Selects a hypothesis over classes `n_min..=n_max`. Pass zero for both
/// bounds to use the default range for the sample size. `weights` and
/// `delta` are ignored by the unpenalized rules, `holdout_ratio` by all
/// but the holdout rule.
///
/// # Safety
/// `sample` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_select(
    sample: *const GmlSample,
    rule: GmlRule,
    delta: f64,
    weights_kind: GmlWeights,
    n_min: u32,
    n_max: u32,
    holdout_ratio: f64,
    out: *mut *mut GmlSelection,
) -> GmlStatus {
    guard(|| {
        let sample = &ref_arg(sample, "sample")?.0;
        let cap = DepthCap::from_env().or_status()?;
        let range = if n_min == 0 && n_max == 0 {
            NRange::default_for_sample(sample, cap)
        } else {
            NRange::new(n_min, n_max).or_status()?
        };
        let config = LearnerConfig {
            depth_cap: cap,
            ..LearnerConfig::default()
        };
        let result = match rule {
            GmlRule::Gml => learner::gml_select(sample, delta, &weights(weights_kind), range, &config),
            GmlRule::UnionErm => learner::unpenalized_union_erm(sample, range, &config),
            GmlRule::Holdout => learner::holdout_select(sample, holdout_ratio, range, &config),
        }
        .or_status()?;
        write_out(out, Box::into_raw(Box::new(GmlSelection(result))))
    })
}

/// # Safety
/// `s` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_free(s: *mut GmlSelection) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_chosen_n(s: *const GmlSelection, out: *mut u32) -> GmlStatus {
    guard(|| write_out(out, ref_arg(s, "selection")?.0.chosen_n))
}

/// Empirical risk of the chosen hypothesis as `errors / m` and as a double.
///
/// # Safety
/// `s` must be a live handle; all out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_empirical_risk(
    s: *const GmlSelection,
    errors: *mut u64,
    m: *mut u64,
    value: *mut f64,
) -> GmlStatus {
    guard(|| {
        let r = ref_arg(s, "selection")?.0.empirical_risk;
        write_out(errors, *r.numer())?;
        write_out(m, *r.denom())?;
        write_out(value, risk_to_f64(r))
    })
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_penalty(s: *const GmlSelection, out: *mut f64) -> GmlStatus {
    guard(|| write_out(out, ref_arg(s, "selection")?.0.penalty))
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_objective(s: *const GmlSelection, out: *mut f64) -> GmlStatus {
    guard(|| write_out(out, ref_arg(s, "selection")?.0.objective))
}

/// Copy of the chosen hypothesis; free it with [`gml_hypothesis_free`].
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_hypothesis(s: *const GmlSelection, out: *mut *mut GmlHypothesis) -> GmlStatus {
    guard(|| {
        let h = ref_arg(s, "selection")?.0.chosen.clone();
        write_out(out, Box::into_raw(Box::new(GmlHypothesis(h))))
    })
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_trace_len(s: *const GmlSelection, out: *mut usize) -> GmlStatus {
    guard(|| write_out(out, ref_arg(s, "selection")?.0.per_n_trace.len()))
}

/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_selection_trace_entry(
    s: *const GmlSelection,
    index: usize,
    out: *mut GmlTraceEntry,
) -> GmlStatus {
    guard(|| {
        let trace = &ref_arg(s, "selection")?.0.per_n_trace;
        let t = trace
            .get(index)
            .ok_or_else(|| fail(GmlStatus::OutOfRange, format!("trace index {index} >= {}", trace.len())))?;
        write_out(
            out,
            GmlTraceEntry {
                n: t.n,
                best_empirical_risk: risk_to_f64(t.best_empirical_risk),
                penalty: t.penalty,
                objective: t.objective,
            },
        )
    })
}

/// Complexity penalty for class `n` at sample size `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_penalty(n: u32, m: u64, delta: f64, weights_kind: GmlWeights, out: *mut f64) -> GmlStatus {
    guard(|| {
        write_out(
            out,
            bounds::gml_penalty(n, m, delta, &weights(weights_kind)).or_status()?,
        )
    })
}

/// Uniform-convergence accuracy of class `n`; `saturated` is set when it is at least 1.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_epsilon_n(n: u32, m: u64, delta: f64, out: *mut f64, saturated: *mut bool) -> GmlStatus {
    guard(|| {
        let e = bounds::epsilon_n(n, m, delta).or_status()?;
        write_out(out, e.value)?;
        write_out(saturated, e.saturated)
    })
}

/// Realizable-style uniform convergence sample size for class `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_uc_sample_complexity(n: u32, epsilon: f64, delta: f64, out: *mut u64) -> GmlStatus {
    guard(|| {
        write_out(
            out,
            bounds::uc_sample_complexity(ClassSize::of_level(n), epsilon, delta).or_status()?,
        )
    })
}

/// Agnostic sample size for class `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_agnostic_sample_complexity(n: u32, epsilon: f64, delta: f64, out: *mut u64) -> GmlStatus {
    guard(|| {
        write_out(
            out,
            bounds::agnostic_sample_complexity(ClassSize::of_level(n), epsilon, delta).or_status()?,
        )
    })
}

/// Sample size sufficient for class `n` under the weighted union bound.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_nul_sample_complexity(
    n: u32,
    epsilon: f64,
    delta: f64,
    weights_kind: GmlWeights,
    out: *mut u64,
) -> GmlStatus {
    guard(|| {
        write_out(
            out,
            bounds::nul_sample_complexity(n, epsilon, delta, &weights(weights_kind)).or_status()?,
        )
    })
}

/// VC dimension bound for a union of `r` classes of dimension at most `d_max`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gml_vc_union_bound(d_max: u32, r: u32, out: *mut f64) -> GmlStatus {
    guard(|| write_out(out, bounds::vc_union_bound(d_max, r).or_status()?))
}
