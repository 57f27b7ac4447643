//! C ABI over `amqd-core`.
//!
//! Every entry point returns an [`AmqdStatus`] and writes results through
//! out-pointers. Objects cross the boundary as opaque handles that the
//! caller releases with the matching `*_free`. On failure a description is
//! kept per thread and can be read with [`amqd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use amqd_core::allocation::{self, AllocationPlan};
use amqd_core::channel::{self, CrosstalkMatrix, SubChannelSet};
use amqd_core::cvqft::{self, Direction};
use amqd_core::gaussian::ComplexGaussianVector;
use amqd_core::rates::{self, Dimension, EveGain, KeyRateVariant, NoiseMode};
use amqd_core::{AmqdError, Scenario};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmqdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidDimension = 2,
    InvalidParameter = 3,
    Domain = 4,
    Pole = 5,
    IndexOutOfRange = 6,
    LengthMismatch = 7,
    InvalidUtf8 = 8,
    Parse = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmqdComplex {
    pub re: f64,
    pub im: f64,
}

impl From<AmqdComplex> for Complex64 {
    fn from(z: AmqdComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for AmqdComplex {
    fn from(z: Complex64) -> Self {
        AmqdComplex { re: z.re, im: z.im }
    }
}

/// Homodyne key-rate variants, passed as plain integers.
pub const AMQD_ONEWAY_RR: u32 = 0;
pub const AMQD_ONEWAY_DR: u32 = 1;
pub const AMQD_TWOWAY_RR: u32 = 2;
pub const AMQD_TWOWAY_DR: u32 = 3;

/// Opaque sub-channel set.
pub struct AmqdChannelSet {
    inner: SubChannelSet,
}

/// Opaque allocation plan.
pub struct AmqdPlan {
    inner: AllocationPlan,
}

/// Opaque parsed scenario.
pub struct AmqdScenario {
    inner: Scenario,
}

/// Headline figures for a scenario.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AmqdReport {
    pub n: usize,
    pub selected_count: usize,
    pub rate_single: f64,
    pub rate_amqd: f64,
    pub rate_exact: f64,
    pub rate_constant: f64,
    pub capacity_complex: f64,
    pub snr: f64,
    pub oneway_rr_hom: f64,
    pub oneway_dr_hom: f64,
    pub twoway_rr_hom: f64,
    pub twoway_dr_hom: f64,
    pub excess_noise_single: f64,
    pub excess_noise_amqd: f64,
    pub kappa: f64,
    pub chi_single: f64,
    pub chi_amqd: f64,
    pub crosstalk_leak: f64,
    pub chi_amqd_crosstalk: f64,
    pub security_holds: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(AmqdStatus, String);

impl From<AmqdError> for Failure {
    fn from(e: AmqdError) -> Self {
        let status = match e {
            AmqdError::InvalidDimension(_) => AmqdStatus::InvalidDimension,
            AmqdError::InvalidParameter(_) => AmqdStatus::InvalidParameter,
            AmqdError::Domain(_) => AmqdStatus::Domain,
            AmqdError::Pole(_) => AmqdStatus::Pole,
            AmqdError::IndexOutOfRange { .. } => AmqdStatus::IndexOutOfRange,
            AmqdError::LengthMismatch { .. } => AmqdStatus::LengthMismatch,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AmqdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AmqdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AmqdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AmqdStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn variant(v: u32) -> Result<KeyRateVariant, Failure> {
    Ok(match v {
        AMQD_ONEWAY_RR => KeyRateVariant::OnewayRrHom,
        AMQD_ONEWAY_DR => KeyRateVariant::OnewayDrHom,
        AMQD_TWOWAY_RR => KeyRateVariant::TwowayRrHom,
        AMQD_TWOWAY_DR => KeyRateVariant::TwowayDrHom,
        other => {
            return Err(Failure(
                AmqdStatus::InvalidParameter,
                format!("unknown key-rate variant {other}"),
            ))
        }
    })
}

/// Description of the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn amqd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn amqd_status_name(status: AmqdStatus) -> *const c_char {
    let s: &'static CStr = match status {
        AmqdStatus::Ok => c"ok",
        AmqdStatus::NullPointer => c"null_pointer",
        AmqdStatus::InvalidDimension => c"invalid_dimension",
        AmqdStatus::InvalidParameter => c"invalid_parameter",
        AmqdStatus::Domain => c"domain",
        AmqdStatus::Pole => c"pole",
        AmqdStatus::IndexOutOfRange => c"index_out_of_range",
        AmqdStatus::LengthMismatch => c"length_mismatch",
        AmqdStatus::InvalidUtf8 => c"invalid_utf8",
        AmqdStatus::Parse => c"parse",
        AmqdStatus::BufferTooSmall => c"buffer_too_small",
        AmqdStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Unitary DFT of `n` values; `inverse` selects the inverse transform.
///
/// # Safety
/// `input_ptr` and `out` must each point to `n` elements.
#[no_mangle]
pub unsafe extern "C" fn amqd_dft(
    input_ptr: *const AmqdComplex,
    n: usize,
    inverse: bool,
    out: *mut AmqdComplex,
) -> AmqdStatus {
    guard(|| {
        let v: Vec<Complex64> = input(input_ptr, n, "input")?.iter().map(|&z| z.into()).collect();
        let dir = if inverse {
            Direction::Inverse
        } else {
            Direction::Forward
        };
        let r = cvqft::unitary_dft(&v, dir)?;
        for (o, z) in output(out, n, "out")?.iter_mut().zip(r) {
            *o = z.into();
        }
        Ok(())
    })
}

/// AWGN capacity, per complex dimension when `complex` is true.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amqd_capacity(
    variance: f64,
    gain_sq: f64,
    noise: f64,
    complex: bool,
    out: *mut f64,
) -> AmqdStatus {
    guard(|| {
        let dim = if complex { Dimension::Complex } else { Dimension::Real };
        write(out, rates::capacity(variance, gain_sq, noise, dim)?, "out")
    })
}

/// Homodyne key rate for one of the `AMQD_*` variants.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amqd_key_rate(which: u32, t: f64, w: f64, out: *mut f64) -> AmqdStatus {
    guard(|| write(out, rates::key_rate(variant(which)?, t, w)?, "out"))
}

/// Excess noise `(W - 1) g / (1 - g)` for Eve's squared gain `g`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amqd_excess_noise(w: f64, gain_sq: f64, out: *mut f64) -> AmqdStatus {
    guard(|| write(out, rates::excess_noise(w, EveGain::Single(gain_sq))?, "out"))
}

/// Ratio of single-carrier to multicarrier excess noise. `ordered` may be
/// null.
///
/// # Safety
/// `out` must be valid; `ordered` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn amqd_kappa(
    w: f64,
    single_gain_sq: f64,
    amqd_gain_sq: f64,
    out: *mut f64,
    ordered: *mut bool,
) -> AmqdStatus {
    guard(|| {
        let k = rates::kappa(w, single_gain_sq, amqd_gain_sq)?;
        if !ordered.is_null() {
            ordered.write(k.ordered);
        }
        write(out, k.value, "out")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amqd_thermal_entropy(w: f64, out: *mut f64) -> AmqdStatus {
    guard(|| write(out, rates::thermal_entropy(w)?, "out"))
}

/// Builds `n` sub-channels from their Fourier-domain gains and noise
/// variances, with a uniform crosstalk coefficient.
///
/// # Safety
/// `gains` and `noise` must point to `n` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn amqd_channel_set_new(
    gains: *const AmqdComplex,
    noise: *const f64,
    n: usize,
    crosstalk: f64,
    out: *mut *mut AmqdChannelSet,
) -> AmqdStatus {
    guard(|| {
        let g: Vec<Complex64> = input(gains, n, "gains")?.iter().map(|&z| z.into()).collect();
        let nv = input(noise, n, "noise")?.to_vec();
        let set = SubChannelSet::from_fourier_gains(g, nv, CrosstalkMatrix::uniform(n, crosstalk)?)?;
        write(out, Box::into_raw(Box::new(AmqdChannelSet { inner: set })), "out")
    })
}

/// # Safety
/// `set` must come from [`amqd_channel_set_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn amqd_channel_set_free(set: *mut AmqdChannelSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn amqd_channel_set_len(set: *const AmqdChannelSet) -> usize {
    set.as_ref().map_or(0, |s| s.inner.len())
}

/// Noise-to-gain ratios `nu_i` of every sub-channel.
///
/// # Safety
/// `set` must be live and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn amqd_channel_set_nu(set: *const AmqdChannelSet, out: *mut f64, len: usize) -> AmqdStatus {
    guard(|| {
        let s = &handle(set, "set")?.inner;
        if len < s.len() {
            return Err(Failure(
                AmqdStatus::BufferTooSmall,
                format!("need {} elements", s.len()),
            ));
        }
        let nu = allocation::nu_ratios(s, &s.gains_sq())?;
        output(out, nu.len(), "out")?.copy_from_slice(&nu);
        Ok(())
    })
}

/// Sends one block through the channels: encodes `z` (quadrature variance
/// `q`), applies the gains and noise, and writes the decoded output.
/// `tau` may be null.
///
/// # Safety
/// `set` must be live; `z` and `out` must hold the channel count.
#[no_mangle]
pub unsafe extern "C" fn amqd_transmit_block(
    set: *const AmqdChannelSet,
    z: *const AmqdComplex,
    q: f64,
    seed: u64,
    block_index: u64,
    out: *mut AmqdComplex,
    tau: *mut f64,
) -> AmqdStatus {
    guard(|| {
        let s = &handle(set, "set")?.inner;
        let n = s.len();
        let samples: Vec<Complex64> = input(z, n, "z")?.iter().map(|&v| v.into()).collect();
        let zv = ComplexGaussianVector::with_uniform(samples, q)?;
        let block = channel::transmit_block(&channel::encode(&zv)?, s, seed, block_index)?;
        let decoded = channel::decode(&block.received()?)?;
        for (o, v) in output(out, n, "out")?.iter_mut().zip(decoded.samples()) {
            *o = (*v).into();
        }
        if !tau.is_null() {
            tau.write(block.tau());
        }
        Ok(())
    })
}

/// Exact water-filling plan. Pass `budget < 0` or NaN to fill up to
/// `nu_eve` instead of spending a fixed budget.
///
/// # Safety
/// `nu` must hold `n` elements and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_exact(
    nu: *const f64,
    n: usize,
    nu_eve: f64,
    budget: f64,
    out: *mut *mut AmqdPlan,
) -> AmqdStatus {
    guard(|| {
        let budget = (budget >= 0.0).then_some(budget);
        let plan = allocation::exact_waterfill(input(nu, n, "nu")?, nu_eve, budget)?;
        write(out, Box::into_raw(Box::new(AmqdPlan { inner: plan })), "out")
    })
}

/// Constant-variance plan on the channels with `nu_i < nu_eve`.
///
/// # Safety
/// `nu` must hold `n` elements and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_constant(
    nu: *const f64,
    n: usize,
    nu_eve: f64,
    out: *mut *mut AmqdPlan,
) -> AmqdStatus {
    guard(|| {
        let plan = allocation::constant_allocation(input(nu, n, "nu")?, nu_eve)?;
        write(out, Box::into_raw(Box::new(AmqdPlan { inner: plan })), "out")
    })
}

/// # Safety
/// `plan` must come from an `amqd_plan_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_free(plan: *mut AmqdPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_len(plan: *const AmqdPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.inner.len())
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_selected_count(plan: *const AmqdPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.inner.selected.len())
}

/// Variance placed on each channel.
///
/// # Safety
/// `plan` must be live and `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_variances(plan: *const AmqdPlan, out: *mut f64, len: usize) -> AmqdStatus {
    guard(|| {
        let p = &handle(plan, "plan")?.inner;
        if len < p.len() {
            return Err(Failure(
                AmqdStatus::BufferTooSmall,
                format!("need {} elements", p.len()),
            ));
        }
        let v = p.assigned_variances();
        output(out, v.len(), "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Multicarrier rate of `plan` over squared gains `gains_sq` with one
/// aggregate noise variance.
///
/// # Safety
/// `plan` must be live, `gains_sq` must hold `n` elements, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn amqd_plan_rate(
    plan: *const AmqdPlan,
    gains_sq: *const f64,
    n: usize,
    noise: f64,
    out: *mut f64,
) -> AmqdStatus {
    guard(|| {
        let p = &handle(plan, "plan")?.inner;
        let r = rates::rate_amqd(p, input(gains_sq, n, "gains_sq")?, NoiseMode::Aggregate(noise))?;
        write(out, r, "out")
    })
}

/// Parses a scenario from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amqd_scenario_from_json(json: *const c_char, out: *mut *mut AmqdScenario) -> AmqdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(AmqdStatus::InvalidUtf8, e.to_string()))?;
        let s = Scenario::from_json(text).map_err(|e| Failure(AmqdStatus::Parse, e.to_string()))?;
        write(out, Box::into_raw(Box::new(AmqdScenario { inner: s })), "out")
    })
}

/// # Safety
/// `s` must come from [`amqd_scenario_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn amqd_scenario_free(s: *mut AmqdScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Writes the 64-character hex scenario hash plus a NUL into `buf`.
///
/// # Safety
/// `s` must be live and `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn amqd_scenario_hash(s: *const AmqdScenario, buf: *mut c_char, len: usize) -> AmqdStatus {
    guard(|| {
        let h = handle(s, "scenario")?.inner.hash();
        if len < h.len() + 1 {
            return Err(Failure(
                AmqdStatus::BufferTooSmall,
                format!("need {} bytes", h.len() + 1),
            ));
        }
        let out = output(buf, h.len() + 1, "buf")?;
        for (o, b) in out.iter_mut().zip(h.bytes().chain([0])) {
            *o = b as c_char;
        }
        Ok(())
    })
}

/// Evaluates the scenario and fills `report`.
///
/// # Safety
/// `s` must be live and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn amqd_scenario_evaluate(s: *const AmqdScenario, report: *mut AmqdReport) -> AmqdStatus {
    guard(|| {
        let sc = &handle(s, "scenario")?.inner;
        let f = sc.setup()?.full_report()?;
        let r = &f.report;
        let k = &r.key_rates;
        let out = AmqdReport {
            n: sc.n,
            selected_count: f.evaluation.plan().selected.len(),
            rate_single: r.rate_single,
            rate_amqd: r.rate_amqd,
            rate_exact: f.evaluation.rate_exact,
            rate_constant: f.evaluation.rate_constant,
            capacity_complex: r.capacity_complex,
            snr: r.snr,
            oneway_rr_hom: k.oneway_rr_hom,
            oneway_dr_hom: k.oneway_dr_hom,
            twoway_rr_hom: k.twoway_rr_hom,
            twoway_dr_hom: k.twoway_dr_hom,
            excess_noise_single: f.excess_noise_single,
            excess_noise_amqd: f.excess_noise_amqd,
            kappa: f.kappa.value,
            chi_single: f.ledger.chi_single,
            chi_amqd: f.ledger.chi_amqd,
            crosstalk_leak: f.ledger.crosstalk_leak,
            chi_amqd_crosstalk: f.ledger.chi_amqd_crosstalk,
            security_holds: f.verdict.all_hold(),
        };
        write(report, out, "report")
    })
}
