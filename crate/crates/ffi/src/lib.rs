//! C ABI for the simulator.
//!
//! Every fallible function returns an [`StStatus`]; on failure the message is
//! available from [`st_last_error_message`] on the same thread. Kraus sets
//! are opaque handles owned by the caller and released with [`st_kraus_free`].
//! Matrices are copied out row-major into caller buffers, basis ordered
//! m = s .. -s per center, centers 1 ⊗ 2 ⊗ 3.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use scatter_teleport::protocol::{average_performance, ProtocolTemplate, Sampler, Teleporter};
use scatter_teleport::scatter::{solve_scattering, verify_closure, Dispersion, KrausSet, ScatterConfig};
use scatter_teleport::spinops::{CVector, CouplingKind, PureState, Spin};
use scatter_teleport::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Numerical = 4,
    DetectionImpossible = 5,
    Panic = 6,
}

/// Values for the `kind` fields.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StCouplingKind {
    Heisenberg = 0,
    Xy = 1,
}

/// Values for the `dispersion` fields.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StDispersion {
    Quadratic = 0,
    Linear = 1,
}

/// Values for the `sampler` argument.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StSampler {
    BlochAngles = 0,
    QutritAngles = 1,
    HaarUniform = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StComplex {
    pub re: f64,
    pub im: f64,
}

/// One scattering event in physical units.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct StScatterConfig {
    /// 2s, from 1 to 5.
    pub twice_spin: u32,
    /// An `StCouplingKind` value.
    pub kind: u32,
    /// An `StDispersion` value.
    pub dispersion: u32,
    pub couplings: [f64; 3],
    pub wavevector: f64,
    pub velocity: f64,
    pub d12: f64,
    pub d23: f64,
}

/// Protocol with symmetric couplings, in dimensionless units.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct StProtocolParams {
    pub twice_spin: u32,
    pub kind: u32,
    pub dispersion: u32,
    /// J2 = J3 during step (b).
    pub jb_over_v: f64,
    /// J1 = J2 during step (c).
    pub jc_over_v: f64,
    pub n23: u32,
    pub n12: u32,
    pub kd12_over_pi: f64,
    pub kd23_over_pi: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct StProtocolOutcome {
    pub fidelity: f64,
    pub success_probability: f64,
    pub stage_probabilities: [f64; 2],
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct StPerformance {
    pub mean_fidelity: f64,
    pub mean_probability: f64,
    pub stderr_fidelity: f64,
    pub stderr_probability: f64,
    pub samples: u64,
    pub failures: u64,
}

/// Opaque handle to a solved Kraus set.
pub struct StKrausSet {
    inner: KrausSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> StStatus {
    match e {
        Error::DetectionImpossible { .. } => StStatus::DetectionImpossible,
        Error::Numerical(_) => StStatus::Numerical,
        _ => StStatus::InvalidArgument,
    }
}

struct Fail(StStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Fail {
    Fail(StStatus::InvalidArgument, message.into())
}

fn null(name: &str) -> Fail {
    Fail(StStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `f`, records any failure and converts panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            StStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            StStatus::Panic
        }
    }
}

fn spin_of(twice: u32) -> Result<Spin, Fail> {
    Ok(Spin::from_twice(twice)?)
}

fn kind_of(v: u32) -> Result<CouplingKind, Fail> {
    match v {
        0 => Ok(CouplingKind::Heisenberg),
        1 => Ok(CouplingKind::Xy),
        _ => Err(invalid(format!("unknown coupling kind {v}"))),
    }
}

fn dispersion_of(v: u32) -> Result<Dispersion, Fail> {
    match v {
        0 => Ok(Dispersion::Quadratic),
        1 => Ok(Dispersion::Linear),
        _ => Err(invalid(format!("unknown dispersion {v}"))),
    }
}

fn sampler_of(v: u32) -> Result<Sampler, Fail> {
    match v {
        0 => Ok(Sampler::BlochAngles),
        1 => Ok(Sampler::QutritAngles),
        2 => Ok(Sampler::HaarUniform),
        _ => Err(invalid(format!("unknown sampler {v}"))),
    }
}

fn template_of(p: &StProtocolParams) -> Result<ProtocolTemplate, Fail> {
    let spin = spin_of(p.twice_spin)?;
    let kind = kind_of(p.kind)?;
    let disp = dispersion_of(p.dispersion)?;
    for (name, x) in [("kd12_over_pi", p.kd12_over_pi), ("kd23_over_pi", p.kd23_over_pi)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(invalid(format!("`{name}` must be > 0")));
        }
    }
    let b = ScatterConfig::dimensionless(spin, kind, disp, [0.0, p.jb_over_v, p.jb_over_v], p.kd12_over_pi, p.kd23_over_pi);
    let c = ScatterConfig::dimensionless(spin, kind, disp, [p.jc_over_v, p.jc_over_v, 0.0], p.kd12_over_pi, p.kd23_over_pi);
    Ok(ProtocolTemplate::new(b, c, p.n23 as usize, p.n12 as usize)?)
}

/// Solves one scattering event. On success `*out` receives a new handle.
///
/// # Safety
/// `config` must point to a valid `StScatterConfig`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_kraus_solve(config: *const StScatterConfig, out: *mut *mut StKrausSet) -> StStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: both pointers checked non-null; validity is the caller's contract.
        let c = unsafe { *config };
        let cfg = ScatterConfig {
            spin: spin_of(c.twice_spin)?,
            kind: kind_of(c.kind)?,
            dispersion: dispersion_of(c.dispersion)?,
            couplings: c.couplings,
            wavevector: c.wavevector,
            velocity: c.velocity,
            d12: c.d12,
            d23: c.d23,
        };
        let ks = solve_scattering(&cfg)?;
        let handle = Box::into_raw(Box::new(StKrausSet { inner: ks }));
        unsafe { *out = handle };
        Ok(())
    })
}

/// Releases a handle from [`st_kraus_solve`]. Null is ignored.
///
/// # Safety
/// `ks` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_kraus_free(ks: *mut StKrausSet) {
    if !ks.is_null() {
        // SAFETY: the handle came from Box::into_raw in st_kraus_solve.
        drop(unsafe { Box::from_raw(ks) });
    }
}

/// Dimension (2s+1)^3 of the centers' space, or 0 for a null handle.
///
/// # Safety
/// `ks` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_kraus_dim(ks: *const StKrausSet) -> usize {
    // SAFETY: null checked by as_ref; liveness is the caller's contract.
    unsafe { ks.as_ref() }.map_or(0, |k| k.inner.centers_dim())
}

/// Max-norm of Σ (T†T + R†R) - 1 over the left-incidence isometry.
///
/// # Safety
/// `ks` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_kraus_closure_residual(ks: *const StKrausSet, out: *mut f64) -> StStatus {
    guard(|| {
        // SAFETY: null checked; liveness is the caller's contract.
        let k = unsafe { ks.as_ref() }.ok_or_else(|| null("ks"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = verify_closure(&k.inner) };
        Ok(())
    })
}

unsafe fn copy_block(
    ks: *const StKrausSet,
    m_in: u32,
    m_out: u32,
    buf: *mut StComplex,
    len: usize,
    pick: fn(&KrausSet, usize, usize) -> &scatter_teleport::spinops::CMatrix,
) -> StStatus {
    guard(|| {
        // SAFETY: null checked; liveness is the caller's contract.
        let k = unsafe { ks.as_ref() }.ok_or_else(|| null("ks"))?;
        if m_in > 1 || m_out > 1 {
            return Err(invalid("mediator spin index must be 0 (up) or 1 (down)"));
        }
        let d = k.inner.centers_dim();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < d * d {
            return Err(Fail(StStatus::BufferTooSmall, format!("need {} entries, got {len}", d * d)));
        }
        let m = pick(&k.inner, m_in as usize, m_out as usize);
        // SAFETY: buf is non-null and holds at least d*d entries per the check above.
        let dst = unsafe { std::slice::from_raw_parts_mut(buf, d * d) };
        for r in 0..d {
            for c in 0..d {
                let z = m[(r, c)];
                dst[r * d + c] = StComplex { re: z.re, im: z.im };
            }
        }
        Ok(())
    })
}

/// Copies T[m_in][m_out] row-major into `buf` (at least dim*dim entries).
/// Index 0 is mediator spin up, 1 is down.
///
/// # Safety
/// `ks` must be a live handle; `buf` must hold `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn st_kraus_transmission(
    ks: *const StKrausSet,
    m_in: u32,
    m_out: u32,
    buf: *mut StComplex,
    len: usize,
) -> StStatus {
    unsafe { copy_block(ks, m_in, m_out, buf, len, KrausSet::t) }
}

/// Copies R[m_in][m_out] row-major into `buf`.
///
/// # Safety
/// As for [`st_kraus_transmission`].
#[no_mangle]
pub unsafe extern "C" fn st_kraus_reflection(
    ks: *const StKrausSet,
    m_in: u32,
    m_out: u32,
    buf: *mut StComplex,
    len: usize,
) -> StStatus {
    unsafe { copy_block(ks, m_in, m_out, buf, len, KrausSet::r) }
}

/// Teleports the state with amplitudes `phi` (2s+1 entries, normalized on
/// input) and writes fidelity and success probability to `out`.
///
/// # Safety
/// `params` and `out` must be valid; `phi` must hold `len` readable entries.
#[no_mangle]
pub unsafe extern "C" fn st_protocol_run(
    params: *const StProtocolParams,
    phi: *const StComplex,
    len: usize,
    out: *mut StProtocolOutcome,
) -> StStatus {
    guard(|| {
        // SAFETY: null checked; validity is the caller's contract.
        let p = unsafe { params.as_ref() }.ok_or_else(|| null("params"))?;
        if phi.is_null() {
            return Err(null("phi"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let template = template_of(p)?;
        let d = template.spin.dim();
        if len != d {
            return Err(invalid(format!("`phi` must have {d} entries, got {len}")));
        }
        // SAFETY: phi non-null with len entries.
        let amps = unsafe { std::slice::from_raw_parts(phi, len) };
        let v = CVector::from_iterator(d, amps.iter().map(|z| Complex64::new(z.re, z.im)));
        let state = PureState::normalized(v, vec![d])?;
        let result = Teleporter::prepare(&template)?.run(&state)?;
        unsafe {
            *out = StProtocolOutcome {
                fidelity: result.fidelity,
                success_probability: result.success_probability,
                stage_probabilities: result.stage_probabilities,
            };
        }
        Ok(())
    })
}

/// Mean fidelity and success probability over `count` states drawn with
/// `sampler` (an `StSampler` value) from `seed`.
///
/// # Safety
/// `params` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn st_average_performance(
    params: *const StProtocolParams,
    sampler: u32,
    count: u64,
    seed: u64,
    out: *mut StPerformance,
) -> StStatus {
    guard(|| {
        // SAFETY: null checked; validity is the caller's contract.
        let p = unsafe { params.as_ref() }.ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if count == 0 {
            return Err(invalid("`count` must be at least 1"));
        }
        let template = template_of(p)?;
        let st = average_performance(&template, sampler_of(sampler)?, count as usize, seed)?;
        unsafe {
            *out = StPerformance {
                mean_fidelity: st.mean_fidelity,
                mean_probability: st.mean_probability,
                stderr_fidelity: st.stderr_fidelity,
                stderr_probability: st.stderr_probability,
                samples: st.samples as u64,
                failures: st.failures as u64,
            };
        }
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn st_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
