//! C ABI for the trittersim toolkit: opaque circuit handles plus status
//! codes, so other languages can drive distributions, demultiplexer
//! rates, fidelities, and rate budgets. The generated header lives in
//! `include/trittersim.h`.
//!
//! Conventions: every fallible call returns a [`TsimStatus`] and writes
//! results through out-pointers; complex matrices cross the boundary as
//! separate row-major `re`/`im` arrays; handles must be released with
//! `tsim_circuit_free`.

use std::collections::BTreeMap;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use trittersim::circuit::{build_tritter, ideal_tritter, TritterLayout};
use trittersim::demux::{
    active_efficiency, conversion_rate_active, conversion_rate_passive, ideal_active_conversion,
    SchemeBuilder,
};
use trittersim::error::Error;
use trittersim::fock::enumerate_patterns;
use trittersim::interference::{
    chi_from_g2, distribution, gram_from_pairwise, mixture_distribution, GramMatrix,
    PhotonEnsemble, SourceModel,
};
use trittersim::reconstruct::{
    fidelity, reconstruct_unitary, simulate_measurements, visibility_matrix,
};
use trittersim::{CircuitUnitary, C64};

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    DimensionMismatch = 4,
    NotUnitary = 5,
    NotPositiveSemidefinite = 6,
    UndefinedVisibility = 7,
    NumericalFailure = 8,
    BufferTooSmall = 9,
    InternalPanic = 10,
}

fn status_of(err: &Error) -> TsimStatus {
    match err {
        Error::Dimension(_) => TsimStatus::DimensionMismatch,
        Error::InvalidArgument(_) | Error::Config(_) => TsimStatus::InvalidArgument,
        Error::NotUnitary { .. } => TsimStatus::NotUnitary,
        Error::NotPsd(_) => TsimStatus::NotPositiveSemidefinite,
        Error::OutOfRange(_) => TsimStatus::OutOfRange,
        Error::UndefinedVisibility { .. } => TsimStatus::UndefinedVisibility,
        Error::InconsistentData(_) | Error::SingularResponse(_) | Error::Numerical(_) => {
            TsimStatus::NumericalFailure
        }
        Error::Io(_) => TsimStatus::InvalidArgument,
    }
}

fn guarded(body: impl FnOnce() -> TsimStatus) -> TsimStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(TsimStatus::InternalPanic)
}

/// Opaque circuit handle.
pub struct TsimCircuit {
    inner: CircuitUnitary,
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn tsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn emit_circuit(out: *mut *mut TsimCircuit, circuit: CircuitUnitary) -> TsimStatus {
    if out.is_null() {
        return TsimStatus::NullPointer;
    }
    let handle = Box::new(TsimCircuit { inner: circuit });
    unsafe { *out = Box::into_raw(handle) };
    TsimStatus::Ok
}

/// The ideal three-mode Fourier tritter.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_ideal_tritter(out: *mut *mut TsimCircuit) -> TsimStatus {
    guarded(|| emit_circuit(out, ideal_tritter()))
}

/// Identity circuit on `modes` modes.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_identity(
    modes: usize,
    out: *mut *mut TsimCircuit,
) -> TsimStatus {
    guarded(|| {
        if modes == 0 {
            return TsimStatus::OutOfRange;
        }
        match CircuitUnitary::new(nalgebra::DMatrix::identity(modes, modes), "identity") {
            Ok(c) => emit_circuit(out, c),
            Err(e) => status_of(&e),
        }
    })
}

/// Physical tritter: couplers of reflectivity `r1`, `r2`, `r1` with an
/// intermediate phase `phi` on the middle mode.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_tritter(
    r1: f64,
    r2: f64,
    phi: f64,
    out: *mut *mut TsimCircuit,
) -> TsimStatus {
    guarded(|| {
        let layout = match TritterLayout::new(r1, r2, phi) {
            Ok(l) => l,
            Err(e) => return status_of(&e),
        };
        match build_tritter(&layout) {
            Ok(c) => emit_circuit(out, c),
            Err(e) => status_of(&e),
        }
    })
}

/// Circuit from an explicit `modes x modes` complex matrix in row-major
/// `re`/`im` arrays; the matrix must be unitary.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_from_matrix(
    modes: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut TsimCircuit,
) -> TsimStatus {
    guarded(|| {
        if re.is_null() || im.is_null() {
            return TsimStatus::NullPointer;
        }
        if modes == 0 {
            return TsimStatus::OutOfRange;
        }
        let len = modes * modes;
        let re = unsafe { std::slice::from_raw_parts(re, len) };
        let im = unsafe { std::slice::from_raw_parts(im, len) };
        let matrix = nalgebra::DMatrix::from_fn(modes, modes, |j, k| {
            C64::new(re[j * modes + k], im[j * modes + k])
        });
        match CircuitUnitary::new(matrix, "ffi matrix") {
            Ok(c) => emit_circuit(out, c),
            Err(e) => status_of(&e),
        }
    })
}

/// Release a circuit handle. Null is a no-op.
///
/// # Safety
/// `circuit` must be a pointer previously returned by one of the
/// `tsim_circuit_*` constructors and not freed since.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_free(circuit: *mut TsimCircuit) {
    if !circuit.is_null() {
        drop(unsafe { Box::from_raw(circuit) });
    }
}

/// Mode count of a circuit.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_modes(
    circuit: *const TsimCircuit,
    out: *mut usize,
) -> TsimStatus {
    guarded(|| {
        if circuit.is_null() || out.is_null() {
            return TsimStatus::NullPointer;
        }
        let circuit = unsafe { &*circuit };
        unsafe { *out = circuit.inner.modes() };
        TsimStatus::Ok
    })
}

/// One matrix element of a circuit.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_circuit_element(
    circuit: *const TsimCircuit,
    row: usize,
    col: usize,
    re: *mut f64,
    im: *mut f64,
) -> TsimStatus {
    guarded(|| {
        if circuit.is_null() || re.is_null() || im.is_null() {
            return TsimStatus::NullPointer;
        }
        let circuit = unsafe { &*circuit };
        let m = circuit.inner.modes();
        if row >= m || col >= m {
            return TsimStatus::OutOfRange;
        }
        let z = circuit.inner.element(row, col);
        unsafe {
            *re = z.re;
            *im = z.im;
        }
        TsimStatus::Ok
    })
}

/// Number of occupation patterns of `photons` photons over `modes` modes,
/// i.e. the length of every distribution buffer.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_pattern_count(
    photons: usize,
    modes: usize,
    out: *mut usize,
) -> TsimStatus {
    guarded(|| {
        if out.is_null() {
            return TsimStatus::NullPointer;
        }
        if modes == 0 {
            return TsimStatus::OutOfRange;
        }
        unsafe { *out = trittersim::fock::compositions(photons, modes) };
        TsimStatus::Ok
    })
}

/// Fill `out` (length `len >= count * modes`) with the canonical pattern
/// table, row-major: pattern `i` occupies `out[i*modes .. (i+1)*modes]`.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_patterns(
    photons: usize,
    modes: usize,
    out: *mut u32,
    len: usize,
) -> TsimStatus {
    guarded(|| {
        if out.is_null() {
            return TsimStatus::NullPointer;
        }
        if modes == 0 {
            return TsimStatus::OutOfRange;
        }
        let patterns = enumerate_patterns(photons, modes);
        let needed = patterns.len() * modes;
        if len < needed {
            return TsimStatus::BufferTooSmall;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(out, needed) };
        for (i, p) in patterns.iter().enumerate() {
            for (k, &c) in p.counts().iter().enumerate() {
                out[i * modes + k] = c as u32;
            }
        }
        TsimStatus::Ok
    })
}

/// Output distribution of `photons` photons entering `input_modes`
/// through the circuit. `gram_re`/`gram_im` give the photon overlap Gram
/// matrix (row-major `photons x photons`); pass NULL for both to use the
/// fully indistinguishable all-ones matrix. `out_probs` receives the
/// probabilities in canonical pattern order and must hold
/// `tsim_pattern_count(photons, modes)` entries.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_distribution(
    circuit: *const TsimCircuit,
    input_modes: *const usize,
    photons: usize,
    gram_re: *const f64,
    gram_im: *const f64,
    out_probs: *mut f64,
    out_len: usize,
) -> TsimStatus {
    guarded(|| {
        if circuit.is_null() || input_modes.is_null() || out_probs.is_null() {
            return TsimStatus::NullPointer;
        }
        if gram_re.is_null() != gram_im.is_null() {
            return TsimStatus::NullPointer;
        }
        let circuit = unsafe { &*circuit };
        let modes = unsafe { std::slice::from_raw_parts(input_modes, photons) };
        let gram = if gram_re.is_null() {
            GramMatrix::all_ones(photons.max(1))
        } else {
            let len = photons * photons;
            let re = unsafe { std::slice::from_raw_parts(gram_re, len) };
            let im = unsafe { std::slice::from_raw_parts(gram_im, len) };
            let s = nalgebra::DMatrix::from_fn(photons, photons, |i, j| {
                C64::new(re[i * photons + j], im[i * photons + j])
            });
            match GramMatrix::new(s) {
                Ok(g) => g,
                Err(e) => return status_of(&e),
            }
        };
        let ens = match PhotonEnsemble::with_gram(modes, gram) {
            Ok(e) => e,
            Err(e) => return status_of(&e),
        };
        let dist = match distribution(&circuit.inner, &ens) {
            Ok(d) => d,
            Err(e) => return status_of(&e),
        };
        let probs = dist.probabilities();
        if out_len < probs.len() {
            return TsimStatus::BufferTooSmall;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(out_probs, probs.len()) };
        out.copy_from_slice(probs);
        TsimStatus::Ok
    })
}

/// Three-photon output distribution of the laser-contamination source
/// mixture through a three-mode circuit. Pairwise QD indistinguishabilities
/// `m01`, `m02`, `m12`; `out_probs` must hold 10 entries.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn tsim_mixture_distribution(
    circuit: *const TsimCircuit,
    p1_qd: f64,
    g2: f64,
    m01: f64,
    m02: f64,
    m12: f64,
    out_probs: *mut f64,
    out_len: usize,
) -> TsimStatus {
    guarded(|| {
        if circuit.is_null() || out_probs.is_null() {
            return TsimStatus::NullPointer;
        }
        let circuit = unsafe { &*circuit };
        let source = match SourceModel::new(p1_qd, g2, m01.max(m12), m02.min(m01).min(m12)) {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        let mut overlaps = BTreeMap::new();
        overlaps.insert((0usize, 1usize), m01);
        overlaps.insert((0, 2), m02);
        overlaps.insert((1, 2), m12);
        let gram = match gram_from_pairwise(3, &overlaps) {
            Ok(g) => g,
            Err(e) => return status_of(&e),
        };
        let dist = match mixture_distribution(&circuit.inner, &source, &gram) {
            Ok(d) => d,
            Err(e) => return status_of(&e),
        };
        if out_len < dist.probabilities().len() {
            return TsimStatus::BufferTooSmall;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(out_probs, dist.probabilities().len()) };
        out.copy_from_slice(dist.probabilities());
        TsimStatus::Ok
    })
}

/// Laser-to-QD mean photon number ratio from a measured g2(0).
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_chi_from_g2(g2: f64, out: *mut f64) -> TsimStatus {
    guarded(|| {
        if out.is_null() {
            return TsimStatus::NullPointer;
        }
        match chi_from_g2(g2) {
            Ok(chi) => {
                unsafe { *out = chi };
                TsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Active and passive conversion rates of the ideal cascaded-binary
/// demultiplexer with the given arm count, period, modulation contrast,
/// and edge rise time (seconds). Pass `grid_step <= 0` for the default
/// 0.1 ns sampling.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_demux_rates(
    arms: usize,
    period: f64,
    contrast: f64,
    rise_time: f64,
    grid_step: f64,
    c_active: *mut f64,
    c_passive: *mut f64,
) -> TsimStatus {
    guarded(|| {
        if c_active.is_null() || c_passive.is_null() {
            return TsimStatus::NullPointer;
        }
        let mut builder = SchemeBuilder::new(arms, period)
            .contrast(contrast)
            .rise_time(rise_time);
        if grid_step > 0.0 {
            builder = builder.grid_step(grid_step);
        }
        let scheme = match builder.build() {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        let active = match conversion_rate_active(&scheme) {
            Ok(c) => c,
            Err(e) => return status_of(&e),
        };
        let passive = match conversion_rate_passive(&scheme.passive_probabilities()) {
            Ok(c) => c,
            Err(e) => return status_of(&e),
        };
        unsafe {
            *c_active = active;
            *c_passive = passive;
        }
        TsimStatus::Ok
    })
}

/// Active efficiency `(r_exp - 1) / (r_ideal - 1)`; `anomalous` is set
/// when the value leaves [0, 1].
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_active_efficiency(
    r_exp: f64,
    r_ideal: f64,
    value: *mut f64,
    anomalous: *mut bool,
) -> TsimStatus {
    guarded(|| {
        if value.is_null() || anomalous.is_null() {
            return TsimStatus::NullPointer;
        }
        match active_efficiency(r_exp, r_ideal) {
            Ok(eta) => {
                unsafe {
                    *value = eta.value;
                    *anomalous = eta.anomalous;
                }
                TsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Conversion rate of the ideal cascaded-binary scheme with `arms` arms;
/// 0 signals an invalid arm count.
#[no_mangle]
pub extern "C" fn tsim_ideal_active_conversion(arms: usize) -> f64 {
    if arms == 0 {
        return 0.0;
    }
    ideal_active_conversion(arms)
}

/// Visibility fidelity between two circuits of equal mode count
/// (1 when their visibility matrices agree).
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_visibility_fidelity(
    a: *const TsimCircuit,
    b: *const TsimCircuit,
    out: *mut f64,
) -> TsimStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return TsimStatus::NullPointer;
        }
        let a = unsafe { &*a };
        let b = unsafe { &*b };
        let va = visibility_matrix(&a.inner);
        let vb = visibility_matrix(&b.inner);
        match fidelity(&va, &vb) {
            Ok(f) => {
                unsafe { *out = f };
                TsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Simulate noisy chip characterization of the circuit, reconstruct the
/// transfer matrix, and report the visibility fidelity to the original.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_reconstruct_roundtrip_fidelity(
    circuit: *const TsimCircuit,
    noise_sigma: f64,
    seed: u64,
    out: *mut f64,
) -> TsimStatus {
    guarded(|| {
        if circuit.is_null() || out.is_null() {
            return TsimStatus::NullPointer;
        }
        let circuit = unsafe { &*circuit };
        let (intensity, fringes) = match simulate_measurements(&circuit.inner, noise_sigma, seed) {
            Ok(pair) => pair,
            Err(e) => return status_of(&e),
        };
        let rec = match reconstruct_unitary(&intensity, &fringes) {
            Ok(r) => r,
            Err(e) => return status_of(&e),
        };
        let f = match fidelity(
            &visibility_matrix(&rec.unitary),
            &visibility_matrix(&circuit.inner),
        ) {
            Ok(f) => f,
            Err(e) => return status_of(&e),
        };
        unsafe { *out = f };
        TsimStatus::Ok
    })
}

/// Modeled n-photon source rate
/// `rep_rate * (brightness * demux_transmission)^n * conversion`.
///
/// # Safety
/// All pointer arguments must be valid for their documented length
/// and alignment (or null only where explicitly allowed); circuit
/// handles must originate from a `tsim_circuit_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tsim_source_rate(
    rep_rate: f64,
    fibered_brightness: f64,
    demux_transmission: f64,
    demux_conversion: f64,
    photons: usize,
    out: *mut f64,
) -> TsimStatus {
    guarded(|| {
        if out.is_null() {
            return TsimStatus::NullPointer;
        }
        let pipeline = trittersim::budget::BudgetPipeline {
            rep_rate,
            fibered_brightness,
            demux_transmission,
            chip_transmission: 1.0,
            det_efficiency: 1.0,
            n: photons,
            demux_conversion,
            measured_source_rate: None,
        };
        if let Err(e) = pipeline.validate() {
            return status_of(&e);
        }
        unsafe { *out = pipeline.n_photon_source_rate() };
        TsimStatus::Ok
    })
}

/// Rate after a further per-photon efficiency: `source_rate * eff^n`.
#[no_mangle]
pub extern "C" fn tsim_downstream_rate(
    source_rate: f64,
    per_photon_eff: f64,
    photons: usize,
) -> f64 {
    trittersim::budget::downstream_rate(source_rate, per_photon_eff, photons)
}
