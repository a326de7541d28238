//! Transfer-matrix reconstruction from classical-light measurements,
//! visibility matrices, and circuit fidelity.
//!
//! Moduli come from single-input intensity rows; relative phases come from
//! the fringe phase of each output while two inputs are fed with a swept
//! relative phase. The physical matrix is only defined up to diagonal
//! phases, so reconstruction fixes the gauge to a real positive first row
//! and first column, and all comparisons go through the gauge-invariant
//! visibility matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::circuit::{unitarity_residual, CircuitUnitary, C64};
use crate::error::{Error, Result};

/// Number of phase samples per fringe sweep.
const FRINGE_SAMPLES: usize = 64;

/// Frobenius distance beyond which a raw reconstruction is flagged as
/// inconsistent with any unitary. Multiplicative intensity noise at the
/// percent level stays well below this.
const INCONSISTENT_RESIDUAL: f64 = 0.1;

/// Normalized single-input intensities: `intensity(k, j)` is the power at
/// output `j` with light injected into input `k` alone; rows sum to 1.
#[derive(Debug, Clone)]
pub struct IntensityData {
    rows: Vec<Vec<f64>>,
}

impl IntensityData {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidArgument("empty intensity data".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(format!(
                    "intensity row {k} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if row.iter().any(|&x| x < 0.0) {
                return Err(Error::OutOfRange(format!("negative intensity in row {k}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "intensity row {k} sums to {sum}, expected 1 (normalize rows first)"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn modes(&self) -> usize {
        self.rows.len()
    }

    pub fn intensity(&self, input: usize, output: usize) -> f64 {
        self.rows[input][output]
    }
}

/// Fringe amplitude and phase of one output while inputs `(i, j)` are fed
/// with a swept relative phase: the intensity follows
/// `A0 + amplitude * cos(alpha + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeEntry {
    pub input_i: usize,
    pub input_j: usize,
    pub output: usize,
    pub amplitude: f64,
    pub phase: f64,
}

/// Complete two-input interference data: one entry per input pair `i < j`
/// and output `k`.
#[derive(Debug, Clone)]
pub struct FringeData {
    modes: usize,
    entries: Vec<FringeEntry>,
}

impl FringeData {
    pub fn new(modes: usize, entries: Vec<FringeEntry>) -> Result<Self> {
        let data = Self { modes, entries };
        for i in 0..modes {
            for j in (i + 1)..modes {
                for k in 0..modes {
                    data.get(i, j, k).ok_or_else(|| {
                        Error::InconsistentData(format!(
                            "missing fringe entry for inputs ({i},{j}), output {k}"
                        ))
                    })?;
                }
            }
        }
        for e in &data.entries {
            if e.amplitude < 0.0 {
                return Err(Error::OutOfRange("negative fringe amplitude".into()));
            }
            if e.phase <= -std::f64::consts::PI || e.phase > std::f64::consts::PI {
                return Err(Error::OutOfRange(format!(
                    "fringe phase {} outside (-pi, pi]",
                    e.phase
                )));
            }
        }
        Ok(data)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn entries(&self) -> &[FringeEntry] {
        &self.entries
    }

    pub fn get(&self, input_i: usize, input_j: usize, output: usize) -> Option<&FringeEntry> {
        self.entries
            .iter()
            .find(|e| e.input_i == input_i && e.input_j == input_j && e.output == output)
    }
}

/// Simulated chip characterization of `u` with relative intensity noise
/// `sigma`: single-input intensities (rows renormalized) and fringe
/// amplitude/phase per input pair and output, extracted by discrete
/// lock-in over one swept period. Deterministic per seed.
pub fn simulate_measurements(
    u: &CircuitUnitary,
    sigma: f64,
    seed: u64,
) -> Result<(IntensityData, FringeData)> {
    if sigma < 0.0 {
        return Err(Error::OutOfRange(format!("noise sigma {sigma} negative")));
    }
    let m = u.modes();
    let um = u.matrix();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut noisy = |x: f64| -> f64 {
        let xi: f64 = rng.sample(StandardNormal);
        (x * (1.0 + sigma * xi)).max(0.0)
    };

    let mut rows = Vec::with_capacity(m);
    for k in 0..m {
        let mut row: Vec<f64> = (0..m).map(|j| noisy(um[(j, k)].norm_sqr())).collect();
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Numerical(format!(
                "input {k} intensity row vanished"
            )));
        }
        row.iter_mut().for_each(|x| *x /= sum);
        rows.push(row);
    }
    let intensity = IntensityData::new(rows)?;

    let mut entries = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in 0..m {
                // Sweep the relative phase alpha and lock in on the
                // fundamental: I_k(alpha) = |U_ki + e^{i alpha} U_kj|^2.
                let mut acc = C64::default();
                for t in 0..FRINGE_SAMPLES {
                    let alpha = std::f64::consts::TAU * t as f64 / FRINGE_SAMPLES as f64;
                    let field = um[(k, i)] + C64::from_polar(1.0, alpha) * um[(k, j)];
                    let power = noisy(field.norm_sqr());
                    acc += C64::from_polar(1.0, -alpha) * power;
                }
                let c = acc * C64::new(2.0 / FRINGE_SAMPLES as f64, 0.0);
                let mut phase = c.im.atan2(c.re);
                if phase <= -std::f64::consts::PI {
                    phase = std::f64::consts::PI;
                }
                entries.push(FringeEntry {
                    input_i: i,
                    input_j: j,
                    output: k,
                    amplitude: c.norm(),
                    phase,
                });
            }
        }
    }
    Ok((intensity, FringeData::new(m, entries)?))
}

/// Result of a unitary reconstruction: the nearest unitary in the fixed
/// gauge, the Frobenius distance from the raw (pre-projection) matrix,
/// and a flag raised when that distance is too large for the data to be
/// explained by a unitary at all.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub unitary: CircuitUnitary,
    pub residual: f64,
    pub inconsistent: bool,
}

/// Reconstruct the transfer matrix from measured data.
///
/// Moduli are square roots of the intensity table; phases are fixed
/// relative to the first row and column (both made real positive) using
/// the fringe phases of input pairs `(0, k)`. The raw matrix is projected
/// onto the nearest unitary by polar decomposition and re-gauged.
pub fn reconstruct_unitary(
    intensity: &IntensityData,
    fringes: &FringeData,
) -> Result<Reconstruction> {
    let m = intensity.modes();
    if fringes.modes() != m {
        return Err(Error::Dimension(format!(
            "intensity data has {m} modes, fringe data {}",
            fringes.modes()
        )));
    }

    // Moduli: |U[j][k]| = sqrt(I[k][j]).
    let mut raw = DMatrix::<C64>::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            raw[(j, k)] = C64::new(intensity.intensity(k, j).sqrt(), 0.0);
        }
    }

    // Phases: phi[j][k] = theta_{j,(0,k)} - theta_{0,(0,k)} for j,k >= 1,
    // zero on the first row and column.
    for j in 1..m {
        for k in 1..m {
            let t_jk = fringes
                .get(0, k, j)
                .ok_or_else(|| Error::InconsistentData(format!("missing fringe (0,{k})->{j}")))?;
            let t_0k = fringes
                .get(0, k, 0)
                .ok_or_else(|| Error::InconsistentData(format!("missing fringe (0,{k})->0")))?;
            let phase = t_jk.phase - t_0k.phase;
            raw[(j, k)] *= C64::from_polar(1.0, phase);
        }
    }

    let (mut projected, residual) = nearest_unitary(&raw)?;
    gauge_first_row_col(&mut projected);
    let unitary = CircuitUnitary::new(projected, "reconstructed")?;
    Ok(Reconstruction {
        unitary,
        residual,
        inconsistent: residual > INCONSISTENT_RESIDUAL,
    })
}

/// Nearest unitary in Frobenius norm (the polar factor `W V^dagger` of
/// the SVD `A = W S V^dagger`); returns the factor and `||A - Q||_F`.
/// Well defined for rank-deficient input too, where the projection is no
/// longer unique but the SVD still yields a valid nearest unitary.
pub(crate) fn nearest_unitary(a: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
    let svd = a.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not produce U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not produce V^T".into()))?;
    let q = u * v_t;
    if unitarity_residual(&q) > 1e-10 {
        return Err(Error::Numerical(
            "polar projection failed to converge".into(),
        ));
    }
    let residual = (a - &q).norm();
    Ok((q, residual))
}

/// Multiply diagonal phases so the first row and first column are real
/// positive; leaves unitarity intact.
pub(crate) fn gauge_first_row_col(u: &mut DMatrix<C64>) {
    let m = u.nrows();
    for k in 0..m {
        let z = u[(0, k)];
        if z.norm() > 1e-12 {
            let phase = z.conj() / z.norm();
            for j in 0..m {
                u[(j, k)] *= phase;
            }
        }
    }
    for j in 0..m {
        let z = u[(j, 0)];
        if z.norm() > 1e-12 {
            let phase = z.conj() / z.norm();
            for k in 0..m {
                u[(j, k)] *= phase;
            }
        }
    }
}

/// Two-photon interference visibilities for every input pair `i < j` and
/// output pair `k < l`: `V = (P_C - P_Q) / P_C` with
/// `P_C = |U_ki U_lj|^2 + |U_li U_kj|^2` (distinguishable coincidences)
/// and `P_Q = |U_ki U_lj + U_li U_kj|^2`. Entries with `P_C = 0` are
/// undefined and stored as `None`.
#[derive(Debug, Clone)]
pub struct VisibilityMatrix {
    input_pairs: Vec<(usize, usize)>,
    output_pairs: Vec<(usize, usize)>,
    values: Vec<Option<f64>>,
}

impl VisibilityMatrix {
    pub fn input_pairs(&self) -> &[(usize, usize)] {
        &self.input_pairs
    }

    pub fn output_pairs(&self) -> &[(usize, usize)] {
        &self.output_pairs
    }

    pub fn value(&self, input_pair: usize, output_pair: usize) -> Option<f64> {
        self.values[input_pair * self.output_pairs.len() + output_pair]
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn has_undefined(&self) -> bool {
        self.values.iter().any(|v| v.is_none())
    }
}

fn mode_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Visibility matrix of a circuit.
pub fn visibility_matrix(u: &CircuitUnitary) -> VisibilityMatrix {
    let m = u.modes();
    let um = u.matrix();
    let pairs = mode_pairs(m);
    let mut values = Vec::with_capacity(pairs.len() * pairs.len());
    for &(i, j) in &pairs {
        for &(k, l) in &pairs {
            let direct = um[(k, i)] * um[(l, j)];
            let swapped = um[(l, i)] * um[(k, j)];
            let p_classical = direct.norm_sqr() + swapped.norm_sqr();
            let p_quantum = (direct + swapped).norm_sqr();
            if p_classical < 1e-30 {
                values.push(None);
            } else {
                values.push(Some((p_classical - p_quantum) / p_classical));
            }
        }
    }
    VisibilityMatrix {
        input_pairs: pairs.clone(),
        output_pairs: pairs,
        values,
    }
}

fn check_comparable(a: &VisibilityMatrix, b: &VisibilityMatrix) -> Result<()> {
    if a.input_pairs != b.input_pairs || a.output_pairs != b.output_pairs {
        return Err(Error::Dimension(
            "visibility matrices index different mode pairs".into(),
        ));
    }
    for (idx, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        if x.is_none() || y.is_none() {
            let ip = idx / a.output_pairs.len();
            let op = idx % a.output_pairs.len();
            let (i, j) = a.input_pairs[ip];
            let (k, l) = a.output_pairs[op];
            return Err(Error::UndefinedVisibility { i, j, k, l });
        }
    }
    Ok(())
}

/// Circuit fidelity `F = 1 - sum |V_th - V_exp| / 18`, with the
/// denominator fixed at 18 to match the established three-mode metric.
/// See [`fidelity_normalized`] for the pair-count-normalized variant.
pub fn fidelity(v_exp: &VisibilityMatrix, v_th: &VisibilityMatrix) -> Result<f64> {
    check_comparable(v_exp, v_th)?;
    let sum: f64 = v_exp
        .values
        .iter()
        .zip(&v_th.values)
        .map(|(a, b)| (a.unwrap() - b.unwrap()).abs())
        .sum();
    Ok(1.0 - sum / 18.0)
}

/// Fidelity variant normalized by the actual number of visibility pairs.
pub fn fidelity_normalized(v_exp: &VisibilityMatrix, v_th: &VisibilityMatrix) -> Result<f64> {
    check_comparable(v_exp, v_th)?;
    let count = v_exp.values.len() as f64;
    let sum: f64 = v_exp
        .values
        .iter()
        .zip(&v_th.values)
        .map(|(a, b)| (a.unwrap() - b.unwrap()).abs())
        .sum();
    Ok(1.0 - sum / count)
}

/// Visibility fidelity of a circuit against the ideal tritter.
pub fn fidelity_to_ideal_tritter(u: &CircuitUnitary) -> Result<f64> {
    let ideal = crate::circuit::ideal_tritter();
    fidelity(&visibility_matrix(u), &visibility_matrix(&ideal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_tritter, coupler_unitary, ideal_tritter, random_unitary, TritterLayout,
    };
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn noiseless_intensities_of_ideal_tritter_are_thirds() {
        let (intensity, _) = simulate_measurements(&ideal_tritter(), 0.0, 1).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(intensity.intensity(k, j), 1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_intensities_of_identity_are_diagonal() {
        let u = CircuitUnitary::new(DMatrix::identity(3, 3), "id").unwrap();
        let (intensity, _) = simulate_measurements(&u, 0.0, 1).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(intensity.intensity(k, j), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn noisy_intensities_stay_near_ideal() {
        let sigma = 0.01;
        let mut worst: f64 = 0.0;
        for seed in 0..50 {
            let (intensity, _) = simulate_measurements(&ideal_tritter(), sigma, seed).unwrap();
            for k in 0..3 {
                let sum: f64 = (0..3).map(|j| intensity.intensity(k, j)).sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
                for j in 0..3 {
                    worst = worst.max((intensity.intensity(k, j) - 1.0 / 3.0).abs());
                }
            }
        }
        assert!(worst < 4.0 * sigma, "worst deviation {worst}");
        assert!(worst > 1e-4, "noise did not act");
    }

    #[test]
    fn fringe_phases_recover_transfer_phases() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let u = random_unitary(3, &mut rng);
        let um = u.matrix();
        let (_, fringes) = simulate_measurements(&u, 0.0, 1).unwrap();
        for e in fringes.entries() {
            let a = um[(e.output, e.input_i)];
            let b = um[(e.output, e.input_j)];
            let expected_amp = 2.0 * a.norm() * b.norm();
            assert_abs_diff_eq!(e.amplitude, expected_amp, epsilon = 1e-10);
            if expected_amp > 1e-9 {
                let expected_phase = (b * a.conj()).im.atan2((b * a.conj()).re);
                let diff = (e.phase - expected_phase).rem_euclid(TAU);
                let diff = diff.min(TAU - diff);
                assert!(diff < 1e-9, "phase mismatch {diff}");
            }
        }
    }

    #[test]
    fn noiseless_round_trip_ideal_tritter() {
        let u = ideal_tritter();
        let (intensity, fringes) = simulate_measurements(&u, 0.0, 1).unwrap();
        let rec = reconstruct_unitary(&intensity, &fringes).unwrap();
        assert!(!rec.inconsistent);
        assert!(rec.residual < 1e-9);
        let f = fidelity(&visibility_matrix(&rec.unitary), &visibility_matrix(&u)).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "fidelity {f}");
    }

    #[test]
    fn noiseless_round_trip_random_unitaries() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for case in 0..25 {
            let u = random_unitary(3, &mut rng);
            let (intensity, fringes) = simulate_measurements(&u, 0.0, case).unwrap();
            let rec = reconstruct_unitary(&intensity, &fringes).unwrap();
            let dev: f64 = visibility_matrix(&rec.unitary)
                .values()
                .iter()
                .zip(visibility_matrix(&u).values())
                .map(|(a, b)| (a.unwrap() - b.unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-9, "case {case}: visibility deviation {dev}");
        }
    }

    #[test]
    fn visibility_of_ideal_tritter_is_one_half_everywhere() {
        let v = visibility_matrix(&ideal_tritter());
        assert_eq!(v.values().len(), 9);
        for val in v.values() {
            assert_abs_diff_eq!(val.unwrap(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn visibility_of_identity_is_degenerate() {
        // Off-diagonal pair combinations have no classical coincidence
        // path at all (P_C = 0, undefined); matched input/output pairs
        // transmit both photons with no exchange term, so V = 0 there.
        let u = CircuitUnitary::new(DMatrix::identity(3, 3), "id").unwrap();
        let v = visibility_matrix(&u);
        assert!(v.has_undefined());
        for (ip, &(i, j)) in v.input_pairs().iter().enumerate() {
            for (op, &(k, l)) in v.output_pairs().iter().enumerate() {
                match v.value(ip, op) {
                    Some(val) => {
                        assert_eq!((i, j), (k, l));
                        assert_abs_diff_eq!(val, 0.0, epsilon = 1e-15);
                    }
                    None => assert_ne!((i, j), (k, l)),
                }
            }
        }
        let ideal = visibility_matrix(&ideal_tritter());
        assert!(matches!(
            fidelity(&v, &ideal),
            Err(Error::UndefinedVisibility { .. })
        ));
    }

    #[test]
    fn balanced_splitter_has_unit_visibility() {
        let u = coupler_unitary(0.5, 0, 1, 2).unwrap();
        let v = visibility_matrix(&u);
        assert_eq!(v.values().len(), 1);
        assert_abs_diff_eq!(v.value(0, 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_arithmetic() {
        let v = visibility_matrix(&ideal_tritter());
        assert_abs_diff_eq!(fidelity(&v, &v).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_normalized(&v, &v).unwrap(), 1.0, epsilon = 1e-15);

        // One entry off by 0.18 costs exactly 0.01.
        let mut shifted = v.clone();
        shifted.values[4] = Some(shifted.values[4].unwrap() - 0.18);
        assert_abs_diff_eq!(fidelity(&shifted, &v).unwrap(), 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fidelity_normalized(&shifted, &v).unwrap(),
            0.98,
            epsilon = 1e-12
        );
    }

    #[test]
    fn visibility_is_gauge_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let u = random_unitary(3, &mut rng);
        let v = visibility_matrix(&u);
        for _ in 0..5 {
            let d1 = DMatrix::from_fn(3, 3, |j, k| {
                if j == k {
                    C64::from_polar(1.0, rng.gen_range(0.0..TAU))
                } else {
                    C64::default()
                }
            });
            let d2 = DMatrix::from_fn(3, 3, |j, k| {
                if j == k {
                    C64::from_polar(1.0, rng.gen_range(0.0..TAU))
                } else {
                    C64::default()
                }
            });
            let gauged = CircuitUnitary::new(&d1 * u.matrix() * &d2, "gauged").unwrap();
            let vg = visibility_matrix(&gauged);
            let dev: f64 = v
                .values()
                .iter()
                .zip(vg.values())
                .map(|(a, b)| (a.unwrap() - b.unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-12);
            assert_abs_diff_eq!(fidelity(&vg, &v).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tritter_fidelity_maximized_at_quarter_and_three_quarter_wave() {
        // Nominal reflectivities at the two operating phases.
        for phi in [FRAC_PI_2, 3.0 * FRAC_PI_2] {
            let u = build_tritter(&TritterLayout::new(0.5, 1.0 / 3.0, phi).unwrap()).unwrap();
            let f = fidelity_to_ideal_tritter(&u).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "phi={phi}: F={f}");
        }
        // Away from the operating point the fidelity drops.
        let u = build_tritter(&TritterLayout::new(0.5, 1.0 / 3.0, 0.0).unwrap()).unwrap();
        assert!(fidelity_to_ideal_tritter(&u).unwrap() < 1.0 - 1e-3);
    }

    #[test]
    fn phase_scan_peaks_at_operating_points() {
        // Scan phi over [0, 2 pi) in 1e-3 steps: the fidelity maxima over
        // each half-period land on pi/2 and 3 pi/2 within the grid.
        let f_at = |phi: f64| {
            let u = build_tritter(&TritterLayout::new(0.5, 1.0 / 3.0, phi).unwrap()).unwrap();
            fidelity_to_ideal_tritter(&u).unwrap()
        };
        let step = 1e-3;
        let count = (TAU / step).ceil() as usize;
        let mut best_lower = (0.0, f64::NEG_INFINITY);
        let mut best_upper = (0.0, f64::NEG_INFINITY);
        for i in 0..count {
            let phi = i as f64 * step;
            let f = f_at(phi);
            if phi < PI {
                if f > best_lower.1 {
                    best_lower = (phi, f);
                }
            } else if f > best_upper.1 {
                best_upper = (phi, f);
            }
        }
        assert!(
            (best_lower.0 - FRAC_PI_2).abs() <= step,
            "lower-half maximum at phi={}",
            best_lower.0
        );
        assert!(
            (best_upper.0 - 3.0 * FRAC_PI_2).abs() <= step,
            "upper-half maximum at phi={}",
            best_upper.0
        );
        // |V| differences make F linear in |phi - phi*| near the peak, so
        // an off-grid maximum sits ~(slope * step) below 1.
        assert!(best_lower.1 > 1.0 - 5e-3);
        assert!(best_upper.1 > 1.0 - 5e-3);
    }

    #[test]
    fn noisy_reconstruction_keeps_high_fidelity() {
        let u = ideal_tritter();
        let mut fidelities: Vec<f64> = (0..100)
            .map(|seed| {
                let (intensity, fringes) = simulate_measurements(&u, 0.01, seed).unwrap();
                let rec = reconstruct_unitary(&intensity, &fringes).unwrap();
                assert!(!rec.inconsistent);
                fidelity_to_ideal_tritter(&rec.unitary).unwrap()
            })
            .collect();
        fidelities.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let p5 = fidelities[4];
        assert!(p5 >= 0.95, "5th percentile fidelity {p5}");
    }

    #[test]
    fn inconsistent_data_is_flagged_but_projected() {
        // Intensity rows wildly incompatible with the fringe phases of a
        // unitary: uniform moduli with all fringe phases zero is fine, so
        // distort moduli strongly instead.
        let rows = vec![
            vec![0.98, 0.01, 0.01],
            vec![0.98, 0.01, 0.01],
            vec![0.98, 0.01, 0.01],
        ];
        let intensity = IntensityData::new(rows).unwrap();
        let entries: Vec<FringeEntry> = mode_pairs(3)
            .into_iter()
            .flat_map(|(i, j)| {
                (0..3).map(move |k| FringeEntry {
                    input_i: i,
                    input_j: j,
                    output: k,
                    amplitude: 0.1,
                    phase: 0.0,
                })
            })
            .collect();
        let fringes = FringeData::new(3, entries).unwrap();
        let rec = reconstruct_unitary(&intensity, &fringes).unwrap();
        assert!(rec.inconsistent);
        assert!(rec.unitary.unitarity_residual() < 1e-10);
    }

    #[test]
    fn gauge_fix_makes_first_row_and_column_real() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut u = random_unitary(4, &mut rng).matrix().clone();
        gauge_first_row_col(&mut u);
        for k in 0..4 {
            assert!(u[(0, k)].im.abs() < 1e-12);
            assert!(u[(0, k)].re >= 0.0);
            assert!(u[(k, 0)].im.abs() < 1e-12);
            assert!(u[(k, 0)].re >= 0.0);
        }
    }

    #[test]
    fn fringe_data_requires_complete_pairs() {
        let entries = vec![FringeEntry {
            input_i: 0,
            input_j: 1,
            output: 0,
            amplitude: 0.1,
            phase: 0.0,
        }];
        assert!(FringeData::new(3, entries).is_err());
    }

    #[test]
    fn intensity_rows_must_normalize() {
        assert!(IntensityData::new(vec![vec![0.5, 0.2], vec![0.5, 0.5]]).is_err());
        assert!(IntensityData::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn polar_projection_of_unitary_is_identity_map() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let u = random_unitary(3, &mut rng);
        let (q, residual) = nearest_unitary(u.matrix()).unwrap();
        assert!(residual < 1e-10);
        assert!((q - u.matrix()).norm() < 1e-10);
    }

    #[test]
    fn phases_wrap_into_half_open_interval() {
        let u = build_tritter(&TritterLayout::new(0.5, 1.0 / 3.0, PI).unwrap()).unwrap();
        let (_, fringes) = simulate_measurements(&u, 0.0, 0).unwrap();
        for e in fringes.entries() {
            assert!(e.phase > -PI && e.phase <= PI);
        }
    }
}
