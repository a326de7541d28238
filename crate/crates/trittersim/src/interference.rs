//! Multi-photon output distributions for partially distinguishable photons.
//!
//! Photons are described by their input modes plus a Gram matrix `S` of
//! pairwise single-photon overlaps; `S` interpolates between ideal bosonic
//! interference (all-ones) and fully classical transmission (identity).
//! The main engine [`distribution`] evaluates the permutation double sum
//!
//! ```text
//! P(t) = (1 / prod_k t_k!) sum_{sigma, rho in S_n}
//!        prod_j S[rho(j), sigma(j)] U[d_j, r[sigma(j)]] conj(U[d_j, r[rho(j)]])
//! ```
//!
//! over all output patterns `t` (with canonical mode assignment `d` and
//! photon input modes `r`), normalized by the permanent of the input Gram
//! matrix restricted to same-mode photon pairs. The permutation paired
//! with the conjugated amplitudes indexes the bra row of `S`; for real
//! Gram matrices the orientation is irrelevant, but for complex overlaps
//! only this orientation reproduces the first-quantized expansion at
//! collision outputs. [`oracle_distribution`]
//! recomputes the same distribution by brute-force expansion of the output
//! state in a composite spatial x internal basis and is kept independent of
//! the permutation engine.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::circuit::{CircuitUnitary, C64};
use crate::error::{Error, Result};
use crate::fock::{enumerate_patterns, OccupationPattern};

/// Tolerances for Gram-matrix validation and probability residues.
const HERMITICITY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-10;
const NEGATIVE_PROB_TOL: f64 = 1e-12;
const DISTRIBUTION_SUM_TOL: f64 = 1e-9;

/// Hermitian, unit-diagonal, positive semidefinite matrix of pairwise
/// single-photon overlaps `S[i][j] = <psi_i | psi_j>`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    s: DMatrix<C64>,
}

impl GramMatrix {
    pub fn new(s: DMatrix<C64>) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "Gram matrix must be square and non-empty, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let n = s.nrows();
        for i in 0..n {
            if (s[(i, i)] - C64::new(1.0, 0.0)).norm() > HERMITICITY_TOL {
                return Err(Error::InvalidArgument(format!(
                    "Gram diagonal entry {i} is {}, expected 1",
                    s[(i, i)]
                )));
            }
            for j in 0..n {
                if (s[(i, j)] - s[(j, i)].conj()).norm() > HERMITICITY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "Gram matrix not Hermitian at ({i},{j})"
                    )));
                }
                if s[(i, j)].norm() > 1.0 + NEGATIVE_PROB_TOL {
                    return Err(Error::OutOfRange(format!(
                        "|S[{i}][{j}]| = {} exceeds 1",
                        s[(i, j)].norm()
                    )));
                }
            }
        }
        let min_eig = min_hermitian_eigenvalue(&s);
        if min_eig < -PSD_TOL {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(Self { s })
    }

    pub fn dimension(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.s
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.s[(i, j)]
    }

    /// Fully indistinguishable photons.
    pub fn all_ones(n: usize) -> Self {
        Self {
            s: DMatrix::from_element(n, n, C64::new(1.0, 0.0)),
        }
    }

    /// Fully distinguishable photons.
    pub fn identity(n: usize) -> Self {
        Self {
            s: DMatrix::identity(n, n),
        }
    }

    /// Scale every off-diagonal entry by `lambda`, interpolating between
    /// the identity (`lambda = 0`) and `self` (`lambda = 1`). PSD is
    /// preserved for `lambda` in `[0, 1]`.
    pub fn scale_off_diagonal(&self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange(format!("lambda {lambda} outside [0, 1]")));
        }
        let n = self.dimension();
        let mut s = self.s.map(|z| z * lambda);
        for i in 0..n {
            s[(i, i)] = C64::new(1.0, 0.0);
        }
        Self::new(s)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.s)
    }
}

fn min_hermitian_eigenvalue(s: &DMatrix<C64>) -> f64 {
    let eig = s.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Gram matrix from measured pairwise indistinguishabilities
/// `M[i][j] = |<psi_i|psi_j>|^2`: entries are the real positive square
/// roots. Fails if the resulting matrix is not positive semidefinite,
/// which signals mutually inconsistent pairwise values.
pub fn gram_from_pairwise(
    n: usize,
    overlaps: &BTreeMap<(usize, usize), f64>,
) -> Result<GramMatrix> {
    let mut s = DMatrix::identity(n, n);
    let mut seen = BTreeMap::new();
    for (&(i, j), &m) in overlaps {
        if i >= n || j >= n || i == j {
            return Err(Error::InvalidArgument(format!(
                "overlap pair ({i},{j}) invalid for {n} photons"
            )));
        }
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::OutOfRange(format!(
                "M[{i}][{j}] = {m} outside [0, 1]"
            )));
        }
        let key = (i.min(j), i.max(j));
        if let Some(prev) = seen.insert(key, m) {
            if (prev - m).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "conflicting overlaps for pair {key:?}"
                )));
            }
        }
        let root = C64::new(m.sqrt(), 0.0);
        s[(i, j)] = root;
        s[(j, i)] = root;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !seen.contains_key(&(i, j)) {
                return Err(Error::InvalidArgument(format!(
                    "missing overlap for pair ({i},{j})"
                )));
            }
        }
    }
    GramMatrix::new(s)
}

/// One photon at the circuit input: spatial mode plus an internal-state
/// label. Labels only name states; the quantitative overlaps live in the
/// ensemble Gram matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Photon {
    pub input_mode: usize,
    pub label: String,
}

impl Photon {
    pub fn new(input_mode: usize, label: impl Into<String>) -> Self {
        Self {
            input_mode,
            label: label.into(),
        }
    }
}

/// A list of input photons together with their overlap Gram matrix.
#[derive(Debug, Clone)]
pub struct PhotonEnsemble {
    photons: Vec<Photon>,
    gram: GramMatrix,
}

impl PhotonEnsemble {
    pub fn new(photons: Vec<Photon>, gram: GramMatrix) -> Result<Self> {
        if gram.dimension() != photons.len() {
            return Err(Error::Dimension(format!(
                "Gram dimension {} does not match photon count {}",
                gram.dimension(),
                photons.len()
            )));
        }
        for i in 0..photons.len() {
            for j in (i + 1)..photons.len() {
                let same_label = photons[i].label == photons[j].label;
                if same_label && (gram.entry(i, j).norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "photons {i} and {j} share label {:?} but |S| = {}",
                        photons[i].label,
                        gram.entry(i, j).norm()
                    )));
                }
                if same_label && photons[i].input_mode == photons[j].input_mode {
                    return Err(Error::InvalidArgument(format!(
                        "photons {i} and {j} share mode {} and label {:?}",
                        photons[i].input_mode, photons[i].label
                    )));
                }
            }
        }
        Ok(Self { photons, gram })
    }

    /// `n` pairwise-identical photons, one per listed mode.
    pub fn indistinguishable(modes: &[usize]) -> Result<Self> {
        let photons = modes.iter().map(|&k| Photon::new(k, "qd")).collect();
        Self::new(photons, GramMatrix::all_ones(modes.len()))
    }

    /// `n` mutually orthogonal photons, one per listed mode.
    pub fn distinguishable(modes: &[usize]) -> Result<Self> {
        let photons = modes
            .iter()
            .enumerate()
            .map(|(i, &k)| Photon::new(k, format!("d{i}")))
            .collect();
        Self::new(photons, GramMatrix::identity(modes.len()))
    }

    /// Photons in the listed modes with distinct labels and an explicit
    /// Gram matrix.
    pub fn with_gram(modes: &[usize], gram: GramMatrix) -> Result<Self> {
        let photons = modes
            .iter()
            .enumerate()
            .map(|(i, &k)| Photon::new(k, format!("p{i}")))
            .collect();
        Self::new(photons, gram)
    }

    pub fn photon_count(&self) -> usize {
        self.photons.len()
    }

    pub fn photons(&self) -> &[Photon] {
        &self.photons
    }

    pub fn input_modes(&self) -> Vec<usize> {
        self.photons.iter().map(|p| p.input_mode).collect()
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }
}

/// Per-pulse photon statistics of the source feeding the demultiplexer:
/// quantum-dot single-photon probability, effective g2(0), and the
/// short/long-delay indistinguishabilities of successive QD photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    pub p1_qd: f64,
    pub g2: f64,
    pub m_near: f64,
    pub m_far: f64,
}

impl SourceModel {
    pub fn new(p1_qd: f64, g2: f64, m_near: f64, m_far: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1_qd) {
            return Err(Error::OutOfRange(format!("p1_qd {p1_qd} outside [0, 1]")));
        }
        if !(0.0..1.0).contains(&g2) {
            return Err(Error::OutOfRange(format!("g2 {g2} outside [0, 1)")));
        }
        if !(0.0..=1.0).contains(&m_far) || !(0.0..=1.0).contains(&m_near) || m_far > m_near {
            return Err(Error::OutOfRange(format!(
                "need 0 <= m_far <= m_near <= 1, got m_near {m_near}, m_far {m_far}"
            )));
        }
        Ok(Self {
            p1_qd,
            g2,
            m_near,
            m_far,
        })
    }

    /// Per-pulse probability of a residual laser photon,
    /// `p1_L = (g2 / 2) p1_QD` (higher laser Fock terms neglected).
    pub fn laser_single_photon_probability(&self) -> f64 {
        0.5 * self.g2 * self.p1_qd
    }

    /// Vacuum probability from the per-mode normalization
    /// `p0 + p1_QD + p1_L + p1_QD p1_L = 1`.
    pub fn vacuum_probability(&self) -> f64 {
        let p1l = self.laser_single_photon_probability();
        1.0 - self.p1_qd - p1l - self.p1_qd * p1l
    }

    /// Gram matrix of the three demultiplexed QD photons: adjacent pairs
    /// (0,1) and (1,2) at `m_near`, pair (0,2) at `m_far`.
    pub fn qd_gram(&self) -> GramMatrix {
        let mut overlaps = BTreeMap::new();
        overlaps.insert((0, 1), self.m_near);
        overlaps.insert((1, 2), self.m_near);
        overlaps.insert((0, 2), self.m_far);
        gram_from_pairwise(3, &overlaps).expect("source overlaps form a valid Gram matrix")
    }
}

/// Ratio of mean laser to mean QD photon number from the measured g2(0),
/// the non-negative root of `g2 = chi (2 + chi) / (1 + chi)^2`:
/// `chi = (1 - g2)^(-1/2) - 1`.
pub fn chi_from_g2(g2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g2) {
        return Err(Error::OutOfRange(format!("g2 {g2} outside [0, 1)")));
    }
    Ok((1.0 - g2).powf(-0.5) - 1.0)
}

/// Forward relation `g2(chi) = chi (2 + chi) / (1 + chi)^2`.
pub fn g2_from_chi(chi: f64) -> f64 {
    chi * (2.0 + chi) / ((1.0 + chi) * (1.0 + chi))
}

/// Probabilities over every n-photon occupation pattern of m output modes,
/// stored in the canonical enumeration order.
#[derive(Debug, Clone)]
pub struct OutputDistribution {
    n: usize,
    m: usize,
    patterns: Vec<OccupationPattern>,
    probs: Vec<f64>,
}

impl OutputDistribution {
    /// Wrap raw probabilities in canonical pattern order. Entries in
    /// `[-1e-12, 0)` are clamped to zero; more negative entries and sums
    /// away from 1 by more than 1e-9 are rejected.
    pub fn from_probs(n: usize, m: usize, probs: Vec<f64>) -> Result<Self> {
        let patterns = enumerate_patterns(n, m);
        if probs.len() != patterns.len() {
            return Err(Error::Dimension(format!(
                "expected {} probabilities for n={n}, m={m}, got {}",
                patterns.len(),
                probs.len()
            )));
        }
        let mut clamped = probs;
        for p in &mut clamped {
            if *p < 0.0 {
                if *p < -NEGATIVE_PROB_TOL {
                    return Err(Error::Numerical(format!("negative probability {p}")));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
            return Err(Error::Numerical(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(Self {
            n,
            m,
            patterns,
            probs: clamped,
        })
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn patterns(&self) -> &[OccupationPattern] {
        &self.patterns
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, pattern: &OccupationPattern) -> Option<f64> {
        crate::fock::pattern_index(pattern, self.n, self.m).map(|i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationPattern, f64)> {
        self.patterns.iter().zip(self.probs.iter().copied())
    }

    /// Weighted mixture of distributions over the same pattern space.
    /// Weights must be non-negative and sum to 1 within 1e-9.
    pub fn mix(components: &[(f64, OutputDistribution)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let (n, m) = (first.n, first.m);
        let mut probs = vec![0.0; first.probs.len()];
        let mut weight_sum = 0.0;
        for (w, dist) in components {
            if *w < 0.0 {
                return Err(Error::OutOfRange(format!("negative mixture weight {w}")));
            }
            if dist.n != n || dist.m != m {
                return Err(Error::Dimension(
                    "mixture components live on different pattern spaces".into(),
                ));
            }
            weight_sum += w;
            for (acc, p) in probs.iter_mut().zip(&dist.probs) {
                *acc += w * p;
            }
        }
        if (weight_sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {weight_sum}"
            )));
        }
        Self::from_probs(n, m, probs)
    }

    /// Largest absolute per-bin difference to `other`.
    pub fn max_bin_deviation(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Uniformly random point on the probability simplex (test utility).
    pub fn sample_random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let count = enumerate_patterns(n, m).len();
        let mut raw: Vec<f64> = (0..count)
            .map(|_| -rng.gen::<f64>().max(1e-300).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|x| *x /= sum);
        Self::from_probs(n, m, raw).expect("normalized by construction")
    }
}

/// Permanent by Ryser's inclusion-exclusion formula with Gray-code
/// subset updates, O(2^n n).
pub fn permanent(a: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "permanent needs a square matrix");
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    assert!(n <= 24, "permanent limited to n <= 24");
    let mut row_sums = vec![C64::default(); n];
    let mut total = C64::default();
    let mut prev_gray: u64 = 0;
    for k in 1u64..(1 << n) {
        let gray = k ^ (k >> 1);
        let changed = gray ^ prev_gray;
        let col = changed.trailing_zeros() as usize;
        if gray & changed != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += a[(i, col)];
            }
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= a[(i, col)];
            }
        }
        prev_gray = gray;
        let term: C64 = row_sums.iter().product();
        if (n as u32 - gray.count_ones()).is_multiple_of(2) {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Submatrix with rows `rows[j]` and columns `cols[k]` of `a`.
fn submatrix(a: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |j, k| a[(rows[j], cols[k])])
}

fn validate_ensemble(u: &CircuitUnitary, ens: &PhotonEnsemble) -> Result<()> {
    let m = u.modes();
    if let Some(p) = ens.photons().iter().find(|p| p.input_mode >= m) {
        return Err(Error::OutOfRange(format!(
            "input mode {} not below mode count {m}",
            p.input_mode
        )));
    }
    Ok(())
}

/// Permanent of the Gram matrix restricted to same-mode photon pairs.
/// This is the squared norm of the input state; it deviates from 1 only
/// when partially overlapping photons share an input mode.
fn input_norm(ens: &PhotonEnsemble) -> f64 {
    let n = ens.photon_count();
    let modes = ens.input_modes();
    let g = DMatrix::from_fn(n, n, |i, j| {
        if modes[i] == modes[j] {
            ens.gram().entry(i, j)
        } else {
            C64::default()
        }
    });
    permanent(&g).re
}

enum GramKind {
    AllOnes,
    Identity,
    General,
}

fn classify_gram(gram: &GramMatrix) -> GramKind {
    let n = gram.dimension();
    let mut all_ones = true;
    let mut identity = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = gram.entry(i, j);
            if (s - C64::new(1.0, 0.0)).norm() > 1e-14 {
                all_ones = false;
            }
            if s.norm() > 1e-14 {
                identity = false;
            }
        }
    }
    if all_ones {
        GramKind::AllOnes
    } else if identity {
        GramKind::Identity
    } else {
        GramKind::General
    }
}

/// Output distribution of the ensemble through circuit `u`.
///
/// The fully indistinguishable and fully distinguishable limits short-cut
/// through Ryser permanents of the relevant submatrices; every other Gram
/// matrix goes through the O(n!^2) permutation double sum, which is exact
/// and adequate for the n <= 5 scale targeted here.
pub fn distribution(u: &CircuitUnitary, ens: &PhotonEnsemble) -> Result<OutputDistribution> {
    validate_ensemble(u, ens)?;
    match classify_gram(ens.gram()) {
        GramKind::AllOnes => distribution_indistinguishable(u, ens),
        GramKind::Identity => distribution_distinguishable(u, ens),
        GramKind::General => distribution_permutation_sum(u, ens),
    }
}

fn distribution_indistinguishable(
    u: &CircuitUnitary,
    ens: &PhotonEnsemble,
) -> Result<OutputDistribution> {
    let n = ens.photon_count();
    let m = u.modes();
    let r = ens.input_modes();
    let norm = input_norm(ens);
    let patterns = enumerate_patterns(n, m);
    let probs = patterns
        .iter()
        .map(|t| {
            let d = t.mode_assignment();
            let sub = submatrix(u.matrix(), d.modes(), &r);
            permanent(&sub).norm_sqr() / t.multiplicity_factor() as f64 / norm
        })
        .collect();
    OutputDistribution::from_probs(n, m, probs)
}

fn distribution_distinguishable(
    u: &CircuitUnitary,
    ens: &PhotonEnsemble,
) -> Result<OutputDistribution> {
    let n = ens.photon_count();
    let m = u.modes();
    let r = ens.input_modes();
    let abs2 = u.matrix().map(|z| C64::new(z.norm_sqr(), 0.0));
    let patterns = enumerate_patterns(n, m);
    let probs = patterns
        .iter()
        .map(|t| {
            let d = t.mode_assignment();
            let sub = submatrix(&abs2, d.modes(), &r);
            permanent(&sub).re / t.multiplicity_factor() as f64
        })
        .collect();
    OutputDistribution::from_probs(n, m, probs)
}

pub(crate) fn distribution_permutation_sum(
    u: &CircuitUnitary,
    ens: &PhotonEnsemble,
) -> Result<OutputDistribution> {
    let n = ens.photon_count();
    let m = u.modes();
    let r = ens.input_modes();
    let s = ens.gram().matrix();
    let um = u.matrix();

    if n == 0 {
        return OutputDistribution::from_probs(0, m, vec![1.0]);
    }

    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let norm = input_norm(ens);
    if norm <= 0.0 {
        return Err(Error::Numerical(format!("input norm {norm} not positive")));
    }

    // Pairwise Gram products prod_j S[rho(j), sigma(j)], shared by all
    // output patterns. sigma rides with the unconjugated amplitudes (ket
    // side), rho with the conjugated ones (bra side).
    let mut gram_products = vec![C64::default(); perms.len() * perms.len()];
    for (a, sigma) in perms.iter().enumerate() {
        for (b, rho) in perms.iter().enumerate() {
            let mut prod = C64::new(1.0, 0.0);
            for j in 0..n {
                prod *= s[(rho[j], sigma[j])];
            }
            gram_products[a * perms.len() + b] = prod;
        }
    }

    let patterns = enumerate_patterns(n, m);
    let mut probs = Vec::with_capacity(patterns.len());
    for t in &patterns {
        let d = t.mode_assignment();
        let d = d.modes();
        // amp[sigma] = prod_j U[d_j, r[sigma(j)]]
        let amps: Vec<C64> = perms
            .iter()
            .map(|sigma| {
                let mut prod = C64::new(1.0, 0.0);
                for j in 0..n {
                    prod *= um[(d[j], r[sigma[j]])];
                }
                prod
            })
            .collect();
        let mut acc = C64::default();
        for a in 0..perms.len() {
            for b in 0..perms.len() {
                acc += gram_products[a * perms.len() + b] * amps[a] * amps[b].conj();
            }
        }
        let value = acc / t.multiplicity_factor() as f64 / norm;
        if value.im.abs() > IMAG_RESIDUE_TOL {
            return Err(Error::Numerical(format!(
                "probability of {t} has imaginary residue {}",
                value.im
            )));
        }
        probs.push(value.re);
    }
    OutputDistribution::from_probs(n, m, probs)
}

/// Positive semidefinite Cholesky-style factorization `S = L L^dagger`
/// with zero pivots allowed; verified against `S` before returning.
fn psd_factor(s: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = s.nrows();
    let mut l = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d > 1e-12 {
            let pivot = d.sqrt();
            l[(j, j)] = C64::new(pivot, 0.0);
            for i in (j + 1)..n {
                let mut acc = s[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc / pivot;
            }
        }
        // d <= tol: pivot treated as exactly zero; the column stays zero
        // and the final residual check catches any inconsistency.
    }
    let residual = (&l * l.adjoint() - s).map(|z| z.norm()).max();
    if residual > 1e-8 {
        return Err(Error::NotPsd(-residual));
    }
    Ok(l)
}

/// Brute-force reference distribution via first-quantized expansion.
///
/// The Gram matrix is factored as `S = L L^dagger`; photon `j` becomes a
/// single excitation of the composite mode space (spatial mode `r_j`)
/// tensor (internal vector `conj(row j of L)`). The output state under
/// `U (x) I` is expanded over composite occupation patterns with bosonic
/// factorial weights, probabilities are marginalized onto spatial
/// patterns, and the total is normalized. Exponential cost; intended for
/// n <= 4, m <= 4 verification runs.
pub fn oracle_distribution(u: &CircuitUnitary, ens: &PhotonEnsemble) -> Result<OutputDistribution> {
    validate_ensemble(u, ens)?;
    let n = ens.photon_count();
    let m = u.modes();
    if n == 0 {
        return OutputDistribution::from_probs(0, m, vec![1.0]);
    }
    let composite_dim = m * n;
    if (composite_dim as f64).powi(n as i32) > 5e7 {
        return Err(Error::InvalidArgument(format!(
            "oracle expansion too large for n={n}, m={m}"
        )));
    }
    let l = psd_factor(ens.gram().matrix())?;
    let r = ens.input_modes();
    let um = u.matrix();

    // w[j][p * n + q] = U[p, r_j] * conj(L[j, q]) — the amplitude for
    // photon j to land in composite mode (spatial p, internal q).
    let weights: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut w = vec![C64::default(); composite_dim];
            for p in 0..m {
                for q in 0..n {
                    w[p * n + q] = um[(p, r[j])] * l[(j, q)].conj();
                }
            }
            w
        })
        .collect();

    // Accumulate amplitudes per composite occupation pattern.
    let mut amplitudes: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
    let mut occupation = vec![0u8; composite_dim];
    fn expand(
        j: usize,
        n: usize,
        amp: C64,
        weights: &[Vec<C64>],
        occupation: &mut Vec<u8>,
        amplitudes: &mut BTreeMap<Vec<u8>, C64>,
    ) {
        if j == n {
            *amplitudes.entry(occupation.clone()).or_default() += amp;
            return;
        }
        for (c, &w) in weights[j].iter().enumerate() {
            if w.norm_sqr() == 0.0 {
                continue;
            }
            occupation[c] += 1;
            expand(j + 1, n, amp * w, weights, occupation, amplitudes);
            occupation[c] -= 1;
        }
    }
    expand(
        0,
        n,
        C64::new(1.0, 0.0),
        &weights,
        &mut occupation,
        &mut amplitudes,
    );

    let patterns = enumerate_patterns(n, m);
    let mut probs = vec![0.0f64; patterns.len()];
    let mut total = 0.0f64;
    for (occ, amp) in &amplitudes {
        let factorial_weight: f64 = occ
            .iter()
            .map(|&c| crate::fock::factorial(c as usize) as f64)
            .product();
        let p = factorial_weight * amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        total += p;
        let mut spatial = vec![0usize; m];
        for (c, &count) in occ.iter().enumerate() {
            spatial[c / n] += count as usize;
        }
        let pattern = OccupationPattern::new(spatial)?;
        let idx = crate::fock::pattern_index(&pattern, n, m)
            .ok_or_else(|| Error::Numerical("oracle produced an invalid pattern".into()))?;
        probs[idx] += p;
    }
    if total <= 0.0 {
        return Err(Error::Numerical("oracle total probability vanished".into()));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    OutputDistribution::from_probs(n, m, probs)
}

/// The ten relevant three-photon input states of the laser-contamination
/// mixture with their normalized weights: `|QD,QD,QD>`, the six
/// single-mode QD+laser collision states, and the three states where a
/// laser photon replaces one QD photon. Laser photons are fully
/// distinguishable from QD photons.
pub fn mixture_input_states(
    src: &SourceModel,
    gram_qd: &GramMatrix,
) -> Result<Vec<(f64, PhotonEnsemble)>> {
    if gram_qd.dimension() != 3 {
        return Err(Error::Dimension(format!(
            "mixture model needs a 3x3 QD Gram matrix, got {}",
            gram_qd.dimension()
        )));
    }
    let p1 = src.p1_qd;
    let p1l = src.laser_single_photon_probability();
    let p0 = src.vacuum_probability();
    if p0 < 0.0 {
        return Err(Error::OutOfRange(format!(
            "source model gives negative vacuum probability {p0}"
        )));
    }

    let mut states: Vec<(f64, PhotonEnsemble)> = Vec::with_capacity(10);

    // Three QD photons, one per mode.
    let qd_photons: Vec<Photon> = (0..3).map(|k| Photon::new(k, format!("qd{k}"))).collect();
    states.push((
        p1.powi(3),
        PhotonEnsemble::new(qd_photons, gram_qd.clone())?,
    ));

    // QD+laser in mode a, QD in mode b, vacuum elsewhere.
    for a in 0..3 {
        for b in 0..3 {
            if b == a {
                continue;
            }
            let photons = vec![
                Photon::new(a, format!("qd{a}")),
                Photon::new(a, "laser"),
                Photon::new(b, format!("qd{b}")),
            ];
            let mut s = DMatrix::<C64>::identity(3, 3);
            s[(0, 2)] = gram_qd.entry(a, b);
            s[(2, 0)] = gram_qd.entry(b, a);
            states.push((
                p0 * p1 * p1 * p1l,
                PhotonEnsemble::new(photons, GramMatrix::new(s)?)?,
            ));
        }
    }

    // Laser photon in mode c replacing the QD photon there.
    for c in 0..3 {
        let (a, b) = match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let photons = vec![
            Photon::new(a, format!("qd{a}")),
            Photon::new(b, format!("qd{b}")),
            Photon::new(c, "laser"),
        ];
        let mut s = DMatrix::<C64>::identity(3, 3);
        s[(0, 1)] = gram_qd.entry(a, b);
        s[(1, 0)] = gram_qd.entry(b, a);
        states.push((
            p1 * p1 * p1l,
            PhotonEnsemble::new(photons, GramMatrix::new(s)?)?,
        ));
    }

    let total: f64 = states.iter().map(|(w, _)| w).sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument(
            "mixture has zero total three-photon weight".into(),
        ));
    }
    for (w, _) in &mut states {
        *w /= total;
    }
    Ok(states)
}

/// Output distribution of the laser-contamination input mixture through
/// circuit `u`, conditioned on exactly three photons at the input.
pub fn mixture_distribution(
    u: &CircuitUnitary,
    src: &SourceModel,
    gram_qd: &GramMatrix,
) -> Result<OutputDistribution> {
    if u.modes() != 3 {
        return Err(Error::Dimension(format!(
            "mixture model is defined for 3 modes, circuit has {}",
            u.modes()
        )));
    }
    let states = mixture_input_states(src, gram_qd)?;
    let mut components = Vec::with_capacity(states.len());
    for (w, ens) in &states {
        components.push((*w, distribution(u, ens)?));
    }
    OutputDistribution::mix(&components)
}

/// Random Gram matrix of unit vectors in C^n (test utility): Hermitian,
/// unit diagonal, positive semidefinite by construction.
pub fn random_gram<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GramMatrix {
    let vectors: Vec<DVector<C64>> = (0..n)
        .map(|_| {
            let v = DVector::from_fn(n, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let norm = v.norm();
            v / C64::new(norm, 0.0)
        })
        .collect();
    let s = DMatrix::from_fn(n, n, |i, j| vectors[i].dotc(&vectors[j]));
    GramMatrix::new(s).expect("Gram matrix of unit vectors is valid")
}
