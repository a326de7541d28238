//! Interferometer unitaries: directional couplers, phase shifters, serial
//! composition, the reconfigurable three-mode tritter, and the ideal
//! (Fourier) tritter reference.
//!
//! Matrices are transfer matrices: element `(j, k)` is the amplitude from
//! input mode `k` to output mode `j`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Maximum allowed max-norm residual of `U†U - I` for a circuit unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

/// An `m x m` unitary transfer matrix with a free-text label.
///
/// Unitarity is verified on construction to within [`UNITARITY_TOL`].
#[derive(Debug, Clone)]
pub struct CircuitUnitary {
    matrix: DMatrix<C64>,
    label: String,
}

impl CircuitUnitary {
    pub fn new(matrix: DMatrix<C64>, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "expected a square non-empty matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let residual = unitarity_residual(&matrix);
        if residual > UNITARITY_TOL {
            return Err(Error::NotUnitary {
                residual,
                tol: UNITARITY_TOL,
            });
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    /// Mode count `m`.
    pub fn modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Max-norm residual of `U†U - I`.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }

    /// Conjugate transpose (the inverse circuit).
    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            label: format!("{}^dagger", self.label),
        }
    }

    pub fn element(&self, j: usize, k: usize) -> C64 {
        self.matrix[(j, k)]
    }
}

pub(crate) fn unitarity_residual(matrix: &DMatrix<C64>) -> f64 {
    let m = matrix.nrows();
    let gram = matrix.adjoint() * matrix;
    let mut residual = 0.0f64;
    for j in 0..m {
        for k in 0..m {
            let expected = if j == k {
                C64::new(1.0, 0.0)
            } else {
                C64::default()
            };
            residual = residual.max((gram[(j, k)] - expected).norm());
        }
    }
    residual
}

/// Directional coupler of reflectivity `r` acting on modes `(i, j)` of an
/// `m`-mode circuit. The 2x2 block is `[[sqrt(r), i sqrt(1-r)], [i sqrt(1-r), sqrt(r)]]`:
/// the cross-coupled amplitude carries phase `i`.
pub fn coupler_unitary(r: f64, i: usize, j: usize, m: usize) -> Result<CircuitUnitary> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::OutOfRange(format!(
            "reflectivity {r} outside [0, 1]"
        )));
    }
    if i == j {
        return Err(Error::InvalidArgument(
            "coupler modes must be distinct".into(),
        ));
    }
    if i >= m || j >= m {
        return Err(Error::OutOfRange(format!(
            "coupler modes ({i}, {j}) not below mode count {m}"
        )));
    }
    let t = C64::new(0.0, (1.0 - r).sqrt());
    let d = C64::new(r.sqrt(), 0.0);
    let mut matrix = DMatrix::identity(m, m);
    matrix[(i, i)] = d;
    matrix[(j, j)] = d;
    matrix[(i, j)] = t;
    matrix[(j, i)] = t;
    CircuitUnitary::new(matrix, format!("DC(r={r}, modes={i},{j})"))
}

/// Phase shifter: `exp(i phi)` on mode `k`, identity elsewhere.
pub fn phase_unitary(phi: f64, k: usize, m: usize) -> Result<CircuitUnitary> {
    if k >= m {
        return Err(Error::OutOfRange(format!(
            "phase mode {k} not below mode count {m}"
        )));
    }
    let mut matrix = DMatrix::identity(m, m);
    matrix[(k, k)] = C64::from_polar(1.0, phi);
    CircuitUnitary::new(matrix, format!("PS(phi={phi}, mode={k})"))
}

/// Serial composition in propagation order: the first element acts first on
/// the input state, so the product is `U_last ... U_1 U_0`.
pub fn compose(stages: &[CircuitUnitary]) -> Result<CircuitUnitary> {
    let first = stages
        .first()
        .ok_or_else(|| Error::InvalidArgument("compose needs at least one stage".into()))?;
    let m = first.modes();
    let mut matrix = first.matrix.clone();
    for stage in &stages[1..] {
        if stage.modes() != m {
            return Err(Error::Dimension(format!(
                "stage {:?} has {} modes, expected {m}",
                stage.label(),
                stage.modes()
            )));
        }
        matrix = &stage.matrix * matrix;
    }
    CircuitUnitary::new(matrix, "composed")
}

/// The symmetric (Fourier) tritter: `U[j][k] = exp(i 2 pi j k / 3) / sqrt(3)`
/// with zero-based indices.
pub fn ideal_tritter() -> CircuitUnitary {
    let norm = 1.0 / 3.0f64.sqrt();
    let matrix = DMatrix::from_fn(3, 3, |j, k| {
        C64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * k) as f64 / 3.0)
    });
    CircuitUnitary::new(matrix, "ideal tritter").expect("Fourier matrix is unitary")
}

/// Reflectivities and phase setting of the physical tritter circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TritterLayout {
    /// Reflectivity of the first and last directional couplers.
    pub r1: f64,
    /// Reflectivity of the middle directional coupler.
    pub r2: f64,
    /// Intermediate phase shift in radians.
    pub phi: f64,
}

impl TritterLayout {
    pub fn new(r1: f64, r2: f64, phi: f64) -> Result<Self> {
        for (name, r) in [("r1", r1), ("r2", r2)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::OutOfRange(format!("{name}={r} outside [0, 1]")));
            }
        }
        Ok(Self { r1, r2, phi })
    }

    /// The nominal operating point: R1 = 1/2, R2 = 1/3, phi = pi/2, at which
    /// the circuit is visibility-equivalent to the ideal tritter.
    pub fn nominal() -> Self {
        Self {
            r1: 0.5,
            r2: 1.0 / 3.0,
            phi: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Assemble the three-coupler tritter:
/// `DC(0,1; r1) -> DC(1,2; r2) -> phase on mode 1 -> DC(0,1; r1)`.
///
/// At `phi = pi/2` or `3 pi/2` (with nominal reflectivities) the resulting
/// matrix is balanced and its visibility matrix equals the ideal tritter's;
/// elementwise equality is not expected because of diagonal phase freedom.
pub fn build_tritter(layout: &TritterLayout) -> Result<CircuitUnitary> {
    let stages = [
        coupler_unitary(layout.r1, 0, 1, 3)?,
        coupler_unitary(layout.r2, 1, 2, 3)?,
        phase_unitary(layout.phi, 1, 3)?,
        coupler_unitary(layout.r1, 0, 1, 3)?,
    ];
    let composed = compose(&stages)?;
    CircuitUnitary::new(
        composed.matrix,
        format!(
            "tritter(r1={}, r2={}, phi={})",
            layout.r1, layout.r2, layout.phi
        ),
    )
}

/// Voltage-to-phase lookup table for a thermo-optic phase shifter,
/// interpolated piecewise-linearly. The underlying thermal physics is not
/// modeled; the table is a calibration artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCalibration {
    /// `(volts, radians)` pairs with strictly increasing voltage.
    points: Vec<(f64, f64)>,
}

impl PhaseCalibration {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "calibration needs at least two points".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument(
                "calibration voltages must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Interpolated phase at voltage `v`; errors outside the table range.
    pub fn phase_at(&self, v: f64) -> Result<f64> {
        let (v_min, _) = self.points[0];
        let (v_max, _) = *self.points.last().unwrap();
        if v < v_min || v > v_max {
            return Err(Error::OutOfRange(format!(
                "voltage {v} outside calibration range [{v_min}, {v_max}]"
            )));
        }
        let seg = self
            .points
            .windows(2)
            .find(|w| v <= w[1].0)
            .expect("v is within range");
        let (v0, p0) = seg[0];
        let (v1, p1) = seg[1];
        Ok(p0 + (p1 - p0) * (v - v0) / (v1 - v0))
    }
}

/// Phase for a drive voltage, from the calibration table.
pub fn phase_from_voltage(cal: &PhaseCalibration, v: f64) -> Result<f64> {
    cal.phase_at(v)
}

/// Haar-random `m x m` unitary: QR of a complex Ginibre matrix with the
/// phases of the R diagonal folded into Q.
pub fn random_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CircuitUnitary {
    let ginibre = DMatrix::from_fn(m, m, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..m {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for j in 0..m {
            q[(j, k)] *= phase;
        }
    }
    CircuitUnitary::new(q, "random unitary").expect("QR factor is unitary")
}
