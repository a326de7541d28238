//! TOML run configurations for the batch CLI. Every config is
//! schema-validated with unknown keys rejected before any computation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::budget::BudgetPipeline;
use crate::circuit::{
    build_tritter, compose, coupler_unitary, ideal_tritter, phase_unitary, CircuitUnitary,
    PhaseCalibration, TritterLayout, C64,
};
use crate::error::{Error, Result};
use crate::interference::{gram_from_pairwise, GramMatrix, SourceModel};

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_toml(&text)
}

/// Phase setting: directly in radians, or a drive voltage plus
/// calibration table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub radians: Option<f64>,
    pub volts: Option<f64>,
    /// `(voltage, radians)` rows, strictly increasing in voltage.
    pub calibration: Option<Vec<(f64, f64)>>,
}

impl PhaseSpec {
    pub fn resolve(&self) -> Result<f64> {
        match (self.radians, self.volts, &self.calibration) {
            (Some(phi), None, None) => Ok(phi),
            (None, Some(v), Some(table)) => {
                let cal = PhaseCalibration::new(table.clone())?;
                cal.phase_at(v)
            }
            _ => Err(Error::Config(
                "phase needs either `radians` or `volts` + `calibration`".into(),
            )),
        }
    }
}

/// One element of a serial circuit description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub coupler: Option<CouplerSpec>,
    pub phase: Option<PhaseElementSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerSpec {
    pub modes: (usize, usize),
    pub reflectivity: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseElementSpec {
    pub mode: usize,
    #[serde(flatten)]
    pub phase: PhaseSpec,
}

/// Circuit description. Externally tagged: a bare string for the ideal
/// reference (`circuit = "ideal-tritter"`), or one variant table like
/// `[circuit.tritter]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CircuitSpec {
    /// The ideal three-mode Fourier tritter.
    IdealTritter,
    /// Identity circuit on `modes` modes.
    Identity { modes: usize },
    /// Physical tritter from reflectivities and a phase setting.
    Tritter { r1: f64, r2: f64, phase: PhaseSpec },
    /// Serial element list on `modes` modes, first element acting first.
    Elements {
        modes: usize,
        elements: Vec<ElementSpec>,
    },
    /// Explicit complex matrix (must be unitary).
    Explicit {
        modes: usize,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
}

impl CircuitSpec {
    pub fn build(&self) -> Result<CircuitUnitary> {
        match self {
            CircuitSpec::IdealTritter => Ok(ideal_tritter()),
            CircuitSpec::Identity { modes } => {
                if *modes == 0 {
                    return Err(Error::Config("identity circuit needs modes >= 1".into()));
                }
                CircuitUnitary::new(nalgebra::DMatrix::identity(*modes, *modes), "identity")
            }
            CircuitSpec::Tritter { r1, r2, phase } => {
                let layout = TritterLayout::new(*r1, *r2, phase.resolve()?)?;
                build_tritter(&layout)
            }
            CircuitSpec::Elements { modes, elements } => {
                let mut stages = Vec::with_capacity(elements.len());
                for element in elements {
                    match (&element.coupler, &element.phase) {
                        (Some(c), None) => {
                            stages.push(coupler_unitary(
                                c.reflectivity,
                                c.modes.0,
                                c.modes.1,
                                *modes,
                            )?);
                        }
                        (None, Some(p)) => {
                            stages.push(phase_unitary(p.phase.resolve()?, p.mode, *modes)?);
                        }
                        _ => {
                            return Err(Error::Config(
                                "each element is exactly one of `coupler` or `phase`".into(),
                            ));
                        }
                    }
                }
                compose(&stages)
            }
            CircuitSpec::Explicit { modes, re, im } => {
                let m = *modes;
                if re.len() != m
                    || im.len() != m
                    || re.iter().any(|r| r.len() != m)
                    || im.iter().any(|r| r.len() != m)
                {
                    return Err(Error::Config(format!("explicit matrix must be {m}x{m}")));
                }
                let matrix = nalgebra::DMatrix::from_fn(m, m, |j, k| C64::new(re[j][k], im[j][k]));
                CircuitUnitary::new(matrix, "explicit")
            }
        }
    }
}

/// Pairwise indistinguishability table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramSpec {
    /// Rows `{ i, j, m }` with `m = |<psi_i|psi_j>|^2`.
    pub pairs: Vec<PairOverlap>,
    pub photons: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairOverlap {
    pub i: usize,
    pub j: usize,
    pub m: f64,
}

impl GramSpec {
    pub fn build(&self) -> Result<GramMatrix> {
        let mut overlaps = BTreeMap::new();
        for pair in &self.pairs {
            overlaps.insert((pair.i, pair.j), pair.m);
        }
        gram_from_pairwise(self.photons, &overlaps)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub p1_qd: f64,
    pub g2: f64,
    pub m_near: f64,
    pub m_far: f64,
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceModel> {
        SourceModel::new(self.p1_qd, self.g2, self.m_near, self.m_far)
    }
}

/// `simulate` run: output distribution of a circuit, either for an
/// explicit photon ensemble or for the full source mixture.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub circuit: CircuitSpec,
    /// Input modes, one per photon (pure-ensemble runs).
    pub input_modes: Option<Vec<usize>>,
    /// Pairwise overlaps of the input photons (pure-ensemble runs);
    /// omitted means fully indistinguishable.
    pub gram: Option<GramSpec>,
    /// Source model: when present the run computes the three-photon
    /// laser-contamination mixture instead of a pure ensemble.
    pub source: Option<SourceSpec>,
}

/// `demux` run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemuxConfig {
    pub arms: usize,
    pub period_ns: f64,
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    #[serde(default)]
    pub rise_time_ns: f64,
    #[serde(default = "default_grid_ns")]
    pub grid_ns: f64,
    /// Report the scheme as switched off (static routing).
    #[serde(default)]
    pub passive: bool,
    /// Measured active-to-passive ratio, for the active efficiency.
    pub r_exp: Option<f64>,
    /// Export the arm waveforms as CSV files.
    #[serde(default)]
    pub export_waveforms: bool,
}

fn default_contrast() -> f64 {
    1.0
}

fn default_grid_ns() -> f64 {
    0.1
}

/// `reconstruct` run: synthetic measurements of a target circuit, or
/// imported CSV data.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Target circuit for synthetic measurements.
    pub target: Option<CircuitSpec>,
    /// Draw the target as a Haar-random unitary on `random_modes` modes.
    pub random_modes: Option<usize>,
    /// Relative intensity noise of the synthetic measurements.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Imported measurement data (alternative to synthetic).
    pub intensity_csv: Option<String>,
    pub fringes_csv: Option<String>,
}

/// `budget` run: one or more named pipeline scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub scenario: Vec<BudgetScenario>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetScenario {
    pub name: String,
    pub rep_rate_hz: f64,
    pub fibered_brightness: f64,
    pub demux_transmission: f64,
    pub chip_transmission: f64,
    pub det_efficiency: f64,
    pub photons: usize,
    /// Demultiplexer conversion rate; defaults to the ideal
    /// cascaded-binary value for `photons` arms.
    pub demux_conversion: Option<f64>,
    pub measured_source_rate_hz: Option<f64>,
}

impl BudgetScenario {
    pub fn build(&self) -> Result<BudgetPipeline> {
        let pipeline = BudgetPipeline {
            rep_rate: self.rep_rate_hz,
            fibered_brightness: self.fibered_brightness,
            demux_transmission: self.demux_transmission,
            chip_transmission: self.chip_transmission,
            det_efficiency: self.det_efficiency,
            n: self.photons,
            demux_conversion: self
                .demux_conversion
                .unwrap_or_else(|| crate::demux::ideal_active_conversion(self.photons.max(1))),
            measured_source_rate: self.measured_source_rate_hz,
        };
        pipeline.validate()?;
        Ok(pipeline)
    }
}

/// `oracle-check` run: randomized engine-vs-oracle comparison.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckConfig {
    #[serde(default = "default_cases")]
    pub cases: usize,
    #[serde(default = "default_max_photons")]
    pub max_photons: usize,
    #[serde(default = "default_max_modes")]
    pub max_modes: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_cases() -> usize {
    100
}

fn default_max_photons() -> usize {
    4
}

fn default_max_modes() -> usize {
    4
}

fn default_tolerance() -> f64 {
    1e-10
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tritter_spec_with_voltage_calibration() {
        let text = r#"
            [circuit.tritter]
            r1 = 0.5
            r2 = 0.3333333333333333
            phase = { volts = 3.1, calibration = [[0.0, 0.0], [3.1, 1.5707963267948966]] }
        "#;
        let cfg: SimulateConfig = parse_toml(text).unwrap();
        let u = cfg.circuit.build().unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert_abs_diff_eq!(u.element(j, k).norm_sqr(), 1.0 / 3.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn element_list_builds_the_same_tritter() {
        let text = r#"
            [circuit.elements]
            modes = 3

            [[circuit.elements.elements]]
            coupler = { modes = [0, 1], reflectivity = 0.5 }

            [[circuit.elements.elements]]
            coupler = { modes = [1, 2], reflectivity = 0.3333333333333333 }

            [[circuit.elements.elements]]
            phase = { mode = 1, radians = 1.5707963267948966 }

            [[circuit.elements.elements]]
            coupler = { modes = [0, 1], reflectivity = 0.5 }
        "#;
        let cfg: SimulateConfig = parse_toml(text).unwrap();
        let u = cfg.circuit.build().unwrap();
        let reference = build_tritter(&TritterLayout::nominal()).unwrap();
        let dev = (u.matrix() - reference.matrix()).map(|z| z.norm()).max();
        assert!(dev < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
            circuit = "ideal-tritter"
            bogus = 1
        "#;
        assert!(parse_toml::<SimulateConfig>(text).is_err());

        let text = r#"
            [circuit.tritter]
            r1 = 0.5
            r2 = 0.3333333333333333
            phase = { radians = 1.5707963267948966 }
            bogus = 1
        "#;
        assert!(parse_toml::<SimulateConfig>(text).is_err());

        let text = r#"
            arms = 3
            period_ns = 200.0
            extra_knob = true
        "#;
        assert!(parse_toml::<DemuxConfig>(text).is_err());
    }

    #[test]
    fn phase_spec_requires_exactly_one_form() {
        let bad = PhaseSpec {
            radians: Some(1.0),
            volts: Some(1.0),
            calibration: None,
        };
        assert!(bad.resolve().is_err());
        let bad = PhaseSpec {
            radians: None,
            volts: None,
            calibration: None,
        };
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn explicit_matrix_must_be_unitary() {
        let text = r#"
            [circuit.explicit]
            modes = 2
            re = [[1.0, 0.0], [0.0, 2.0]]
            im = [[0.0, 0.0], [0.0, 0.0]]
        "#;
        let cfg: SimulateConfig = parse_toml(text).unwrap();
        assert!(cfg.circuit.build().is_err());
    }

    #[test]
    fn budget_scenario_defaults_conversion() {
        let text = r#"
            [[scenario]]
            name = "ten"
            rep_rate_hz = 1e9
            fibered_brightness = 0.5
            demux_transmission = 0.85
            chip_transmission = 0.6
            det_efficiency = 0.9
            photons = 10
        "#;
        let cfg: BudgetConfig = parse_toml(text).unwrap();
        let pipeline = cfg.scenario[0].build().unwrap();
        assert_abs_diff_eq!(pipeline.demux_conversion, 1.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn gram_spec_builds() {
        let text = r#"
            photons = 3
            pairs = [
                { i = 0, j = 1, m = 0.90 },
                { i = 1, j = 2, m = 0.90 },
                { i = 0, j = 2, m = 0.88 },
            ]
        "#;
        let spec: GramSpec = parse_toml(text).unwrap();
        let gram = spec.build().unwrap();
        assert_abs_diff_eq!(gram.entry(0, 2).re, 0.88f64.sqrt(), epsilon = 1e-12);
    }
}
