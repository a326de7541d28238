//! End-to-end rate and loss accounting: chained per-photon efficiencies
//! from the pulsed source through demultiplexing, the chip, and detection.

use crate::error::{Error, Result};

/// Ordered chain of per-photon efficiencies and the demultiplexer
/// conversion factor for an n-photon experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetPipeline {
    /// Pump repetition rate in Hz.
    pub rep_rate: f64,
    /// Probability per pulse of a photon in the collection fiber.
    pub fibered_brightness: f64,
    /// Demultiplexer transmission per photon.
    pub demux_transmission: f64,
    /// Chip transmission including fiber-array coupling, per photon.
    pub chip_transmission: f64,
    /// Detector efficiency per photon.
    pub det_efficiency: f64,
    /// Photon number n.
    pub n: usize,
    /// Demultiplexer conversion rate C_n.
    pub demux_conversion: f64,
    /// Calibrated n-photon source rate in Hz, overriding the model.
    pub measured_source_rate: Option<f64>,
}

impl BudgetPipeline {
    pub fn validate(&self) -> Result<()> {
        if self.rep_rate <= 0.0 {
            return Err(Error::OutOfRange("repetition rate must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::OutOfRange("need at least one photon".into()));
        }
        for (name, value) in [
            ("fibered_brightness", self.fibered_brightness),
            ("demux_transmission", self.demux_transmission),
            ("chip_transmission", self.chip_transmission),
            ("det_efficiency", self.det_efficiency),
            ("demux_conversion", self.demux_conversion),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange(format!(
                    "{name} = {value} outside [0, 1]"
                )));
            }
        }
        if let Some(rate) = self.measured_source_rate {
            if rate < 0.0 {
                return Err(Error::OutOfRange("measured source rate negative".into()));
            }
        }
        Ok(())
    }

    /// n-photon rate at the demultiplexer output: the calibrated override
    /// when present, otherwise
    /// `rep_rate * (fibered_brightness * demux_transmission)^n * C_n`.
    pub fn n_photon_source_rate(&self) -> f64 {
        if let Some(rate) = self.measured_source_rate {
            return rate;
        }
        self.rep_rate
            * (self.fibered_brightness * self.demux_transmission).powi(self.n as i32)
            * self.demux_conversion
    }

    /// Full generated/detected rate table at the source and after the chip.
    pub fn projection(&self) -> RateTable {
        let source = self.n_photon_source_rate();
        let det = self.det_efficiency.powi(self.n as i32);
        let chip = self.chip_transmission.powi(self.n as i32);
        RateTable {
            n: self.n,
            rows: vec![
                RateRow {
                    stage: "source".into(),
                    generated: source,
                    detected: source * det,
                },
                RateRow {
                    stage: "after_chip".into(),
                    generated: source * chip,
                    detected: source * chip * det,
                },
            ],
        }
    }
}

/// Rate after an extra stage of per-photon efficiency `eff`:
/// `source_rate * eff^n`.
pub fn downstream_rate(source_rate: f64, per_photon_eff: f64, n: usize) -> f64 {
    source_rate * per_photon_eff.powi(n as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub stage: String,
    pub generated: f64,
    pub detected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub n: usize,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn row(&self, stage: &str) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.stage == stage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn measured_pipeline() -> BudgetPipeline {
        BudgetPipeline {
            rep_rate: 324e6,
            fibered_brightness: 0.07,
            demux_transmission: 0.63,
            chip_transmission: 0.17,
            det_efficiency: 0.30,
            n: 3,
            demux_conversion: 0.25,
            measured_source_rate: None,
        }
    }

    #[test]
    fn model_rate_lands_near_the_measured_value() {
        let p = measured_pipeline();
        let rate = p.n_photon_source_rate();
        assert_abs_diff_eq!(rate, 324e6 * (0.07f64 * 0.63).powi(3) * 0.25, epsilon = 1.0);
        assert!((rate - 6948.0).abs() < 10.0, "model rate {rate}");
        // Within a factor of two of the calibrated 3.8 kHz; the gap is
        // attributed to finite switching contrast.
        let ratio = rate / 3800.0;
        assert!(ratio > 0.5 && ratio < 2.0, "ratio {ratio}");
    }

    #[test]
    fn measured_override_wins() {
        let mut p = measured_pipeline();
        p.measured_source_rate = Some(3800.0);
        assert_abs_diff_eq!(p.n_photon_source_rate(), 3800.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_efficiencies_pass_the_rep_rate_through() {
        let p = BudgetPipeline {
            rep_rate: 1.0,
            fibered_brightness: 1.0,
            demux_transmission: 1.0,
            chip_transmission: 1.0,
            det_efficiency: 1.0,
            n: 3,
            demux_conversion: 1.0,
            measured_source_rate: None,
        };
        assert_abs_diff_eq!(p.n_photon_source_rate(), 1.0, epsilon = 1e-15);
        let table = p.projection();
        for row in &table.rows {
            assert_abs_diff_eq!(row.generated, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(row.detected, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn downstream_rate_examples() {
        assert_abs_diff_eq!(downstream_rate(3800.0, 0.30, 3), 102.6, epsilon = 1e-9);
        assert!((downstream_rate(3800.0, 0.30, 3) - 105.0).abs() / 105.0 < 0.05);
        assert_abs_diff_eq!(downstream_rate(3800.0, 0.17, 3), 18.6694, epsilon = 1e-3);
        assert!((downstream_rate(3800.0, 0.17, 3) - 19.0).abs() / 19.0 < 0.05);
        assert_abs_diff_eq!(downstream_rate(19.0, 0.30, 3), 0.513, epsilon = 1e-9);
        assert!((downstream_rate(19.0, 0.30, 3) - 0.5).abs() / 0.5 < 0.05);
    }

    #[test]
    fn chaining_efficiencies_is_associative() {
        let a = downstream_rate(downstream_rate(5000.0, 0.8, 3), 0.5, 3);
        let b = downstream_rate(5000.0, 0.8 * 0.5, 3);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn rates_monotone_in_efficiencies() {
        let base = measured_pipeline();
        let rate0 = base.n_photon_source_rate();
        for bump in [
            |p: &mut BudgetPipeline| p.rep_rate *= 1.1,
            |p: &mut BudgetPipeline| p.fibered_brightness += 0.01,
            |p: &mut BudgetPipeline| p.demux_transmission += 0.01,
            |p: &mut BudgetPipeline| p.demux_conversion += 0.01,
        ] {
            let mut p = base.clone();
            bump(&mut p);
            p.validate().unwrap();
            assert!(p.n_photon_source_rate() > rate0);
        }
    }

    #[test]
    fn measured_column_ratios_match_within_five_percent() {
        let mut p = measured_pipeline();
        p.measured_source_rate = Some(3800.0);
        let table = p.projection();
        let source = table.row("source").unwrap();
        let chip = table.row("after_chip").unwrap();
        let check = |computed: f64, anchor: f64| {
            assert!(
                (computed - anchor).abs() / anchor < 0.05,
                "{computed} vs {anchor}"
            );
        };
        check(source.detected / source.generated, 105.0 / 3800.0);
        check(chip.generated / source.generated, 19.0 / 3800.0);
        check(chip.detected / chip.generated, 0.5 / 19.0);
    }

    #[test]
    fn optimized_projection_matches_within_stated_factors() {
        let optimized = BudgetPipeline {
            rep_rate: 1e9,
            fibered_brightness: 0.50,
            demux_transmission: 0.85,
            chip_transmission: 0.60,
            det_efficiency: 0.90,
            n: 3,
            demux_conversion: 0.25,
            measured_source_rate: None,
        };
        let detected = optimized.projection().row("after_chip").unwrap().detected;
        let ratio = detected / 4.0e6;
        assert!(
            ratio > 0.5 && ratio < 2.0,
            "3-photon detected ratio {ratio}"
        );

        let ten = BudgetPipeline {
            n: 10,
            demux_conversion: crate::demux::ideal_active_conversion(10),
            ..optimized
        };
        let detected = ten.projection().row("after_chip").unwrap().detected;
        let ratio = detected / 40.0;
        assert!(
            ratio > 1.0 / 3.0 && ratio < 3.0,
            "10-photon detected ratio {ratio}"
        );
    }

    #[test]
    fn validation_rejects_bad_pipelines() {
        let mut p = measured_pipeline();
        p.chip_transmission = 1.2;
        assert!(p.validate().is_err());
        let mut p = measured_pipeline();
        p.rep_rate = 0.0;
        assert!(p.validate().is_err());
        let mut p = measured_pipeline();
        p.n = 0;
        assert!(p.validate().is_err());
    }
}
