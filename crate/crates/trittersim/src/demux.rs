//! Time-to-space demultiplexer model: periodic routing waveforms, active
//! and passive conversion rates, and active efficiency.
//!
//! A demultiplexer turns the temporal photon train of a pulsed source into
//! simultaneous spatial modes. Each output arm carries a relative routing
//! signal over one demultiplexing period; the active conversion rate is
//! the time average of the product of all arm signals, evaluated on the
//! *aligned* waveforms (the experiment's fibered delays are folded into
//! the waveform time origins, since only the aligned overlap matters).

use crate::error::{Error, Result};

/// Default sampling step for generated waveforms, 0.1 ns.
pub const DEFAULT_GRID_STEP: f64 = 0.1e-9;

/// A non-negative routing signal sampled on a uniform grid covering exactly
/// one period, endpoints included (`samples[0]` at t = 0, last sample at
/// t = period).
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingWaveform {
    samples: Vec<f64>,
    period: f64,
}

impl RoutingWaveform {
    pub fn new(samples: Vec<f64>, period: f64) -> Result<Self> {
        if period <= 0.0 {
            return Err(Error::OutOfRange(format!(
                "period {period} must be positive"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(
                "waveform needs at least two samples".into(),
            ));
        }
        if let Some(&bad) = samples.iter().find(|&&s| !(0.0..=1.0).contains(&s)) {
            return Err(Error::OutOfRange(format!(
                "waveform sample {bad} outside [0, 1]"
            )));
        }
        Ok(Self { samples, period })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Grid spacing in seconds.
    pub fn step(&self) -> f64 {
        self.period / (self.samples.len() - 1) as f64
    }

    /// Time-averaged level over one period (trapezoidal rule); for a
    /// square wave this is its duty cycle.
    pub fn duty_cycle(&self) -> f64 {
        trapezoid(&self.samples) / (self.samples.len() - 1) as f64
    }
}

fn trapezoid(samples: &[f64]) -> f64 {
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    inner + 0.5 * (samples[0] + samples[samples.len() - 1])
}

/// Periodic routing description of an n-arm demultiplexer.
#[derive(Debug, Clone)]
pub struct DemuxScheme {
    pub waveforms: Vec<RoutingWaveform>,
    pub arm_transmissions: Vec<f64>,
    /// Modulation extinction in [0, 1]: 1 is a perfect square switch.
    pub contrast: f64,
    /// Linear rise/fall duration of each switching edge, seconds.
    pub rise_time: f64,
}

impl DemuxScheme {
    pub fn validate(&self) -> Result<()> {
        if self.waveforms.is_empty() {
            return Err(Error::InvalidArgument("scheme has no output arms".into()));
        }
        let period = self.waveforms[0].period();
        let len = self.waveforms[0].samples().len();
        for w in &self.waveforms {
            if (w.period() - period).abs() > 1e-15 * period.max(1.0) || w.samples().len() != len {
                return Err(Error::Dimension(
                    "waveforms must share one period and grid".into(),
                ));
            }
        }
        if self.arm_transmissions.len() != self.waveforms.len() {
            return Err(Error::Dimension(
                "one transmission per output arm required".into(),
            ));
        }
        if let Some(&bad) = self
            .arm_transmissions
            .iter()
            .find(|&&t| !(0.0..=1.0).contains(&t))
        {
            return Err(Error::OutOfRange(format!(
                "arm transmission {bad} outside [0, 1]"
            )));
        }
        Ok(())
    }

    pub fn arms(&self) -> usize {
        self.waveforms.len()
    }

    /// Static exit probabilities of the arms (the duty cycles), which is
    /// what the scheme degrades to when modulation is switched off.
    pub fn passive_probabilities(&self) -> Vec<f64> {
        self.waveforms.iter().map(|w| w.duty_cycle()).collect()
    }
}

/// Builder for the ideal cascaded-binary routing scheme with optional
/// finite contrast and edge rise time.
#[derive(Debug, Clone)]
pub struct SchemeBuilder {
    arms: usize,
    period: f64,
    contrast: f64,
    rise_time: f64,
    grid_step: f64,
}

impl SchemeBuilder {
    pub fn new(arms: usize, period: f64) -> Self {
        Self {
            arms,
            period,
            contrast: 1.0,
            rise_time: 0.0,
            grid_step: DEFAULT_GRID_STEP,
        }
    }

    pub fn contrast(mut self, contrast: f64) -> Self {
        self.contrast = contrast;
        self
    }

    pub fn rise_time(mut self, rise_time: f64) -> Self {
        self.rise_time = rise_time;
        self
    }

    pub fn grid_step(mut self, grid_step: f64) -> Self {
        self.grid_step = grid_step;
        self
    }

    pub fn build(&self) -> Result<DemuxScheme> {
        if self.arms == 0 {
            return Err(Error::InvalidArgument("need at least one arm".into()));
        }
        if self.period <= 0.0 || self.grid_step <= 0.0 {
            return Err(Error::OutOfRange(
                "period and grid step must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::OutOfRange(format!(
                "contrast {} outside [0, 1]",
                self.contrast
            )));
        }
        if self.rise_time < 0.0 {
            return Err(Error::OutOfRange("rise time must be non-negative".into()));
        }

        let bins = self.arms.next_power_of_two();
        let tau = self.period / bins as f64;
        let windows = window_bins(self.arms, 0, bins);
        // Align every arm's window start on the latest-starting window, so
        // all arms overlap there for one bin length.
        let common = windows.iter().map(|w| w.0).max().unwrap() as f64 * tau;

        let steps = (self.period / self.grid_step).round() as usize;
        let steps = steps.max(2);
        let floor = (1.0 - self.contrast) / 2.0;
        let ceiling = 1.0 - floor;

        let common_bins = windows.iter().map(|w| w.0).max().unwrap();
        let mut waveforms = Vec::with_capacity(self.arms);
        for &(_, len_bins) in &windows {
            let a = common;
            let b = common + len_bins as f64 * tau;
            let samples: Vec<f64> = (0..=steps)
                .map(|i| {
                    let ideal = if self.rise_time == 0.0 {
                        // Exact edge placement: compare i/steps against
                        // bin fractions in integer arithmetic so grid
                        // points landing on an edge are classified
                        // consistently. The endpoint sample is the
                        // periodic image of t = 0.
                        let lhs = (i % steps) as u128 * bins as u128;
                        let lo = common_bins as u128 * steps as u128;
                        let hi = (common_bins + len_bins) as u128 * steps as u128;
                        if lhs >= lo && lhs < hi {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        let t = i as f64 * self.period / steps as f64;
                        periodic_window_level(t, a, b, self.rise_time, self.period)
                    };
                    floor + (ceiling - floor) * ideal
                })
                .collect();
            waveforms.push(RoutingWaveform::new(samples, self.period)?);
        }
        let scheme = DemuxScheme {
            waveforms,
            arm_transmissions: vec![1.0; self.arms],
            contrast: self.contrast,
            rise_time: self.rise_time,
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

/// Recursive halving of `span` bins among `arms` arms: the first half of
/// the period feeds the first ceil(arms/2) arms, the second half the rest.
/// Returns (offset, length) per arm, in bins.
fn window_bins(arms: usize, offset: usize, span: usize) -> Vec<(usize, usize)> {
    if arms == 1 {
        return vec![(offset, span)];
    }
    let left = arms.div_ceil(2);
    let half = span / 2;
    let mut out = window_bins(left, offset, half);
    out.extend(window_bins(arms - left, offset + half, half));
    out
}

/// Level of a window [a, b) at time t on a circle of the given period,
/// with linear edges of duration `rise_time` centered on the transitions.
fn periodic_window_level(t: f64, a: f64, b: f64, rise_time: f64, period: f64) -> f64 {
    let level_at = |t: f64| -> f64 {
        if rise_time == 0.0 {
            return if t >= a && t < b { 1.0 } else { 0.0 };
        }
        let ramp = |x: f64| (x / rise_time + 0.5).clamp(0.0, 1.0);
        ramp(t - a).min(ramp(b - t))
    };
    level_at(t)
        .max(level_at(t + period))
        .max(level_at(t - period))
}

/// Ideal three-arm scheme over period `T = 4 tau`: arm windows of one,
/// one, and two bins, aligned so all arms are simultaneously open for a
/// single `tau`-long window.
pub fn ideal_scheme_3arm(period: f64) -> Result<DemuxScheme> {
    SchemeBuilder::new(3, period).build()
}

/// Active conversion rate `C_n = (1/T) integral of the product of all arm
/// signals over one period`, by trapezoidal integration on the shared grid.
pub fn conversion_rate_active(scheme: &DemuxScheme) -> Result<f64> {
    scheme.validate()?;
    let len = scheme.waveforms[0].samples().len();
    let product: Vec<f64> = (0..len)
        .map(|i| scheme.waveforms.iter().map(|w| w.samples()[i]).product())
        .collect();
    Ok(trapezoid(&product) / (len - 1) as f64)
}

/// Passive conversion rate: the product of static exit probabilities.
pub fn conversion_rate_passive(probs: &[f64]) -> Result<f64> {
    if let Some(&bad) = probs.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::OutOfRange(format!(
            "probability {bad} outside [0, 1]"
        )));
    }
    Ok(probs.iter().product())
}

/// Active-to-passive rate ratio `r_n` of a scheme, with the passive
/// probabilities given by the arm duty cycles.
pub fn active_to_passive_ratio(scheme: &DemuxScheme) -> Result<f64> {
    let active = conversion_rate_active(scheme)?;
    let passive = conversion_rate_passive(&scheme.passive_probabilities())?;
    if passive <= 0.0 {
        return Err(Error::Numerical(
            "passive conversion rate vanished; ratio undefined".into(),
        ));
    }
    Ok(active / passive)
}

/// Active efficiency with an anomaly flag for values outside [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveEfficiency {
    pub value: f64,
    pub anomalous: bool,
}

/// `eta_a = (r_exp - 1) / (r_ideal - 1)`: 1 for an ideal active scheme,
/// 0 for a passive one. Inputs with `r_exp` outside [1, r_ideal] yield a
/// value outside [0, 1], returned as-is with `anomalous` set.
pub fn active_efficiency(r_exp: f64, r_ideal: f64) -> Result<ActiveEfficiency> {
    if r_ideal <= 1.0 {
        return Err(Error::OutOfRange(format!(
            "ideal ratio {r_ideal} must exceed 1"
        )));
    }
    let value = (r_exp - 1.0) / (r_ideal - 1.0);
    Ok(ActiveEfficiency {
        value,
        anomalous: !(0.0..=1.0).contains(&value),
    })
}

/// Conversion rate of the ideal cascaded-binary n-arm scheme,
/// `1 / 2^ceil(log2 n)`; the closed form behind [`SchemeBuilder`] outputs.
pub fn ideal_active_conversion(arms: usize) -> f64 {
    assert!(arms >= 1);
    1.0 / arms.next_power_of_two() as f64
}

/// Write a waveform as `time_ns,level` CSV.
pub fn write_waveform_csv<W: std::io::Write>(w: &mut W, waveform: &RoutingWaveform) -> Result<()> {
    writeln!(w, "time_ns,level")?;
    let step = waveform.step();
    for (i, s) in waveform.samples().iter().enumerate() {
        writeln!(
            w,
            "{},{}",
            crate::cli::fmt_float(i as f64 * step * 1e9),
            crate::cli::fmt_float(*s)
        )?;
    }
    Ok(())
}

/// Read a waveform from `time_ns,level` CSV; the grid must be uniform and
/// the first column starts at 0.
pub fn read_waveform_csv<R: std::io::Read>(r: R) -> Result<RoutingWaveform> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut times = Vec::new();
    let mut levels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidArgument(format!("bad CSV: {e}")))?;
        if record.len() != 2 {
            return Err(Error::InvalidArgument(
                "waveform CSV needs exactly two columns".into(),
            ));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {s:?} in waveform CSV")))
        };
        times.push(parse(&record[0])? * 1e-9);
        levels.push(parse(&record[1])?);
    }
    if times.len() < 2 {
        return Err(Error::InvalidArgument("waveform CSV too short".into()));
    }
    let step = times[1] - times[0];
    if step <= 0.0 {
        return Err(Error::InvalidArgument(
            "waveform times must increase".into(),
        ));
    }
    for (i, pair) in times.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - step).abs() > 1e-6 * step {
            return Err(Error::InvalidArgument(format!(
                "waveform grid not uniform near row {i}"
            )));
        }
    }
    let period = *times.last().unwrap();
    RoutingWaveform::new(levels, period)
}
