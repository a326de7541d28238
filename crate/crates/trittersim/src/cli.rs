//! Batch command execution: each run loads a validated config, computes
//! everything up front, and only then commits its output files via
//! write-then-rename, so failed runs never leave partial files behind.
//! All floating-point output carries 12 significant digits and every
//! stochastic step is seeded, making identical config + seed runs
//! byte-identical.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde_json::{json, Value};

use crate::circuit::random_unitary;
use crate::config::{
    BudgetConfig, DemuxConfig, OracleCheckConfig, ReconstructConfig, SimulateConfig,
};
use crate::demux::{
    active_efficiency, conversion_rate_active, conversion_rate_passive, ideal_active_conversion,
    write_waveform_csv, SchemeBuilder,
};
use crate::error::{Error, Result};
use crate::interference::{
    chi_from_g2, distribution, mixture_distribution, mixture_input_states, oracle_distribution,
    random_gram, GramMatrix, OutputDistribution, PhotonEnsemble,
};
use crate::reconstruct::{
    fidelity, fidelity_normalized, reconstruct_unitary, simulate_measurements, visibility_matrix,
    FringeData, FringeEntry, IntensityData, VisibilityMatrix,
};

/// Tabular artifact format; the JSON summary is always written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Render a float with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Round to 12 significant digits, for JSON number output.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(11 - exp);
    (x * factor).round() / factor
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig12(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

/// A finished output file, committed atomically at the end of a run.
struct Artifact {
    name: String,
    bytes: Vec<u8>,
}

impl Artifact {
    fn json(name: &str, value: &Value) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| Error::Numerical(format!("JSON encoding failed: {e}")))?;
        bytes.push(b'\n');
        Ok(Self {
            name: name.to_string(),
            bytes,
        })
    }
}

fn commit(out_dir: &Path, artifacts: Vec<Artifact>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let path = out_dir.join(&artifact.name);
        let tmp = out_dir.join(format!(".{}.tmp", artifact.name));
        std::fs::write(&tmp, &artifact.bytes)?;
        std::fs::rename(&tmp, &path)?;
        written.push(path);
    }
    Ok(written)
}

fn distribution_csv(
    dist: &OutputDistribution,
    indistinguishable: &OutputDistribution,
    distinguishable: &OutputDistribution,
) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "pattern",
            "probability",
            "indistinguishable_reference",
            "distinguishable_reference",
        ])
        .map_err(|e| Error::Numerical(e.to_string()))?;
    for (i, (pattern, p)) in dist.iter().enumerate() {
        writer
            .write_record([
                pattern.label(),
                fmt_float(p),
                fmt_float(indistinguishable.probabilities()[i]),
                fmt_float(distinguishable.probabilities()[i]),
            ])
            .map_err(|e| Error::Numerical(e.to_string()))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Numerical(e.to_string()))
}

fn distribution_json(dist: &OutputDistribution) -> Value {
    Value::Array(
        dist.iter()
            .map(|(pattern, p)| json!({ "pattern": pattern.label(), "probability": num(p) }))
            .collect(),
    )
}

/// Three-photon aggregates: the no-collision bin, the mean bunching bin,
/// and the mean single-collision bin.
fn aggregates(dist: &OutputDistribution) -> Option<(f64, f64, f64)> {
    if dist.photons() != 3 || dist.modes() != 3 {
        return None;
    }
    let mut p111 = 0.0;
    let mut bunch = Vec::new();
    let mut coll = Vec::new();
    for (pattern, p) in dist.iter() {
        if pattern.counts() == [1, 1, 1] {
            p111 = p;
        } else if pattern.counts().contains(&3) {
            bunch.push(p);
        } else {
            coll.push(p);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Some((p111, mean(&bunch), mean(&coll)))
}

/// `simulate`: output distribution of the configured circuit, with the
/// fully indistinguishable and fully distinguishable references computed
/// side by side for the same circuit and input modes.
pub fn run_simulate(
    cfg: &SimulateConfig,
    seed: u64,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let u = cfg.circuit.build()?;
    let (dist, input_modes, source_summary) = if let Some(source_spec) = &cfg.source {
        let source = source_spec.build()?;
        let gram_qd = match &cfg.gram {
            Some(spec) => spec.build()?,
            None => source.qd_gram(),
        };
        if let Some(modes) = &cfg.input_modes {
            if modes != &[0, 1, 2] {
                return Err(Error::Config(
                    "source-mixture runs use input modes [0, 1, 2]".into(),
                ));
            }
        }
        let dist = mixture_distribution(&u, &source, &gram_qd)?;
        let weights: Vec<Value> = mixture_input_states(&source, &gram_qd)?
            .iter()
            .map(|(w, ens)| {
                let labels: Vec<String> = ens
                    .photons()
                    .iter()
                    .map(|p| format!("{}@{}", p.label, p.input_mode))
                    .collect();
                json!({ "weight": num(*w), "photons": labels })
            })
            .collect();
        let summary = json!({
            "p1_qd": num(source.p1_qd),
            "g2": num(source.g2),
            "chi": num(chi_from_g2(source.g2)?),
            "p1_laser": num(source.laser_single_photon_probability()),
            "vacuum_probability": num(source.vacuum_probability()),
            "input_states": weights,
        });
        (dist, vec![0usize, 1, 2], Some(summary))
    } else {
        let modes = cfg.input_modes.clone().ok_or_else(|| {
            Error::Config("either `source` or `input_modes` must be given".into())
        })?;
        let gram = match &cfg.gram {
            Some(spec) => spec.build()?,
            None => GramMatrix::all_ones(modes.len()),
        };
        let ens = PhotonEnsemble::with_gram(&modes, gram)?;
        (distribution(&u, &ens)?, modes, None)
    };

    let indistinguishable = distribution(&u, &PhotonEnsemble::indistinguishable(&input_modes)?)?;
    let distinguishable = distribution(&u, &PhotonEnsemble::distinguishable(&input_modes)?)?;

    let mut summary = json!({
        "command": "simulate",
        "seed": seed,
        "circuit": u.label(),
        "modes": u.modes(),
        "photons": dist.photons(),
        "unitarity_residual": num(u.unitarity_residual()),
        "input_modes": input_modes,
    });
    if let Some(src) = source_summary {
        summary["source"] = src;
    }
    if let Some((p111, bunch, coll)) = aggregates(&dist) {
        summary["aggregates"] = json!({
            "p_111": num(p111),
            "mean_bunching": num(bunch),
            "mean_collision": num(coll),
        });
    }

    let mut artifacts = Vec::new();
    match format {
        OutputFormat::Csv => artifacts.push(Artifact {
            name: "distribution.csv".into(),
            bytes: distribution_csv(&dist, &indistinguishable, &distinguishable)?,
        }),
        OutputFormat::Json => {
            let value = json!({
                "distribution": distribution_json(&dist),
                "indistinguishable_reference": distribution_json(&indistinguishable),
                "distinguishable_reference": distribution_json(&distinguishable),
            });
            artifacts.push(Artifact::json("distribution.json", &value)?);
        }
    }
    artifacts.push(Artifact::json("summary.json", &summary)?);
    commit(out_dir, artifacts)
}

/// `demux`: conversion rates, active-to-passive ratio, and active
/// efficiency of the configured scheme.
pub fn run_demux(
    cfg: &DemuxConfig,
    seed: u64,
    out_dir: &Path,
    _format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let period = cfg.period_ns * 1e-9;
    let scheme = SchemeBuilder::new(cfg.arms, period)
        .contrast(cfg.contrast)
        .rise_time(cfg.rise_time_ns * 1e-9)
        .grid_step(cfg.grid_ns * 1e-9)
        .build()?;

    let passive_probs = scheme.passive_probabilities();
    let c_passive = conversion_rate_passive(&passive_probs)?;
    let c_active_modulated = conversion_rate_active(&scheme)?;
    let c_active = if cfg.passive {
        c_passive
    } else {
        c_active_modulated
    };
    let ratio = c_active / c_passive;

    // Ideal reference ratio for the same arm count.
    let ideal = SchemeBuilder::new(cfg.arms, period)
        .grid_step(cfg.grid_ns * 1e-9)
        .build()?;
    let r_ideal = ideal_active_conversion(cfg.arms)
        / conversion_rate_passive(&ideal.passive_probabilities())?;
    let r_used = if cfg.passive {
        1.0
    } else {
        cfg.r_exp.unwrap_or(ratio)
    };
    let eta = active_efficiency(r_used, r_ideal)?;

    let summary = json!({
        "command": "demux",
        "seed": seed,
        "arms": cfg.arms,
        "period_ns": num(cfg.period_ns),
        "contrast": num(cfg.contrast),
        "rise_time_ns": num(cfg.rise_time_ns),
        "passive": cfg.passive,
        "c_active": num(c_active),
        "c_passive": num(c_passive),
        "passive_probabilities": passive_probs.iter().map(|&p| num(p)).collect::<Vec<_>>(),
        "ratio": num(ratio),
        "r_ideal": num(r_ideal),
        "r_used_for_efficiency": num(r_used),
        "active_efficiency": num(eta.value),
        "active_efficiency_anomalous": eta.anomalous,
    });

    let mut artifacts = vec![Artifact::json("rates.json", &summary)?];
    if cfg.export_waveforms {
        for (k, waveform) in scheme.waveforms.iter().enumerate() {
            let mut bytes = Vec::new();
            write_waveform_csv(&mut bytes, waveform)?;
            artifacts.push(Artifact {
                name: format!("waveform_arm{k}.csv"),
                bytes,
            });
        }
    }
    commit(out_dir, artifacts)
}

fn read_intensity_csv(path: &Path) -> Result<IntensityData> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    let mut modes = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidArgument(format!("bad CSV: {e}")))?;
        if record.len() != 3 {
            return Err(Error::InvalidArgument(
                "intensity CSV needs input,output,intensity columns".into(),
            ));
        }
        let input: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad input index {:?}", &record[0])))?;
        let output: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad output index {:?}", &record[1])))?;
        let intensity: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad intensity {:?}", &record[2])))?;
        modes = modes.max(input + 1).max(output + 1);
        cells.push((input, output, intensity));
    }
    let mut rows = vec![vec![0.0; modes]; modes];
    for (input, output, intensity) in cells {
        rows[input][output] = intensity;
    }
    // Accept unnormalized rows (lossy measurements) and normalize here.
    for row in &mut rows {
        let sum: f64 = row.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InconsistentData("empty intensity row".into()));
        }
        row.iter_mut().for_each(|x| *x /= sum);
    }
    IntensityData::new(rows)
}

fn read_fringes_csv(path: &Path, modes: usize) -> Result<FringeData> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidArgument(format!("bad CSV: {e}")))?;
        if record.len() != 5 {
            return Err(Error::InvalidArgument(
                "fringe CSV needs input_i,input_j,output,amplitude,phase columns".into(),
            ));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad index {s:?}")))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number {s:?}")))
        };
        entries.push(FringeEntry {
            input_i: parse_idx(&record[0])?,
            input_j: parse_idx(&record[1])?,
            output: parse_idx(&record[2])?,
            amplitude: parse_f(&record[3])?,
            phase: parse_f(&record[4])?,
        });
    }
    FringeData::new(modes, entries)
}

fn visibility_json(v: &VisibilityMatrix) -> Value {
    let mut rows = Vec::new();
    for (ip, &(i, j)) in v.input_pairs().iter().enumerate() {
        for (op, &(k, l)) in v.output_pairs().iter().enumerate() {
            rows.push(json!({
                "inputs": [i, j],
                "outputs": [k, l],
                "visibility": opt_num(v.value(ip, op)),
            }));
        }
    }
    Value::Array(rows)
}

/// `reconstruct`: synthetic (or imported) chip characterization data, the
/// reconstructed unitary, visibility matrices, and fidelities.
pub fn run_reconstruct(
    cfg: &ReconstructConfig,
    seed: u64,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let synthetic_target = match (&cfg.target, cfg.random_modes) {
        (Some(spec), None) => Some(spec.build()?),
        (None, Some(m)) => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            Some(random_unitary(m, &mut rng))
        }
        (None, None) => None,
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either `target` or `random_modes`, not both".into(),
            ));
        }
    };

    let (intensity, fringes, target) =
        match (&synthetic_target, &cfg.intensity_csv, &cfg.fringes_csv) {
            (Some(u), None, None) => {
                let (intensity, fringes) = simulate_measurements(u, cfg.noise_sigma, seed)?;
                (intensity, fringes, Some(u.clone()))
            }
            (None, Some(ipath), Some(fpath)) => {
                let intensity = read_intensity_csv(Path::new(ipath))?;
                let fringes = read_fringes_csv(Path::new(fpath), intensity.modes())?;
                (intensity, fringes, None)
            }
            _ => {
                return Err(Error::Config(
                    "give a synthetic target (`target` or `random_modes`) or both CSV paths".into(),
                ));
            }
        };

    let rec = reconstruct_unitary(&intensity, &fringes)?;
    let v_rec = visibility_matrix(&rec.unitary);

    let mut summary = json!({
        "command": "reconstruct",
        "seed": seed,
        "modes": rec.unitary.modes(),
        "noise_sigma": num(cfg.noise_sigma),
        "residual": num(rec.residual),
        "inconsistent": rec.inconsistent,
        "unitarity_residual": num(rec.unitary.unitarity_residual()),
        "visibility": visibility_json(&v_rec),
    });

    if rec.unitary.modes() == 3 && !v_rec.has_undefined() {
        let v_ideal = visibility_matrix(&crate::circuit::ideal_tritter());
        summary["fidelity_to_ideal_tritter"] = num(fidelity(&v_rec, &v_ideal)?);
        summary["fidelity_to_ideal_tritter_normalized"] =
            num(fidelity_normalized(&v_rec, &v_ideal)?);
    } else {
        summary["fidelity_to_ideal_tritter"] = Value::Null;
    }
    if let Some(u) = &target {
        let v_target = visibility_matrix(u);
        if !v_target.has_undefined() && !v_rec.has_undefined() {
            summary["fidelity_to_target"] = num(fidelity(&v_rec, &v_target)?);
        } else {
            summary["fidelity_to_target"] = Value::Null;
        }
    }

    let mut artifacts = Vec::new();
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(["row", "col", "re", "im"])
                .map_err(|e| Error::Numerical(e.to_string()))?;
            let m = rec.unitary.modes();
            for j in 0..m {
                for k in 0..m {
                    let z = rec.unitary.element(j, k);
                    writer
                        .write_record([
                            j.to_string(),
                            k.to_string(),
                            fmt_float(z.re),
                            fmt_float(z.im),
                        ])
                        .map_err(|e| Error::Numerical(e.to_string()))?;
                }
            }
            artifacts.push(Artifact {
                name: "matrix.csv".into(),
                bytes: writer
                    .into_inner()
                    .map_err(|e| Error::Numerical(e.to_string()))?,
            });
        }
        OutputFormat::Json => {
            let m = rec.unitary.modes();
            let matrix: Vec<Value> = (0..m)
                .flat_map(|j| {
                    let u = &rec.unitary;
                    (0..m).map(move |k| {
                        let z = u.element(j, k);
                        json!({ "row": j, "col": k, "re": num(z.re), "im": num(z.im) })
                    })
                })
                .collect();
            artifacts.push(Artifact::json("matrix.json", &Value::Array(matrix))?);
        }
    }
    artifacts.push(Artifact::json("fidelity.json", &summary)?);
    commit(out_dir, artifacts)
}

/// `budget`: generated/detected rate tables for every configured
/// scenario, as CSV plus an aligned text table.
pub fn run_budget(
    cfg: &BudgetConfig,
    seed: u64,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    if cfg.scenario.is_empty() {
        return Err(Error::Config(
            "budget config needs at least one scenario".into(),
        ));
    }
    let mut rows = Vec::new();
    for scenario in &cfg.scenario {
        let pipeline = scenario.build()?;
        let table = pipeline.projection();
        for row in &table.rows {
            rows.push((scenario.name.clone(), table.n, row.clone()));
        }
    }

    let mut text = String::new();
    text.push_str(&format!(
        "{:<16} {:>3} {:<12} {:>18} {:>18}\n",
        "scenario", "n", "stage", "generated_hz", "detected_hz"
    ));
    for (name, n, row) in &rows {
        text.push_str(&format!(
            "{:<16} {:>3} {:<12} {:>18} {:>18}\n",
            name,
            n,
            row.stage,
            fmt_float(row.generated),
            fmt_float(row.detected)
        ));
    }

    let summary = json!({
        "command": "budget",
        "seed": seed,
        "scenarios": cfg.scenario.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "rows": rows.iter().map(|(name, n, row)| json!({
            "scenario": name,
            "photons": n,
            "stage": row.stage,
            "generated_hz": num(row.generated),
            "detected_hz": num(row.detected),
        })).collect::<Vec<_>>(),
    });

    let mut artifacts = Vec::new();
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record([
                    "scenario",
                    "photons",
                    "stage",
                    "generated_hz",
                    "detected_hz",
                ])
                .map_err(|e| Error::Numerical(e.to_string()))?;
            for (name, n, row) in &rows {
                writer
                    .write_record([
                        name.clone(),
                        n.to_string(),
                        row.stage.clone(),
                        fmt_float(row.generated),
                        fmt_float(row.detected),
                    ])
                    .map_err(|e| Error::Numerical(e.to_string()))?;
            }
            artifacts.push(Artifact {
                name: "budget.csv".into(),
                bytes: writer
                    .into_inner()
                    .map_err(|e| Error::Numerical(e.to_string()))?,
            });
        }
        OutputFormat::Json => {
            artifacts.push(Artifact::json("budget.json", &summary)?);
        }
    }
    artifacts.push(Artifact {
        name: "budget.txt".into(),
        bytes: text.into_bytes(),
    });
    artifacts.push(Artifact::json("summary.json", &summary)?);
    commit(out_dir, artifacts)
}

/// `oracle-check`: randomized agreement sweep between the permutation-sum
/// engine and the brute-force oracle. Errors (after writing its report)
/// when the worst deviation exceeds the tolerance.
pub fn run_oracle_check(
    cfg: &OracleCheckConfig,
    seed: u64,
    out_dir: &Path,
    _format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    if cfg.cases == 0 || cfg.max_photons < 2 || cfg.max_modes < 2 {
        return Err(Error::Config(
            "oracle check needs cases >= 1, max_photons >= 2, max_modes >= 2".into(),
        ));
    }
    if cfg.max_photons > 4 || cfg.max_modes > 5 {
        return Err(Error::Config(
            "oracle check is limited to max_photons <= 4, max_modes <= 5".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut max_deviation = 0.0f64;
    let mut worst: Value = Value::Null;
    for case in 0..cfg.cases {
        let n = rng.gen_range(2..=cfg.max_photons);
        let m = rng.gen_range(n.max(2)..=cfg.max_modes.max(n));
        let u = random_unitary(m, &mut rng);
        let gram = random_gram(n, &mut rng);
        let modes = {
            use rand::seq::SliceRandom;
            let mut all: Vec<usize> = (0..m).collect();
            all.shuffle(&mut rng);
            all.truncate(n);
            all
        };
        let ens = PhotonEnsemble::with_gram(&modes, gram)?;
        let engine = distribution(&u, &ens)?;
        let oracle = oracle_distribution(&u, &ens)?;
        let dev = engine.max_bin_deviation(&oracle);
        if dev > max_deviation {
            max_deviation = dev;
            worst = json!({ "case": case, "photons": n, "modes": m });
        }
    }
    let passed = max_deviation < cfg.tolerance;
    let summary = json!({
        "command": "oracle-check",
        "seed": seed,
        "cases": cfg.cases,
        "max_photons": cfg.max_photons,
        "max_modes": cfg.max_modes,
        "tolerance": num(cfg.tolerance),
        "max_deviation": num(max_deviation),
        "worst_case": worst,
        "passed": passed,
    });
    let files = commit(
        out_dir,
        vec![Artifact::json("oracle_check.json", &summary)?],
    )?;
    if !passed {
        return Err(Error::Numerical(format!(
            "oracle disagreement {max_deviation:.3e} exceeds tolerance {:.1e}",
            cfg.tolerance
        )));
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_twelve_significant_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_float(0.25), "2.50000000000e-1");
        assert_eq!(fmt_float(3800.0), "3.80000000000e3");
    }

    #[test]
    fn sig12_rounding() {
        assert_eq!(round_sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig12(0.0), 0.0);
        assert_eq!(round_sig12(123456789.0), 123456789.0);
        assert_eq!(round_sig12(-1.0 / 7.0), -0.142857142857);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert_eq!("json".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!("yaml".parse::<OutputFormat>().is_err());
    }
}
