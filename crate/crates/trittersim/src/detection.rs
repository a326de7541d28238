//! Pseudo number-resolving detection: each output mode feeds a small
//! splitter tree of three binary detectors. Photon-number information is
//! approximate, so bunched events click with reduced probability; the
//! estimator inverts the click response with non-negative least squares
//! to recover the true output distribution, with multinomial-bootstrap
//! uncertainties.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::fock::{enumerate_patterns, factorial, OccupationPattern};
use crate::interference::OutputDistribution;

/// Splitter tree of one output mode: routing probabilities to its three
/// binary detectors plus their common efficiency. Dark counts are a
/// declared parameter but are not part of the click model; any nonzero
/// value is rejected where counts are simulated or inverted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorTree {
    split_probs: [f64; 3],
    eta: f64,
    dark_rate: f64,
}

impl DetectorTree {
    pub fn new(split_probs: [f64; 3], eta: f64) -> Result<Self> {
        if split_probs.iter().any(|&q| q < 0.0) {
            return Err(Error::OutOfRange("negative splitter probability".into()));
        }
        let sum: f64 = split_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "splitter probabilities sum to {sum}, expected 1"
            )));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfRange(format!(
                "efficiency {eta} outside [0, 1]"
            )));
        }
        Ok(Self {
            split_probs,
            eta,
            dark_rate: 0.0,
        })
    }

    /// Two cascaded balanced couplers: splits (1/2, 1/4, 1/4).
    pub fn cascaded_balanced(eta: f64) -> Result<Self> {
        Self::new([0.5, 0.25, 0.25], eta)
    }

    pub fn with_dark_rate(mut self, dark_rate: f64) -> Result<Self> {
        if dark_rate < 0.0 {
            return Err(Error::OutOfRange("negative dark rate".into()));
        }
        self.dark_rate = dark_rate;
        Ok(self)
    }

    pub fn split_probs(&self) -> [f64; 3] {
        self.split_probs
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dark_rate(&self) -> f64 {
        self.dark_rate
    }

    fn reject_dark_counts(&self) -> Result<()> {
        if self.dark_rate != 0.0 {
            return Err(Error::InvalidArgument(
                "dark counts are not modeled; set dark_rate = 0".into(),
            ));
        }
        Ok(())
    }
}

/// Probability that `k` photons entering one detector tree produce exactly
/// `c` clicks. Photons route independently: each lands on detector `d`
/// with probability `eta * q_d` or goes undetected with probability
/// `1 - eta`; a detector clicks once regardless of how many photons hit
/// it. Exact enumeration over routing multiplicities.
pub fn click_probability(k: usize, tree: &DetectorTree, c: usize) -> f64 {
    if c > 3 {
        return 0.0;
    }
    if k == 0 {
        return if c == 0 { 1.0 } else { 0.0 };
    }
    let q = tree.split_probs;
    let eta = tree.eta;
    let p = [1.0 - eta, eta * q[0], eta * q[1], eta * q[2]];
    let mut total = 0.0;
    // Compositions (n_lost, n_1, n_2, n_3) of k.
    for lost in 0..=k {
        for d1 in 0..=(k - lost) {
            for d2 in 0..=(k - lost - d1) {
                let d3 = k - lost - d1 - d2;
                let clicks = [d1, d2, d3].iter().filter(|&&d| d > 0).count();
                if clicks != c {
                    continue;
                }
                let multinomial = factorial(k) as f64
                    / (factorial(lost) * factorial(d1) * factorial(d2) * factorial(d3)) as f64;
                total += multinomial
                    * p[0].powi(lost as i32)
                    * p[1].powi(d1 as i32)
                    * p[2].powi(d2 as i32)
                    * p[3].powi(d3 as i32);
            }
        }
    }
    total
}

/// Observed coincidence histogram: per-mode click counts of recorded
/// events (those with exactly n total clicks), plus bookkeeping.
#[derive(Debug, Clone)]
pub struct ClickPatternCounts {
    counts: BTreeMap<OccupationPattern, u64>,
    total: u64,
    /// Accumulation time in seconds; 0 when unknown (e.g. synthetic runs).
    pub integration_time: f64,
}

impl ClickPatternCounts {
    pub fn new(counts: BTreeMap<OccupationPattern, u64>, integration_time: f64) -> Result<Self> {
        let mut modes = None;
        let mut clicks = None;
        for pattern in counts.keys() {
            let m = pattern.modes();
            let n = pattern.photons();
            if *modes.get_or_insert(m) != m || *clicks.get_or_insert(n) != n {
                return Err(Error::Dimension(
                    "click patterns disagree on modes or click totals".into(),
                ));
            }
        }
        let total = counts.values().sum();
        Ok(Self {
            counts,
            total,
            integration_time,
        })
    }

    pub fn counts(&self) -> &BTreeMap<OccupationPattern, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, pattern: &OccupationPattern) -> u64 {
        self.counts.get(pattern).copied().unwrap_or(0)
    }

    /// Write `pattern,count` CSV.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        writer
            .write_record(["pattern", "count"])
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for (pattern, count) in &self.counts {
            writer
                .write_record([pattern.label(), count.to_string()])
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Read `pattern,count` CSV.
    pub fn read_csv<R: std::io::Read>(r: R, integration_time: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut counts = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::InvalidArgument(format!("bad CSV: {e}")))?;
            if record.len() != 2 {
                return Err(Error::InvalidArgument(
                    "counts CSV needs pattern,count columns".into(),
                ));
            }
            let pattern = OccupationPattern::parse(&record[0])?;
            let count: u64 = record[1]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad count {:?}", &record[1])))?;
            counts.insert(pattern, count);
        }
        Self::new(counts, integration_time)
    }
}

/// Monte Carlo coincidence run: samples output patterns from `dist`,
/// routes every photon through its mode's detector tree, and records the
/// per-mode click patterns of events whose total click number equals the
/// photon number. Deterministic per seed.
pub fn simulate_counts(
    dist: &OutputDistribution,
    trees: &[DetectorTree],
    n_events: u64,
    seed: u64,
) -> Result<ClickPatternCounts> {
    let (counts, _) = simulate_counts_inner(dist, trees, EventBudget::Events(n_events), seed)?;
    Ok(counts)
}

/// Like [`simulate_counts`] but accumulates until `target` recorded
/// events; also returns the number of generated events. Gives up with an
/// error after `max_events` generated events.
pub fn simulate_counts_to_target(
    dist: &OutputDistribution,
    trees: &[DetectorTree],
    target: u64,
    max_events: u64,
    seed: u64,
) -> Result<(ClickPatternCounts, u64)> {
    simulate_counts_inner(
        dist,
        trees,
        EventBudget::Recorded { target, max_events },
        seed,
    )
}

enum EventBudget {
    Events(u64),
    Recorded { target: u64, max_events: u64 },
}

fn simulate_counts_inner(
    dist: &OutputDistribution,
    trees: &[DetectorTree],
    budget: EventBudget,
    seed: u64,
) -> Result<(ClickPatternCounts, u64)> {
    let m = dist.modes();
    let n = dist.photons();
    if trees.len() != m {
        return Err(Error::Dimension(format!(
            "need one detector tree per mode: {} trees for {m} modes",
            trees.len()
        )));
    }
    for tree in trees {
        tree.reject_dark_counts()?;
    }
    if let EventBudget::Events(0) = budget {
        return Err(Error::InvalidArgument("need at least one event".into()));
    }

    // Cumulative distribution for pattern sampling.
    let mut cumulative = Vec::with_capacity(dist.probabilities().len());
    let mut acc = 0.0;
    for &p in dist.probabilities() {
        acc += p;
        cumulative.push(acc);
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<OccupationPattern, u64> = BTreeMap::new();
    let mut recorded = 0u64;
    let mut generated = 0u64;
    loop {
        match budget {
            EventBudget::Events(total) => {
                if generated >= total {
                    break;
                }
            }
            EventBudget::Recorded { target, max_events } => {
                if recorded >= target {
                    break;
                }
                if generated >= max_events {
                    return Err(Error::Numerical(format!(
                        "only {recorded}/{target} events recorded after {max_events} generated"
                    )));
                }
            }
        }
        generated += 1;

        let x: f64 = rng.gen();
        let idx = cumulative
            .partition_point(|&c| c < x)
            .min(cumulative.len() - 1);
        let pattern = &dist.patterns()[idx];

        let mut clicks = vec![0usize; m];
        let mut total_clicks = 0usize;
        for (mode, (&photons, tree)) in pattern.counts().iter().zip(trees).enumerate() {
            let mut hit = [false; 3];
            for _ in 0..photons {
                if rng.gen::<f64>() >= tree.eta {
                    continue;
                }
                let y: f64 = rng.gen();
                let q = tree.split_probs;
                let det = if y < q[0] {
                    0
                } else if y < q[0] + q[1] {
                    1
                } else {
                    2
                };
                hit[det] = true;
            }
            clicks[mode] = hit.iter().filter(|&&h| h).count();
            total_clicks += clicks[mode];
        }
        if total_clicks == n {
            recorded += 1;
            *counts.entry(OccupationPattern::new(clicks)?).or_insert(0) += 1;
        }
    }
    Ok((ClickPatternCounts::new(counts, 0.0)?, generated))
}

/// Default number of multinomial bootstrap resamples.
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;

/// Estimated true distribution with per-bin bootstrap uncertainties.
#[derive(Debug, Clone)]
pub struct DistributionEstimate {
    /// Efficiency-bias-corrected estimate.
    pub corrected: OutputDistribution,
    /// Raw normalized click-pattern frequencies, for comparison.
    pub uncorrected: OutputDistribution,
    /// Bootstrap standard error per bin (canonical pattern order).
    pub sigma: Vec<f64>,
    /// 68% upper bounds; for empty bins these fall back to a Poisson
    /// upper limit propagated through the response correction.
    pub upper68: Vec<f64>,
    pub bootstrap_resamples: usize,
}

impl DistributionEstimate {
    /// JSON report with per-bin estimates, raw frequencies, bootstrap
    /// standard errors, and 68% upper bounds, in canonical pattern order.
    pub fn report_json(&self) -> serde_json::Value {
        let bins: Vec<serde_json::Value> = self
            .corrected
            .patterns()
            .iter()
            .enumerate()
            .map(|(i, pattern)| {
                serde_json::json!({
                    "pattern": pattern.label(),
                    "probability": self.corrected.probabilities()[i],
                    "uncorrected": self.uncorrected.probabilities()[i],
                    "sigma": self.sigma[i],
                    "upper68": self.upper68[i],
                })
            })
            .collect();
        serde_json::json!({
            "photons": self.corrected.photons(),
            "modes": self.corrected.modes(),
            "bootstrap_resamples": self.bootstrap_resamples,
            "bins": bins,
        })
    }
}

/// Invert the click response: solve `min ||R x - f||` subject to `x >= 0`
/// over true-pattern probabilities (R built from [`click_probability`]),
/// then normalize to the simplex. Uncertainties from `resamples`
/// multinomial bootstrap rounds. Deterministic per seed.
pub fn estimate_distribution(
    counts: &ClickPatternCounts,
    trees: &[DetectorTree],
    resamples: usize,
    seed: u64,
) -> Result<DistributionEstimate> {
    if counts.total() == 0 {
        return Err(Error::InvalidArgument("no recorded events".into()));
    }
    let any = counts
        .counts()
        .keys()
        .next()
        .ok_or_else(|| Error::InvalidArgument("no recorded events".into()))?;
    let m = any.modes();
    let n = any.photons();
    if trees.len() != m {
        return Err(Error::Dimension(format!(
            "need one detector tree per mode: {} trees for {m} modes",
            trees.len()
        )));
    }
    for tree in trees {
        tree.reject_dark_counts()?;
    }

    let patterns = enumerate_patterns(n, m);
    let dim = patterns.len();

    // Response matrix: R[click_pattern][true_pattern].
    let mut response = DMatrix::<f64>::zeros(dim, dim);
    for (col, truth) in patterns.iter().enumerate() {
        for (row, click) in patterns.iter().enumerate() {
            let mut p = 1.0;
            for (mode, tree) in trees.iter().enumerate() {
                p *= click_probability(truth.counts()[mode], tree, click.counts()[mode]);
            }
            response[(row, col)] = p;
        }
    }
    for (col, truth) in patterns.iter().enumerate() {
        if response.column(col).amax() <= 0.0 {
            return Err(Error::SingularResponse(format!(
                "pattern {truth} can never produce {n} clicks with these trees"
            )));
        }
    }

    let observed: Vec<u64> = patterns.iter().map(|p| counts.count(p)).collect();
    let total = counts.total();
    let frequencies =
        DVector::from_iterator(dim, observed.iter().map(|&c| c as f64 / total as f64));

    let solve = |freq: &DVector<f64>| -> Result<Vec<f64>> {
        let x = nnls(&response, freq)?;
        let sum: f64 = x.iter().sum();
        if sum <= 0.0 {
            return Err(Error::SingularResponse(
                "non-negative solution vanished".into(),
            ));
        }
        Ok(x.iter().map(|v| v / sum).collect())
    };

    let point = solve(&frequencies)?;
    let corrected = OutputDistribution::from_probs(n, m, point.clone())?;
    let uncorrected = OutputDistribution::from_probs(n, m, frequencies.iter().cloned().collect())?;

    // Multinomial bootstrap over the observed click histogram.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = vec![0.0f64; dim];
    let mut sum_sq = vec![0.0f64; dim];
    for _ in 0..resamples {
        let resampled = multinomial(&mut rng, total, frequencies.as_slice());
        let freq = DVector::from_iterator(dim, resampled.iter().map(|&c| c as f64 / total as f64));
        let estimate = solve(&freq)?;
        for (i, v) in estimate.iter().enumerate() {
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    let sigma: Vec<f64> = if resamples > 1 {
        (0..dim)
            .map(|i| {
                let mean = sum[i] / resamples as f64;
                let var = (sum_sq[i] / resamples as f64 - mean * mean).max(0.0);
                (var * resamples as f64 / (resamples as f64 - 1.0)).sqrt()
            })
            .collect()
    } else {
        vec![0.0; dim]
    };

    // Upper bounds: point + sigma, except empty bins where the bootstrap
    // collapses to zero; those get the 68% Poisson upper limit (1.14
    // counts) pushed through the diagonal response correction.
    let norm_scale: f64 = {
        let unnorm: f64 = (0..dim)
            .map(|i| frequencies[i] / response[(i, i)].max(1e-300))
            .sum();
        unnorm.max(1e-300)
    };
    let upper68: Vec<f64> = (0..dim)
        .map(|i| {
            if observed[i] == 0 {
                let upper_freq = 1.14 / total as f64;
                upper_freq / response[(i, i)].max(1e-300) / norm_scale
            } else {
                point[i] + sigma[i]
            }
        })
        .collect();

    Ok(DistributionEstimate {
        corrected,
        uncorrected,
        sigma,
        upper68,
        bootstrap_resamples: resamples,
    })
}

/// Lawson-Hanson non-negative least squares for `min ||A x - b||, x >= 0`.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut passive = vec![false; n];
    let mut x = DVector::<f64>::zeros(n);
    let tol = 1e-12 * a.amax().max(1.0);
    let max_outer = 3 * n + 10;

    let solve_passive = |passive: &[bool]| -> Result<DVector<f64>> {
        let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        if cols.is_empty() {
            return Ok(DVector::zeros(n));
        }
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
        let sol = sub
            .clone()
            .svd(true, true)
            .solve(b, 1e-12)
            .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))?;
        let mut full = DVector::zeros(n);
        for (c, &col) in cols.iter().enumerate() {
            full[col] = sol[c];
        }
        Ok(full)
    };

    for _ in 0..max_outer {
        let residual = b - a * &x;
        let gradient = a.transpose() * residual;
        let candidate = (0..n)
            .filter(|&i| !passive[i] && gradient[i] > tol)
            .max_by(|&i, &j| gradient[i].partial_cmp(&gradient[j]).unwrap());
        let Some(best) = candidate else { break };
        passive[best] = true;

        loop {
            let trial = solve_passive(&passive)?;
            let negative: Vec<usize> = (0..n).filter(|&i| passive[i] && trial[i] <= 0.0).collect();
            if negative.is_empty() {
                x = trial;
                break;
            }
            // Step back to the feasible boundary and drop the blocking set.
            let mut alpha = f64::INFINITY;
            for &i in &negative {
                let denom = x[i] - trial[i];
                if denom > 0.0 {
                    alpha = alpha.min(x[i] / denom);
                }
            }
            if !alpha.is_finite() {
                for &i in &negative {
                    passive[i] = false;
                }
                continue;
            }
            x = &x + (trial - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i].abs() <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    Ok(x)
}

/// Multinomial sample by chained binomials.
fn multinomial<R: Rng + ?Sized>(rng: &mut R, total: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(probs.len());
    let mut remaining = total;
    let mut remaining_p = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() {
            out.push(remaining);
            break;
        }
        if remaining == 0 || remaining_p <= 0.0 {
            out.push(0);
            continue;
        }
        let q = (p / remaining_p).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map(|d| d.sample(rng))
            .unwrap_or(0);
        out.push(draw);
        remaining -= draw;
        remaining_p -= p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ideal_tritter;
    use crate::interference::{distribution, PhotonEnsemble};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pattern(counts: &[usize]) -> OccupationPattern {
        OccupationPattern::new(counts.to_vec()).unwrap()
    }

    fn unit_tree() -> DetectorTree {
        DetectorTree::cascaded_balanced(1.0).unwrap()
    }

    #[test]
    fn click_probability_examples() {
        let tree = unit_tree();
        assert_abs_diff_eq!(click_probability(1, &tree, 1), 1.0, epsilon = 1e-15);
        // k=2: both photons on the same detector with prob sum q^2.
        assert_abs_diff_eq!(click_probability(2, &tree, 2), 5.0 / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(click_probability(2, &tree, 1), 3.0 / 8.0, epsilon = 1e-12);
        // k=3 on three distinct detectors: 3! q1 q2 q3.
        assert_abs_diff_eq!(click_probability(3, &tree, 3), 3.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn click_probability_with_loss() {
        let tree = DetectorTree::cascaded_balanced(0.3).unwrap();
        assert_abs_diff_eq!(click_probability(1, &tree, 1), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(click_probability(1, &tree, 0), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(
            click_probability(3, &tree, 3),
            6.0 * 0.5 * 0.25 * 0.25 * 0.3f64.powi(3),
            epsilon = 1e-12
        );
    }

    #[test]
    fn click_probability_impossible_counts_vanish() {
        let tree = unit_tree();
        for k in 0..=6usize {
            for c in 0..=4usize {
                if c > k.min(3) {
                    assert_eq!(click_probability(k, &tree, c), 0.0, "k={k} c={c}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn click_probabilities_sum_to_one(
            k in 0usize..=6,
            q1 in 0.05f64..0.9,
            q2 in 0.05f64..0.9,
            eta in 0.05f64..=1.0,
        ) {
            let scale = q1 + q2 + 0.1;
            let tree = DetectorTree::new(
                [q1 / scale, q2 / scale, 0.1 / scale],
                eta,
            ).unwrap();
            let total: f64 = (0..=3).map(|c| click_probability(k, &tree, c)).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn relative_detection_efficiency_ratio() {
        // Detecting |3,0,0> vs |1,1,1> with identical trees: the analytic
        // ratio 3! q1 q2 q3 eta^3 / eta^3 that the estimator must undo.
        let eta = 0.3;
        let tree = DetectorTree::cascaded_balanced(eta).unwrap();
        let p_bunch = click_probability(3, &tree, 3) * click_probability(0, &tree, 0).powi(2);
        let p_split = click_probability(1, &tree, 1).powi(3);
        let expected = 6.0 * 0.5 * 0.25 * 0.25 * eta.powi(3) / eta.powi(3);
        assert_abs_diff_eq!(p_bunch / p_split, expected, epsilon = 1e-12);
    }

    #[test]
    fn simulate_unit_efficiency_no_collision_input() {
        let u = ideal_tritter();
        let ens = PhotonEnsemble::indistinguishable(&[0, 1, 2]).unwrap();
        let dist = distribution(&u, &ens).unwrap();
        // Concentrate on (1,1,1): use the identity circuit instead.
        let id =
            crate::circuit::CircuitUnitary::new(nalgebra::DMatrix::identity(3, 3), "id").unwrap();
        let dist_id = distribution(&id, &ens).unwrap();
        let trees = vec![unit_tree(); 3];
        let counts = simulate_counts(&dist_id, &trees, 2000, 7).unwrap();
        assert_eq!(counts.total(), counts.count(&pattern(&[1, 1, 1])));
        assert_eq!(counts.total(), 2000);
        let _ = dist;
    }

    #[test]
    fn simulate_bunched_input_records_expected_fraction() {
        // All probability on (3,0,0): recorded fraction approximates the
        // triple-click probability 3/16.
        let mut probs = vec![0.0; 10];
        probs[0] = 1.0;
        let dist = OutputDistribution::from_probs(3, 3, probs).unwrap();
        let trees = vec![unit_tree(); 3];
        let n_events = 200_000u64;
        let counts = simulate_counts(&dist, &trees, n_events, 11).unwrap();
        let fraction = counts.total() as f64 / n_events as f64;
        assert!(
            (fraction - 3.0 / 16.0).abs() < 0.005,
            "triple fraction {fraction}"
        );
        assert_eq!(counts.count(&pattern(&[3, 0, 0])), counts.total());
    }

    #[test]
    fn estimator_exact_on_forward_model() {
        // Counts exactly proportional to the forward model of the ideal
        // indistinguishable distribution recover it to solver precision.
        let trees = vec![DetectorTree::cascaded_balanced(0.3).unwrap(); 3];
        let truth = {
            let u = ideal_tritter();
            let ens = PhotonEnsemble::indistinguishable(&[0, 1, 2]).unwrap();
            distribution(&u, &ens).unwrap()
        };
        let patterns = enumerate_patterns(3, 3);
        let scale = 1e9f64;
        let mut counts = BTreeMap::new();
        for click in &patterns {
            let mut q = 0.0;
            for (t, p) in truth.iter() {
                let mut resp = 1.0;
                for (mode, tree) in trees.iter().enumerate() {
                    resp *= click_probability(t.counts()[mode], tree, click.counts()[mode]);
                }
                q += resp * p;
            }
            let c = (q * scale).round() as u64;
            if c > 0 {
                counts.insert(click.clone(), c);
            }
        }
        let counts = ClickPatternCounts::new(counts, 0.0).unwrap();
        let est = estimate_distribution(&counts, &trees, 10, 1).unwrap();
        let dev = est.corrected.max_bin_deviation(&truth);
        assert!(dev < 1e-9, "deviation {dev}");
    }

    #[test]
    fn estimator_corrects_bunching_bias() {
        let trees = vec![DetectorTree::cascaded_balanced(0.3).unwrap(); 3];
        let u = ideal_tritter();
        let ens = PhotonEnsemble::indistinguishable(&[0, 1, 2]).unwrap();
        let truth = distribution(&u, &ens).unwrap();
        let counts = simulate_counts(&truth, &trees, 3_000_000, 23).unwrap();
        assert!(counts.total() > 10_000);
        let est = estimate_distribution(&counts, &trees, 200, 5).unwrap();

        // Raw frequencies over-represent (1,1,1); the corrected estimate
        // restores the 1/3 : 2/9 balance.
        let raw_111 = est.uncorrected.probability(&pattern(&[1, 1, 1])).unwrap();
        assert!(raw_111 > 0.5, "raw (1,1,1) fraction {raw_111}");
        let corr_111 = est.corrected.probability(&pattern(&[1, 1, 1])).unwrap();
        assert!((corr_111 - 1.0 / 3.0).abs() < 0.01, "corrected {corr_111}");
        let corr_bunch = est.corrected.probability(&pattern(&[3, 0, 0])).unwrap();
        assert!(
            (corr_bunch - 2.0 / 9.0).abs() < 0.01,
            "corrected {corr_bunch}"
        );
    }

    #[test]
    fn closed_loop_within_bootstrap_errors() {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(404);
        let trees = vec![DetectorTree::cascaded_balanced(0.3).unwrap(); 3];
        for case in 0..3 {
            let truth = OutputDistribution::sample_random(3, 3, &mut rng);
            let counts = simulate_counts(&truth, &trees, 1_000_000, 1000 + case).unwrap();
            let est = estimate_distribution(&counts, &trees, 300, 2000 + case).unwrap();
            for (i, (t, p)) in truth.iter().enumerate() {
                let err = est.sigma[i].max(1e-6);
                let z = (est.corrected.probabilities()[i] - p).abs() / err;
                assert!(z < 4.0, "case {case}, bin {t}: z = {z}");
            }
        }
    }

    #[test]
    fn empty_bunching_bins_get_positive_upper_bounds() {
        // Distribution with no bunching at all: (1,1,1) only.
        let mut probs = vec![0.0; 10];
        probs[4] = 1.0;
        let dist = OutputDistribution::from_probs(3, 3, probs).unwrap();
        let trees = vec![unit_tree(); 3];
        let counts = simulate_counts(&dist, &trees, 5000, 3).unwrap();
        let est = estimate_distribution(&counts, &trees, 100, 9).unwrap();
        for (i, (t, _)) in est.corrected.iter().enumerate() {
            if t.counts() == [1, 1, 1] {
                continue;
            }
            assert_eq!(est.corrected.probabilities()[i], 0.0, "bin {t}");
            assert!(est.upper68[i] > 0.0, "bin {t} upper bound");
        }
    }

    #[test]
    fn zero_efficiency_is_singular() {
        let trees = vec![DetectorTree::cascaded_balanced(0.0).unwrap(); 3];
        let mut counts = BTreeMap::new();
        counts.insert(pattern(&[1, 1, 1]), 10u64);
        let counts = ClickPatternCounts::new(counts, 0.0).unwrap();
        assert!(matches!(
            estimate_distribution(&counts, &trees, 10, 1),
            Err(Error::SingularResponse(_))
        ));
    }

    #[test]
    fn dark_rates_are_rejected_in_simulation() {
        let tree = unit_tree().with_dark_rate(10.0).unwrap();
        let trees = vec![tree; 3];
        let mut probs = vec![0.0; 10];
        probs[4] = 1.0;
        let dist = OutputDistribution::from_probs(3, 3, probs).unwrap();
        assert!(simulate_counts(&dist, &trees, 100, 1).is_err());
    }

    #[test]
    fn estimate_report_serializes() {
        let trees = vec![unit_tree(); 3];
        let mut probs = vec![0.0; 10];
        probs[4] = 1.0;
        let dist = OutputDistribution::from_probs(3, 3, probs).unwrap();
        let counts = simulate_counts(&dist, &trees, 2000, 3).unwrap();
        let est = estimate_distribution(&counts, &trees, DEFAULT_BOOTSTRAP_RESAMPLES, 9).unwrap();
        let report = est.report_json();
        assert_eq!(report["photons"], 3);
        assert_eq!(report["bootstrap_resamples"], DEFAULT_BOOTSTRAP_RESAMPLES);
        let bins = report["bins"].as_array().unwrap();
        assert_eq!(bins.len(), 10);
        assert_eq!(bins[4]["pattern"], "1,1,1");
        assert!((bins[4]["probability"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn counts_csv_round_trip() {
        let mut counts = BTreeMap::new();
        counts.insert(pattern(&[1, 1, 1]), 700u64);
        counts.insert(pattern(&[3, 0, 0]), 41u64);
        let counts = ClickPatternCounts::new(counts, 6120.0).unwrap();
        let mut buf = Vec::new();
        counts.write_csv(&mut buf).unwrap();
        let back = ClickPatternCounts::read_csv(buf.as_slice(), 6120.0).unwrap();
        assert_eq!(back.total(), counts.total());
        assert_eq!(back.count(&pattern(&[3, 0, 0])), 41);
    }

    #[test]
    fn detector_tree_validation() {
        assert!(DetectorTree::new([0.5, 0.3, 0.3], 1.0).is_err());
        assert!(DetectorTree::new([0.5, 0.25, 0.25], 1.2).is_err());
        assert!(DetectorTree::new([-0.1, 0.6, 0.5], 0.5).is_err());
    }

    #[test]
    fn nnls_matches_unconstrained_solution_when_interior() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let x = nnls(&a, &b).unwrap();
        // Normal equations: [[2,1],[1,2]] x = [4,5] -> x = (1, 2).
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn nnls_clamps_negative_components() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_column_slice(&[1.0, -1.0]);
        let x = nnls(&a, &b).unwrap();
        assert!(x.iter().all(|&v| v >= 0.0));
        // Best non-negative fit puts everything on the first column.
        assert!(x[1].abs() < 1e-9);
    }
}
