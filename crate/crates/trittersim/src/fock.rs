//! Fock-state combinatorics shared by the interference and detection code:
//! photon occupation patterns over modes, canonical photon-to-mode
//! assignments, and pattern enumeration.

use crate::error::{Error, Result};

/// Photon occupation per mode: `counts()[k]` photons in mode `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationPattern {
    counts: Vec<usize>,
}

impl OccupationPattern {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument(
                "occupation pattern needs at least one mode".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Number of modes `m`.
    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    /// Total photon number `n`.
    pub fn photons(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Product of factorials of the per-mode counts, the bosonic
    /// normalization factor appearing in output probabilities.
    pub fn multiplicity_factor(&self) -> u64 {
        self.counts.iter().map(|&c| factorial(c)).product()
    }

    /// Canonical mode assignment: one entry per photon, ordered by
    /// non-decreasing mode index.
    pub fn mode_assignment(&self) -> ModeAssignment {
        let mut modes = Vec::with_capacity(self.photons());
        for (mode, &c) in self.counts.iter().enumerate() {
            modes.extend(std::iter::repeat_n(mode, c));
        }
        ModeAssignment { modes }
    }

    /// Comma-separated counts, e.g. `3,0,0`.
    pub fn label(&self) -> String {
        self.counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parse a label produced by [`OccupationPattern::label`].
    pub fn parse(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad pattern label {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }
}

impl std::fmt::Display for OccupationPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{}>", self.label())
    }
}

/// Ordered list of mode indices, one per photon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeAssignment {
    modes: Vec<usize>,
}

impl ModeAssignment {
    pub fn new(modes: Vec<usize>, mode_count: usize) -> Result<Self> {
        if let Some(&bad) = modes.iter().find(|&&k| k >= mode_count) {
            return Err(Error::OutOfRange(format!(
                "mode index {bad} not below mode count {mode_count}"
            )));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn photons(&self) -> usize {
        self.modes.len()
    }

    /// Collapse back to the occupation pattern over `mode_count` modes.
    pub fn to_pattern(&self, mode_count: usize) -> Result<OccupationPattern> {
        let mut counts = vec![0usize; mode_count];
        for &k in &self.modes {
            if k >= mode_count {
                return Err(Error::OutOfRange(format!(
                    "mode index {k} not below mode count {mode_count}"
                )));
            }
            counts[k] += 1;
        }
        OccupationPattern::new(counts)
    }
}

/// All occupation patterns of `n` photons over `m` modes, in lexicographic
/// order with the first-mode count descending. The list has
/// `binomial(n + m - 1, n)` entries.
pub fn enumerate_patterns(n: usize, m: usize) -> Vec<OccupationPattern> {
    assert!(m >= 1, "at least one mode required");
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(m);
    fill_patterns(n, m, &mut prefix, &mut out);
    out
}

fn fill_patterns(
    remaining: usize,
    modes_left: usize,
    prefix: &mut Vec<usize>,
    out: &mut Vec<OccupationPattern>,
) {
    if modes_left == 1 {
        prefix.push(remaining);
        out.push(OccupationPattern {
            counts: prefix.clone(),
        });
        prefix.pop();
        return;
    }
    for c in (0..=remaining).rev() {
        prefix.push(c);
        fill_patterns(remaining - c, modes_left - 1, prefix, out);
        prefix.pop();
    }
}

/// Index of `pattern` within `enumerate_patterns(n, m)` order, if valid.
pub fn pattern_index(pattern: &OccupationPattern, n: usize, m: usize) -> Option<usize> {
    if pattern.modes() != m || pattern.photons() != n {
        return None;
    }
    // Count patterns ordered before `pattern`: walk the prefix tree.
    let mut index = 0usize;
    let mut remaining = n;
    for (mode, &c) in pattern.counts().iter().enumerate() {
        let modes_left = m - mode;
        if modes_left == 1 {
            break;
        }
        for higher in (c + 1)..=remaining {
            index += compositions(remaining - higher, modes_left - 1);
        }
        remaining -= c;
    }
    Some(index)
}

/// Number of ways to place `n` photons in `m` modes: C(n + m - 1, n).
pub fn compositions(n: usize, m: usize) -> usize {
    binomial((n + m - 1) as u64, n as u64) as usize
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

pub(crate) fn factorial(n: usize) -> u64 {
    (2..=n as u64).product::<u64>().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn three_photons_three_modes_gives_ten_patterns() {
        let pats = enumerate_patterns(3, 3);
        assert_eq!(pats.len(), 10);
        let distinct: HashSet<_> = pats.iter().cloned().collect();
        assert_eq!(distinct.len(), 10);
        assert!(pats.iter().all(|p| p.photons() == 3 && p.modes() == 3));
    }

    #[test]
    fn vacuum_is_single_all_zero_pattern() {
        let pats = enumerate_patterns(0, 3);
        assert_eq!(pats.len(), 1);
        assert_eq!(pats[0].counts(), &[0, 0, 0]);
    }

    #[test]
    fn two_photons_four_modes_gives_ten_patterns() {
        // Independent count: C(2 + 4 - 1, 2) = C(5, 2) = 10 by direct
        // enumeration of index pairs i <= j.
        let mut count = 0;
        for i in 0..4 {
            for j in i..4 {
                let _ = (i, j);
                count += 1;
            }
        }
        assert_eq!(count, 10);
        assert_eq!(enumerate_patterns(2, 4).len(), count);
    }

    #[test]
    fn order_is_lexicographic_descending_first_mode() {
        let pats = enumerate_patterns(3, 3);
        let labels: Vec<_> = pats.iter().map(|p| p.label()).collect();
        assert_eq!(
            labels,
            vec![
                "3,0,0", "2,1,0", "2,0,1", "1,2,0", "1,1,1", "1,0,2", "0,3,0", "0,2,1", "0,1,2",
                "0,0,3",
            ]
        );
    }

    #[test]
    fn multiplicity_factors() {
        let p = |c: &[usize]| OccupationPattern::new(c.to_vec()).unwrap();
        assert_eq!(p(&[1, 1, 1]).multiplicity_factor(), 1);
        assert_eq!(p(&[3, 0, 0]).multiplicity_factor(), 6);
        assert_eq!(p(&[2, 1, 0]).multiplicity_factor(), 2);
    }

    #[test]
    fn pattern_index_matches_enumeration() {
        for (n, m) in [(3, 3), (2, 4), (4, 2), (0, 3), (5, 3)] {
            let pats = enumerate_patterns(n, m);
            for (i, p) in pats.iter().enumerate() {
                assert_eq!(pattern_index(p, n, m), Some(i), "pattern {p}");
            }
        }
        let p = OccupationPattern::new(vec![1, 1]).unwrap();
        assert_eq!(pattern_index(&p, 3, 2), None);
    }

    #[test]
    fn assignment_rejects_out_of_range_modes() {
        assert!(ModeAssignment::new(vec![0, 3], 3).is_err());
    }

    #[test]
    fn label_round_trip() {
        let p = OccupationPattern::new(vec![2, 0, 1]).unwrap();
        assert_eq!(OccupationPattern::parse(&p.label()).unwrap(), p);
    }

    proptest! {
        #[test]
        fn enumeration_count_and_sums(n in 0usize..6, m in 1usize..6) {
            let pats = enumerate_patterns(n, m);
            prop_assert_eq!(pats.len(), compositions(n, m));
            let distinct: HashSet<_> = pats.iter().cloned().collect();
            prop_assert_eq!(distinct.len(), pats.len());
            for p in &pats {
                prop_assert_eq!(p.photons(), n);
            }
        }

        #[test]
        fn counts_to_assignment_round_trip(counts in proptest::collection::vec(0usize..4, 1..6)) {
            let p = OccupationPattern::new(counts).unwrap();
            let back = p.mode_assignment().to_pattern(p.modes()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
