use std::fmt;

use crate::error::{Error, Result};

/// A set of level indices of one column, stored as sorted, disjoint,
/// non-adjacent half-open runs `[start, end)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LevelSet {
    stage: usize,
    runs: Vec<(u64, u64)>,
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevelSet(stage {}, ", self.stage)?;
        f.debug_list()
            .entries(self.runs.iter().map(|(a, b)| a..b))
            .finish()?;
        write!(f, ")")
    }
}

impl LevelSet {
    pub fn empty(stage: usize) -> Self {
        LevelSet {
            stage,
            runs: Vec::new(),
        }
    }

    /// Levels `start..end` of column `stage`.
    pub fn range(stage: usize, start: u64, end: u64) -> Self {
        Self::from_runs(stage, [(start, end)])
    }

    pub fn from_levels(stage: usize, levels: impl IntoIterator<Item = u64>) -> Self {
        Self::from_runs(stage, levels.into_iter().map(|l| (l, l + 1)))
    }

    /// Normalizes arbitrary (possibly overlapping, unsorted) runs.
    pub fn from_runs(stage: usize, runs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut v: Vec<(u64, u64)> = runs.into_iter().filter(|(a, b)| a < b).collect();
        v.sort_unstable();
        LevelSet {
            stage,
            runs: merge_sorted(v),
        }
    }

    /// Runs already sorted by start; merges overlaps and adjacency.
    pub(crate) fn from_sorted_runs(stage: usize, runs: Vec<(u64, u64)>) -> Self {
        debug_assert!(runs.windows(2).all(|w| w[0].0 <= w[1].0));
        LevelSet {
            stage,
            runs: merge_sorted(runs),
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn runs(&self) -> &[(u64, u64)] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Number of levels.
    pub fn count(&self) -> u64 {
        self.runs.iter().map(|(a, b)| b - a).sum()
    }

    pub fn max_level(&self) -> Option<u64> {
        self.runs.last().map(|&(_, b)| b - 1)
    }

    pub fn contains(&self, level: u64) -> bool {
        let i = self.runs.partition_point(|&(_, b)| b <= level);
        self.runs.get(i).is_some_and(|&(a, _)| a <= level)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.runs.iter().flat_map(|&(a, b)| a..b)
    }

    /// Members `>= from`.
    pub fn count_at_least(&self, from: u64) -> u64 {
        self.runs
            .iter()
            .map(|&(a, b)| b.saturating_sub(a.max(from)))
            .sum()
    }

    /// Members `< below`.
    pub fn count_below(&self, below: u64) -> u64 {
        self.runs
            .iter()
            .map(|&(a, b)| b.min(below).saturating_sub(a))
            .sum()
    }

    pub fn check_bounds(&self, height: u64) -> Result<()> {
        match self.max_level() {
            Some(m) if m >= height => Err(Error::invalid(format!(
                "level {m} outside column {} of height {height}",
                self.stage
            ))),
            _ => Ok(()),
        }
    }

    fn same_stage(&self, other: &LevelSet) -> Result<()> {
        if self.stage != other.stage {
            return Err(Error::invalid(format!(
                "level sets live on different columns ({} vs {})",
                self.stage, other.stage
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &LevelSet) -> Result<LevelSet> {
        self.same_stage(other)?;
        let mut v = Vec::with_capacity(self.runs.len() + other.runs.len());
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() || j < other.runs.len() {
            let take_left = j >= other.runs.len()
                || (i < self.runs.len() && self.runs[i].0 <= other.runs[j].0);
            if take_left {
                v.push(self.runs[i]);
                i += 1;
            } else {
                v.push(other.runs[j]);
                j += 1;
            }
        }
        Ok(LevelSet::from_sorted_runs(self.stage, v))
    }

    pub fn intersect(&self, other: &LevelSet) -> Result<LevelSet> {
        self.same_stage(other)?;
        Ok(LevelSet {
            stage: self.stage,
            runs: intersect_runs(&self.runs, &other.runs),
        })
    }

    /// Number of common members, without building the intersection.
    pub fn overlap(&self, other: &LevelSet) -> Result<u64> {
        self.same_stage(other)?;
        Ok(overlap_runs(&self.runs, &other.runs, 0))
    }

    pub fn difference(&self, other: &LevelSet) -> Result<LevelSet> {
        self.same_stage(other)?;
        let max = self
            .max_level()
            .max(other.max_level())
            .map_or(0, |m| m + 1);
        let comp = other.complement(max);
        self.intersect(&comp)
    }

    /// Levels of `[0, height)` not in the set.
    pub fn complement(&self, height: u64) -> LevelSet {
        let mut v = Vec::with_capacity(self.runs.len() + 1);
        let mut cur = 0;
        for &(a, b) in &self.runs {
            if a >= height {
                break;
            }
            if a > cur {
                v.push((cur, a));
            }
            cur = cur.max(b);
        }
        if cur < height {
            v.push((cur, height));
        }
        LevelSet {
            stage: self.stage,
            runs: v,
        }
    }

    /// Shifts every level by `n`, keeping those landing in `[0, height)`.
    /// Returns the shifted set and the number of levels that fell outside.
    pub fn shift_within(&self, n: i64, height: u64) -> (LevelSet, u64) {
        let mut v = Vec::with_capacity(self.runs.len());
        let mut lost = 0u64;
        for &(a, b) in &self.runs {
            let lo = a as i128 + n as i128;
            let hi = b as i128 + n as i128;
            let clo = lo.clamp(0, height as i128);
            let chi = hi.clamp(0, height as i128);
            if clo < chi {
                v.push((clo as u64, chi as u64));
            }
            lost += (b - a) - (chi - clo).max(0) as u64;
        }
        (
            LevelSet {
                stage: self.stage,
                runs: v,
            },
            lost,
        )
    }
}

fn merge_sorted(v: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        if a >= b {
            continue;
        }
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub(crate) fn intersect_runs(x: &[(u64, u64)], y: &[(u64, u64)]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        let lo = x[i].0.max(y[j].0);
        let hi = x[i].1.min(y[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// `|{u in x : u + shift in y}|` for sorted run lists.
pub(crate) fn overlap_runs(x: &[(u64, u64)], y: &[(u64, u64)], shift: i64) -> u64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0u64;
    let s = shift as i128;
    while i < x.len() && j < y.len() {
        let (xa, xb) = (x[i].0 as i128 + s, x[i].1 as i128 + s);
        let (ya, yb) = (y[j].0 as i128, y[j].1 as i128);
        let lo = xa.max(ya);
        let hi = xb.min(yb);
        if lo < hi {
            total += (hi - lo) as u64;
        }
        if xb < yb {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}
