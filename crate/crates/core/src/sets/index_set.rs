use num_integer::Roots;
use serde::{Deserialize, Serialize};

use super::dissociated::{riesz_support, DissociatedSequence};
use crate::error::{Error, Result};

/// Inclusive integer window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo) as u64 + 1
        }
    }

    /// Only windows built directly from fields can be empty.
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Descriptor of an infinite or finite set of integers, enumerable on any window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexSet {
    Explicit {
        values: Vec<i64>,
    },
    /// `start, start + step, ...`
    Progression {
        start: i64,
        step: i64,
    },
    /// `n^2` for `n >= 1`.
    Squares,
    /// `p^exponent` over primes `p`; every prime power when `exponent` is absent.
    PrimePowers {
        #[serde(default)]
        exponent: Option<u32>,
    },
    /// Union over `n >= first` of `[base^(period n), base^(period n + 1) - 1]`.
    GeometricIntervals {
        base: i64,
        period: u32,
        #[serde(default = "one")]
        first: u32,
    },
    /// Signed sums of at most `max_terms` distinct terms, shifted by `shift`.
    RieszSupport {
        terms: Vec<i64>,
        #[serde(default)]
        max_terms: Option<usize>,
        #[serde(default)]
        shift: i64,
    },
    Complement {
        of: Box<IndexSet>,
    },
    Shift {
        of: Box<IndexSet>,
        by: i64,
    },
    Union {
        parts: Vec<IndexSet>,
    },
}

fn one() -> u32 {
    1
}

/// Largest prime sieve accepted when enumerating prime powers.
const SIEVE_LIMIT: i64 = 200_000_000;

impl IndexSet {
    pub fn explicit(values: impl IntoIterator<Item = i64>) -> Self {
        let mut values: Vec<i64> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        IndexSet::Explicit { values }
    }

    pub fn naturals() -> Self {
        IndexSet::Progression { start: 0, step: 1 }
    }

    pub fn empty() -> Self {
        IndexSet::Explicit { values: Vec::new() }
    }

    /// `union over n >= 1 of [4^n, 2 * 4^n - 1]`: thick, and `k` in it forces `2k` out.
    pub fn doubling_free_thick() -> Self {
        IndexSet::GeometricIntervals {
            base: 2,
            period: 2,
            first: 1,
        }
    }

    /// `union over n >= 1 of [(r+1)^((r+1)n), (r+1)^((r+1)n+1) - 1]`: `r`-thick and
    /// `k` in it forces `(r+1)k` out.
    pub fn multiplication_free_r_thick(r: u32) -> Self {
        IndexSet::GeometricIntervals {
            base: r as i64 + 1,
            period: r + 1,
            first: 1,
        }
    }

    pub fn complement(self) -> Self {
        IndexSet::Complement { of: Box::new(self) }
    }

    pub fn shifted(self, by: i64) -> Self {
        IndexSet::Shift {
            of: Box::new(self),
            by,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IndexSet::Progression { step, .. } if *step < 1 => {
                Err(Error::invalid("progression step must be positive"))
            }
            IndexSet::PrimePowers { exponent: Some(0) } => {
                Err(Error::invalid("prime power exponent must be positive"))
            }
            IndexSet::GeometricIntervals { base, period, .. } if *base < 2 || *period < 1 => {
                Err(Error::invalid("geometric intervals need base >= 2 and period >= 1"))
            }
            IndexSet::RieszSupport { terms, .. } => DissociatedSequence::new(terms.clone()).map(|_| ()),
            IndexSet::Complement { of } | IndexSet::Shift { of, .. } => of.validate(),
            IndexSet::Union { parts } => parts.iter().try_for_each(|p| p.validate()),
            _ => Ok(()),
        }
    }

    /// Maximal runs `[a, b]` (inclusive) of the set inside the window, ascending.
    pub fn runs(&self, w: Window) -> Result<Vec<(i64, i64)>> {
        let raw = match self {
            IndexSet::Explicit { values } => {
                let i = values.partition_point(|&v| v < w.lo);
                points(values[i..].iter().copied().take_while(|&v| v <= w.hi))
            }
            IndexSet::Progression { start, step } => {
                if *step < 1 {
                    return Err(Error::invalid("progression step must be positive"));
                }
                if *step == 1 {
                    let a = w.lo.max(*start);
                    if a <= w.hi {
                        vec![(a, w.hi)]
                    } else {
                        vec![]
                    }
                } else {
                    let first = if w.lo <= *start {
                        *start
                    } else {
                        start + (w.lo - start + step - 1) / step * step
                    };
                    points((0..).map(|i| first + i * step).take_while(|&v| v <= w.hi))
                }
            }
            IndexSet::Squares => {
                let lo = w.lo.max(1);
                if lo > w.hi {
                    vec![]
                } else {
                    let mut n = (lo - 1).sqrt() + 1;
                    if n * n < lo {
                        n += 1;
                    }
                    points((n..).map(|n| n * n).take_while(|&v| v <= w.hi))
                }
            }
            IndexSet::PrimePowers { exponent } => prime_powers(*exponent, w)?,
            IndexSet::GeometricIntervals { base, period, first } => {
                geometric_intervals(*base, *period, *first, w)?
            }
            IndexSet::RieszSupport {
                terms,
                max_terms,
                shift,
            } => {
                let d = DissociatedSequence::new(terms.clone())?;
                points(riesz_support(&d, *max_terms, *shift, w)?.into_iter())
            }
            IndexSet::Complement { of } => complement_runs(&of.runs(w)?, w),
            IndexSet::Shift { of, by } => {
                let inner = Window::new(w.lo.saturating_sub(*by), w.hi.saturating_sub(*by))?;
                of.runs(inner)?
                    .into_iter()
                    .map(|(a, b)| (a + by, b + by))
                    .collect()
            }
            IndexSet::Union { parts } => {
                let mut all = Vec::new();
                for p in parts {
                    all.extend(p.runs(w)?);
                }
                all.sort_unstable();
                all
            }
        };
        Ok(merge(raw))
    }

    /// Sorted, duplicate-free members in the window.
    pub fn enumerate(&self, w: Window) -> Result<Vec<i64>> {
        Ok(self.runs(w)?.into_iter().flat_map(|(a, b)| a..=b).collect())
    }

    pub fn count(&self, w: Window) -> Result<u64> {
        Ok(self.runs(w)?.iter().map(|(a, b)| (b - a) as u64 + 1).sum())
    }

    pub fn contains(&self, x: i64) -> Result<bool> {
        match self {
            IndexSet::Explicit { values } => Ok(values.binary_search(&x).is_ok()),
            IndexSet::Squares => Ok(x >= 1 && x.sqrt() * x.sqrt() == x),
            IndexSet::Complement { of } => Ok(!of.contains(x)?),
            IndexSet::Shift { of, by } => of.contains(x - by),
            _ => Ok(!self.runs(Window { lo: x, hi: x })?.is_empty()),
        }
    }

    /// The first `count` nonnegative members.
    pub fn first_nonnegative(&self, count: usize) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(count);
        let mut lo = 0i64;
        let mut span = (count as i64).max(16);
        while out.len() < count {
            let hi = lo.checked_add(span - 1).ok_or_else(|| {
                Error::precondition(format!("set has fewer than {count} nonnegative members"))
            })?;
            for v in self.enumerate(Window { lo, hi })? {
                if out.len() == count {
                    break;
                }
                out.push(v);
            }
            lo = hi + 1;
            span = span.saturating_mul(2);
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let set: IndexSet = toml::from_str(text)?;
        set.validate()?;
        Ok(set)
    }
}

fn points(it: impl Iterator<Item = i64>) -> Vec<(i64, i64)> {
    it.map(|v| (v, v)).collect()
}

/// Sorted (by start) inclusive runs into maximal disjoint runs.
fn merge(v: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1.saturating_add(1) => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub(crate) fn complement_runs(runs: &[(i64, i64)], w: Window) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut cur = w.lo;
    for &(a, b) in runs {
        if a > cur {
            out.push((cur, a - 1));
        }
        cur = b + 1;
    }
    if cur <= w.hi {
        out.push((cur, w.hi));
    }
    out
}

fn geometric_intervals(base: i64, period: u32, first: u32, w: Window) -> Result<Vec<(i64, i64)>> {
    if base < 2 || period < 1 {
        return Err(Error::invalid("geometric intervals need base >= 2 and period >= 1"));
    }
    let mut out = Vec::new();
    let mut n = first;
    loop {
        let Some(a) = base.checked_pow(period * n) else {
            break;
        };
        if a > w.hi {
            break;
        }
        let b = base.checked_pow(period * n + 1).map_or(i64::MAX, |v| v - 1);
        let (x, y) = (a.max(w.lo), b.min(w.hi));
        if x <= y {
            out.push((x, y));
        }
        n += 1;
    }
    Ok(out)
}

fn sieve(limit: i64) -> Vec<i64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as i64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

fn prime_powers(exponent: Option<u32>, w: Window) -> Result<Vec<(i64, i64)>> {
    if w.hi < 2 {
        return Ok(vec![]);
    }
    let root = match exponent {
        Some(0) => return Err(Error::invalid("prime power exponent must be positive")),
        Some(e) => w.hi.nth_root(e),
        None => w.hi,
    };
    if root > SIEVE_LIMIT {
        return Err(Error::Budget {
            what: "prime sieve bound",
            value: root.to_string(),
            budget: SIEVE_LIMIT.to_string(),
        });
    }
    let mut v = Vec::new();
    for p in sieve(root) {
        match exponent {
            Some(e) => {
                let q = p.pow(e);
                if q >= w.lo {
                    v.push(q);
                }
            }
            None => {
                let mut q = p;
                loop {
                    if q >= w.lo {
                        v.push(q);
                    }
                    match q.checked_mul(p) {
                        Some(next) if next <= w.hi => q = next,
                        _ => break,
                    }
                }
            }
        }
    }
    v.sort_unstable();
    Ok(points(v.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(lo: i64, hi: i64) -> Window {
        Window::new(lo, hi).unwrap()
    }

    #[test]
    fn basic_enumerations() {
        assert_eq!(IndexSet::Squares.enumerate(w(0, 50)).unwrap(), vec![1, 4, 9, 16, 25, 36, 49]);
        assert_eq!(
            IndexSet::PrimePowers { exponent: None }.enumerate(w(0, 20)).unwrap(),
            vec![2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19]
        );
        assert_eq!(
            IndexSet::PrimePowers { exponent: Some(2) }.enumerate(w(0, 60)).unwrap(),
            vec![4, 9, 25, 49]
        );
        assert_eq!(
            IndexSet::doubling_free_thick().runs(w(0, 100)).unwrap(),
            vec![(4, 7), (16, 31), (64, 100)]
        );
        assert_eq!(
            IndexSet::Progression { start: 3, step: 4 }.enumerate(w(4, 20)).unwrap(),
            vec![7, 11, 15, 19]
        );
    }

    #[test]
    fn composite_kinds() {
        let s = IndexSet::Union {
            parts: vec![IndexSet::Squares, IndexSet::explicit([2, 3])],
        };
        assert_eq!(s.runs(w(0, 10)).unwrap(), vec![(1, 4), (9, 9)]);
        let c = s.clone().complement();
        assert_eq!(c.enumerate(w(0, 10)).unwrap(), vec![0, 5, 6, 7, 8, 10]);
        let sh = IndexSet::Squares.shifted(-1);
        assert_eq!(sh.enumerate(w(0, 10)).unwrap(), vec![0, 3, 8]);
        assert!(sh.contains(8).unwrap() && !sh.contains(9).unwrap());
    }

    #[test]
    fn descriptor_round_trip() {
        let s = IndexSet::Union {
            parts: vec![
                IndexSet::doubling_free_thick().complement(),
                IndexSet::RieszSupport {
                    terms: vec![5, 125],
                    max_terms: Some(2),
                    shift: 1,
                },
            ],
        };
        let text = s.to_toml().unwrap();
        let back = IndexSet::from_toml(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_toml().unwrap(), text);
        assert!(IndexSet::from_toml("kind = \"progression\"\nstart = 0\nstep = 0\n").is_err());
    }

    proptest! {
        #[test]
        fn enumeration_is_sorted_and_matches_membership(lo in -50i64..400, len in 0i64..300, pick in 0usize..6) {
            let sets = [
                IndexSet::Squares,
                IndexSet::doubling_free_thick(),
                IndexSet::PrimePowers { exponent: None },
                IndexSet::Progression { start: 2, step: 3 },
                IndexSet::multiplication_free_r_thick(2).complement(),
                IndexSet::RieszSupport { terms: vec![2, 7, 30], max_terms: None, shift: 3 },
            ];
            let s = &sets[pick];
            let win = w(lo, lo + len);
            let e = s.enumerate(win).unwrap();
            prop_assert!(e.windows(2).all(|p| p[0] < p[1]));
            let brute: Vec<i64> = (win.lo..=win.hi).filter(|&x| s.contains(x).unwrap()).collect();
            prop_assert_eq!(e, brute);
        }
    }
}
