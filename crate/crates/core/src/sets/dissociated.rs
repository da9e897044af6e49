use serde::{Deserialize, Serialize};

use super::index_set::{IndexSet, Window};
use crate::error::{Error, Result};

/// Positive integers with `n_j > 2 * sum_{i<j} n_i`, so every signed sum
/// `sum eps_j n_j` with `eps_j in {-1, 0, 1}` determines its signs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct DissociatedSequence {
    terms: Vec<i64>,
}

impl TryFrom<Vec<i64>> for DissociatedSequence {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DissociatedSequence> for Vec<i64> {
    fn from(d: DissociatedSequence) -> Self {
        d.terms
    }
}

impl DissociatedSequence {
    pub fn new(terms: Vec<i64>) -> Result<Self> {
        let mut sum: i128 = 0;
        for (j, &t) in terms.iter().enumerate() {
            if t <= 0 {
                return Err(Error::invalid(format!("term {j} = {t} is not positive")));
            }
            if (t as i128) <= 2 * sum {
                return Err(Error::invalid(format!(
                    "term {j} = {t} does not exceed twice the sum {sum} of earlier terms"
                )));
            }
            sum += t as i128;
            if sum > i64::MAX as i128 / 2 {
                return Err(Error::invalid("term sums overflow 63-bit integers"));
            }
        }
        Ok(DissociatedSequence { terms })
    }

    /// `base^(a j + b)` for `j < count`.
    pub fn geometric(base: i64, a: u32, b: u32, count: usize) -> Result<Self> {
        let terms = (0..count as u32)
            .map(|j| {
                base.checked_pow(a * j + b)
                    .ok_or_else(|| Error::invalid("geometric term overflows"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn terms(&self) -> &[i64] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total(&self) -> i64 {
        self.terms.iter().sum()
    }

    /// Signs `eps` with `sum eps_j n_j == m`, if any. Top-down: the sign of the
    /// largest term is forced because the smaller ones sum to less than half of it.
    pub fn decompose(&self, m: i64) -> Option<Vec<i8>> {
        let mut eps = vec![0i8; self.terms.len()];
        let mut rest = m as i128;
        let mut below: i128 = self.terms.iter().map(|&t| t as i128).sum();
        for j in (0..self.terms.len()).rev() {
            let t = self.terms[j] as i128;
            below -= t;
            if rest > below {
                eps[j] = 1;
                rest -= t;
            } else if rest < -below {
                eps[j] = -1;
                rest += t;
            }
        }
        (rest == 0).then_some(eps)
    }
}

/// `{ t + sum eps_j n_j : |eps|_1 <= max_terms } ∩ window`, ascending.
pub fn riesz_support(
    d: &DissociatedSequence,
    max_terms: Option<usize>,
    shift: i64,
    w: Window,
) -> Result<Vec<i64>> {
    let n = d.terms.len();
    let cap = max_terms.unwrap_or(n).min(n);
    let mut prefix = vec![0i64; n + 1];
    for j in 0..n {
        prefix[j + 1] = prefix[j] + d.terms[j];
    }
    let lo = w.lo as i128 - shift as i128;
    let hi = w.hi as i128 - shift as i128;
    let mut out = Vec::new();
    let mut stack: Vec<(usize, i128, usize)> = vec![(n, 0, cap)];
    // Children are pushed in reverse so that sums pop in ascending order.
    while let Some((j, s, left)) = stack.pop() {
        let reach = if left == 0 { 0 } else { prefix[j] as i128 };
        if s + reach < lo || s - reach > hi {
            continue;
        }
        if j == 0 || left == 0 {
            if s >= lo && s <= hi {
                let v = (s + shift as i128) as i64;
                if out.last().is_some_and(|&last| last >= v) {
                    return Err(Error::Invariant(format!(
                        "signed sums are not distinct or not ordered at {v}; sequence is not dissociated"
                    )));
                }
                out.push(v);
            }
            continue;
        }
        let t = d.terms[j - 1] as i128;
        stack.push((j - 1, s + t, left - 1));
        stack.push((j - 1, s, left));
        stack.push((j - 1, s - t, left - 1));
    }
    Ok(out)
}

/// Window test of whether the shifted signed-sum set meets `M^c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuityWindowCheck {
    pub window: Window,
    pub support_size: usize,
    /// Support points outside `M`, ascending.
    pub outside: Vec<i64>,
}

impl ContinuityWindowCheck {
    /// True when the support meets the complement of `M` inside the window.
    pub fn meets_complement(&self) -> bool {
        !self.outside.is_empty()
    }
}

pub fn rajchman_dissociated_property_check(
    m: &IndexSet,
    d: &DissociatedSequence,
    max_terms: Option<usize>,
    shift: i64,
    w: Window,
) -> Result<ContinuityWindowCheck> {
    let support = riesz_support(d, max_terms, shift, w)?;
    let mut outside = Vec::new();
    for &x in &support {
        if !m.contains(x)? {
            outside.push(x);
        }
    }
    Ok(ContinuityWindowCheck {
        window: w,
        support_size: support.len(),
        outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn w(lo: i64, hi: i64) -> Window {
        Window::new(lo, hi).unwrap()
    }

    #[test]
    fn two_term_support() {
        let d = DissociatedSequence::new(vec![5, 125]).unwrap();
        assert_eq!(riesz_support(&d, None, 0, w(0, 130)).unwrap(), vec![0, 5, 120, 125, 130]);
        assert_eq!(riesz_support(&d, Some(0), 7, w(-1000, 1000)).unwrap(), vec![7]);
        assert!(riesz_support(&d, None, 0, w(6, 100)).unwrap().is_empty());
        assert_eq!(d.decompose(120), Some(vec![-1, 1]));
        assert_eq!(d.decompose(7), None);
    }

    #[test]
    fn rejects_non_dissociated() {
        assert!(DissociatedSequence::new(vec![1, 2]).is_err());
        assert!(DissociatedSequence::new(vec![1, 3, 8]).is_err());
        assert!(DissociatedSequence::new(vec![0]).is_err());
        assert!(DissociatedSequence::new(vec![1, 3, 9]).is_ok());
    }

    #[test]
    fn trivial_continuity_checks() {
        let d = DissociatedSequence::new(vec![5, 125]).unwrap();
        let none = rajchman_dissociated_property_check(&IndexSet::empty(), &d, None, 0, w(0, 200)).unwrap();
        assert!(none.meets_complement());
        let all = rajchman_dissociated_property_check(&IndexSet::naturals(), &d, None, 0, w(0, 200)).unwrap();
        assert!(!all.meets_complement());
    }

    fn brute(terms: &[i64], cap: usize, t: i64) -> BTreeSet<i64> {
        let k = terms.len();
        let mut out = BTreeSet::new();
        for code in 0..3usize.pow(k as u32) {
            let (mut c, mut s, mut used) = (code, t, 0);
            for &n in terms {
                match c % 3 {
                    1 => { s += n; used += 1; }
                    2 => { s -= n; used += 1; }
                    _ => {}
                }
                c /= 3;
            }
            if used <= cap {
                assert!(out.insert(s) || used > cap, "duplicate sum {s}");
            }
        }
        out
    }

    proptest! {
        #[test]
        fn support_matches_enumeration(
            raw in proptest::collection::vec(0i64..4, 1..7),
            cap in 0usize..7,
            t in -20i64..20,
            lo in -400i64..100,
            len in 0i64..600,
        ) {
            let mut terms = Vec::new();
            let mut sum = 0;
            for r in raw {
                let n = 2 * sum + 1 + r;
                terms.push(n);
                sum += n;
            }
            let d = DissociatedSequence::new(terms.clone()).unwrap();
            let win = w(lo, lo + len);
            let got = riesz_support(&d, Some(cap), t, win).unwrap();
            let want: Vec<i64> = brute(&terms, cap, t).into_iter().filter(|x| win.contains(*x)).collect();
            prop_assert_eq!(&got, &want);
            for &x in &got {
                let eps = d.decompose(x - t).unwrap();
                prop_assert!(eps.iter().filter(|&&e| e != 0).count() <= cap);
            }
            // Symmetric window about t gives a symmetric support.
            let sym = w(t - len, t + len);
            let s = riesz_support(&d, Some(cap), t, sym).unwrap();
            let mirrored: Vec<i64> = s.iter().rev().map(|x| 2 * t - x).collect();
            prop_assert_eq!(s, mirrored);
        }
    }
}
