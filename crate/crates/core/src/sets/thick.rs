use super::index_set::{IndexSet, Window};
use crate::error::Result;

/// A grid `{ j k + i : 1 <= j <= multiplicity, |i| <= radius }` found inside a set.
/// Window-relative: absence of a witness is never a statement about the whole set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThickWitness {
    pub center: i64,
    pub radius: u64,
    pub multiplicity: u32,
}

impl ThickWitness {
    /// Grid points, ascending.
    pub fn grid(&self) -> Vec<i64> {
        let l = self.radius as i64;
        let mut v: Vec<i64> = (1..=self.multiplicity as i64)
            .flat_map(|j| (-l..=l).map(move |i| j * self.center + i))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Checks the grid against a set, inside the window.
    pub fn holds_in(&self, s: &IndexSet, w: Window) -> Result<bool> {
        for x in self.grid() {
            if !w.contains(x) || !s.contains(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Smallest center `k >= 1` with `[k - l, k + l]` inside `S ∩ window`.
pub fn is_thick_in_window(s: &IndexSet, w: Window, radius: u64) -> Result<Option<ThickWitness>> {
    r_thick_witness(s, 1, w, radius)
}

/// Smallest center `k >= 1` whose `r`-fold grid of radius `l` lies in `S ∩ window`.
pub fn r_thick_witness(
    s: &IndexSet,
    r: u32,
    w: Window,
    radius: u64,
) -> Result<Option<ThickWitness>> {
    r_thick_witness_from(s, r, w, radius, 1)
}

/// As [`r_thick_witness`], restricted to centers `>= min_center`.
pub fn r_thick_witness_from(
    s: &IndexSet,
    r: u32,
    w: Window,
    radius: u64,
    min_center: i64,
) -> Result<Option<ThickWitness>> {
    if r == 0 {
        return Err(crate::error::Error::invalid("multiplicity must be at least 1"));
    }
    let l = radius as i64;
    let runs = long_runs(s, w, 2 * radius + 1)?;
    // Centers allowed by j: [ceil((a + l) / j), floor((b - l) / j)] per run [a, b].
    let mut allowed: Vec<(i64, i64)> = vec![(min_center.max(1), i64::MAX)];
    for j in 1..=r as i64 {
        let cand: Vec<(i64, i64)> = runs
            .iter()
            .filter_map(|&(a, b)| {
                let lo = (a + l).div_euclid(j) + i64::from((a + l).rem_euclid(j) != 0);
                let hi = (b - l).div_euclid(j);
                (lo <= hi).then_some((lo, hi))
            })
            .collect();
        allowed = intersect(&allowed, &cand);
        if allowed.is_empty() {
            return Ok(None);
        }
    }
    Ok(allowed.first().map(|&(k, _)| ThickWitness {
        center: k,
        radius,
        multiplicity: r,
    }))
}

/// Starting chunk width for [`long_runs`]; it doubles while chunks hold few runs.
const RUN_CHUNK: i64 = 1 << 22;
/// Chunks with fewer runs than this widen.
const SPARSE_RUNS: usize = 1 << 16;

/// Maximal runs of `S ∩ window` with at least `min_len` points, scanned chunk by chunk.
fn long_runs(s: &IndexSet, w: Window, min_len: u64) -> Result<Vec<(i64, i64)>> {
    let mut out = Vec::new();
    // Run still open at the end of the previous chunk.
    let mut open: Option<(i64, i64)> = None;
    let keep = |run: (i64, i64), out: &mut Vec<(i64, i64)>| {
        if (run.1 - run.0) as u64 + 1 >= min_len {
            out.push(run);
        }
    };
    let mut lo = w.lo;
    let mut width = RUN_CHUNK;
    while lo <= w.hi {
        let hi = lo.saturating_add(width - 1).min(w.hi);
        let runs = s.runs(Window::new(lo, hi)?)?;
        if runs.len() < SPARSE_RUNS {
            width = width.saturating_mul(2);
        }
        for (a, b) in runs {
            match open {
                Some((oa, ob)) if ob + 1 == a => open = Some((oa, b)),
                _ => {
                    if let Some(run) = open.take() {
                        keep(run, &mut out);
                    }
                    open = Some((a, b));
                }
            }
        }
        if hi == w.hi {
            break;
        }
        lo = hi + 1;
    }
    if let Some(run) = open {
        keep(run, &mut out);
    }
    Ok(out)
}

fn intersect(x: &[(i64, i64)], y: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        let lo = x[i].0.max(y[j].0);
        let hi = x[i].1.min(y[j].1);
        if lo <= hi {
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

/// Largest radius `l <= cap` such that the `r`-fold grid of radius `l` about
/// `center` lies in `S`, or `None` if some `j * center` is outside `S`.
pub fn grid_margin(s: &IndexSet, r: u32, center: i64, cap: u64) -> Result<Option<u64>> {
    let c = cap as i64;
    let mut best = cap;
    for j in 1..=r as i64 {
        let x = j * center;
        let runs = s.runs(Window::new(x - c, x + c)?)?;
        let Some(&(a, b)) = runs.iter().find(|&&(a, b)| a <= x && x <= b) else {
            return Ok(None);
        };
        best = best.min((x - a).min(b - x) as u64);
    }
    Ok(Some(best))
}

/// Every `k in S ∩ window` with `m k in S`. Empty means the window is free of violations.
pub fn doubling_free_check(s: &IndexSet, w: Window, factor: i64) -> Result<Vec<i64>> {
    if factor < 1 {
        return Err(crate::error::Error::invalid("factor must be positive"));
    }
    let base = s.runs(w)?;
    let scaled_window = Window::new(
        w.lo.saturating_mul(factor).min(w.hi.saturating_mul(factor)),
        w.hi.saturating_mul(factor).max(w.lo.saturating_mul(factor)),
    )?;
    let scaled = s.runs(scaled_window)?;
    // k qualifies iff m k lies in a run [c, d], i.e. k in [ceil(c/m), floor(d/m)].
    let targets: Vec<(i64, i64)> = scaled
        .iter()
        .filter_map(|&(c, d)| {
            let lo = c.div_euclid(factor) + i64::from(c.rem_euclid(factor) != 0);
            let hi = d.div_euclid(factor);
            (lo <= hi).then_some((lo, hi))
        })
        .collect();
    Ok(intersect(&base, &targets)
        .into_iter()
        .flat_map(|(a, b)| a..=b)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(lo: i64, hi: i64) -> Window {
        Window::new(lo, hi).unwrap()
    }

    #[test]
    fn doubling_free_thick_set_examples() {
        let k = IndexSet::doubling_free_thick();
        let wit = is_thick_in_window(&k, w(1, 100), 3).unwrap().unwrap();
        assert_eq!(wit.center, 19);
        assert!(wit.holds_in(&k, w(1, 100)).unwrap());
        let other = ThickWitness { center: 20, radius: 3, multiplicity: 1 };
        assert!(other.holds_in(&k, w(1, 100)).unwrap());
        assert!(doubling_free_check(&k, w(1, 1 << 10), 2).unwrap().is_empty());
        assert_eq!(doubling_free_check(&IndexSet::explicit([1, 2]), w(1, 2), 2).unwrap(), vec![1]);
    }

    #[test]
    fn parity_blocks_thickness() {
        let even = IndexSet::Progression { start: 0, step: 2 };
        assert_eq!(is_thick_in_window(&even, w(0, 10_000), 1).unwrap(), None);
        assert!(is_thick_in_window(&IndexSet::naturals(), w(0, 100), 40).unwrap().is_some());
    }

    #[test]
    fn r_thick_example_sets() {
        for r in [2u32, 3] {
            let k = IndexSet::multiplication_free_r_thick(r);
            let win = w(1, 1 << 40);
            let wit = r_thick_witness(&k, r, win, 2).unwrap().unwrap();
            assert!(wit.holds_in(&k, win).unwrap());
            assert!(doubling_free_check(&k, w(1, 1 << 30), r as i64 + 1).unwrap().is_empty());
        }
    }

    fn brute(s: &IndexSet, r: u32, win: Window, l: i64) -> Option<i64> {
        (1..=win.hi).find(|&k| {
            (1..=r as i64).all(|j| (-l..=l).all(|i| win.contains(j * k + i) && s.contains(j * k + i).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn witness_is_the_smallest_grid(
            members in proptest::collection::btree_set(0i64..120, 0..110),
            r in 1u32..4,
            l in 0u64..4,
            hi in 1i64..130,
        ) {
            let s = IndexSet::explicit(members);
            let win = w(0, hi);
            let got = r_thick_witness(&s, r, win, l).unwrap().map(|x| x.center);
            prop_assert_eq!(got, brute(&s, r, win, l as i64));
            if let (Some(k), true) = (got, r > 1) {
                // An (r+1)-grid is accepted as an r-grid.
                let lower = r_thick_witness(&s, r - 1, win, l).unwrap().unwrap();
                prop_assert!(lower.center <= k);
                let as_lower = ThickWitness { center: k, radius: l, multiplicity: r - 1 };
                prop_assert!(as_lower.holds_in(&s, win).unwrap());
            }
        }

        #[test]
        fn progressions_are_not_thick_beyond_their_gap(start in 0i64..5, step in 2i64..6, l in 0u64..5) {
            let s = IndexSet::Progression { start, step };
            let win = w(0, 2000);
            prop_assert!(is_thick_in_window(&s, win, l.max(1)).unwrap().is_none());
        }
    }
}
