use num_traits::Zero;

use super::levels::{overlap_runs, LevelSet};
use super::realization::TowerRealization;
use crate::error::{Error, Result};
use crate::exact::{rat_int, Rational};

/// Default number of entries allowed in a materialized correlation table.
const DEFAULT_TABLE_LIMIT: usize = 1 << 23;

/// Largest base-table construction cost, in run-pair or overlap operations.
const BASE_WORK_LIMIT: u128 = 1 << 31;

/// Certified value of `mu(T^n A ∩ B)`: the true value lies in
/// `[value, value + error_bound]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correlation {
    pub n: i64,
    pub value: Rational,
    pub error_bound: Rational,
    /// Depth-levels `u` of `A` with `u + n` in `B`.
    pub resolved_levels: u64,
    /// Depth-levels of `A` pushed out of the column by `n`.
    pub unresolved_levels: u64,
}

impl Correlation {
    pub fn upper(&self) -> Rational {
        &self.value + &self.error_bound
    }
}

/// Shifts `A` by `n` inside the deepest column. Returns the image and the
/// measure of the part of `A` whose image leaves the column.
pub fn apply_power(
    real: &TowerRealization,
    n: i64,
    a: &LevelSet,
) -> Result<(LevelSet, Rational)> {
    check_power(real, n)?;
    let lifted = real.refine(a, real.depth())?;
    let (image, lost) = lifted.shift_within(n, real.height());
    Ok((image, real.level_width() * rat_int(lost)))
}

/// `mu(T^n A ∩ B)` with its certified error.
pub fn correlation(
    real: &TowerRealization,
    n: i64,
    a: &LevelSet,
    b: &LevelSet,
) -> Result<Correlation> {
    CorrelationKernel::new(real, a, b)?.correlation(n)
}

fn check_power(real: &TowerRealization, n: i64) -> Result<()> {
    if n.unsigned_abs() >= real.height() {
        return Err(Error::precondition(format!(
            "|n| = {} is not below the column height {}; the image is fully unresolved",
            n.unsigned_abs(),
            real.height()
        )));
    }
    Ok(())
}

/// Reusable evaluator of `n -> mu(T^n A ∩ B)` for fixed `A`, `B`.
///
/// With `C_m(x) = #{u in A_m : u + x in B_m}` counted in column `m`,
/// `C_{m+1}(x) = sum over copy pairs (j1, j2) of C_m(x - (s_{j2} - s_{j1}))`,
/// since a shift that crosses a spacer never lands `A` in `B`. Low stages are
/// tabulated bottom-up; the rest is evaluated top-down per query.
#[derive(Debug)]
pub struct CorrelationKernel<'a> {
    real: &'a TowerRealization,
    base: usize,
    a: LevelSet,
    b: LevelSet,
    /// Sorted `(difference, multiplicity)` of copy starts, per stage `base..depth`.
    diffs: Vec<Vec<(i64, u64)>>,
    /// `|A|` in column `m`, for `m` in `base..=depth`.
    a_counts: Vec<u64>,
    /// Table of `C_m` over `x in (-h_m, h_m)` for `m = table_stage`.
    table: Option<(usize, Vec<u32>)>,
}

impl<'a> CorrelationKernel<'a> {
    pub fn new(real: &'a TowerRealization, a: &LevelSet, b: &LevelSet) -> Result<Self> {
        Self::with_table_limit(real, a, b, DEFAULT_TABLE_LIMIT)
    }

    pub fn with_table_limit(
        real: &'a TowerRealization,
        a: &LevelSet,
        b: &LevelSet,
        table_limit: usize,
    ) -> Result<Self> {
        real.check(a)?;
        real.check(b)?;
        let base = a.stage().max(b.stage());
        let a = real.refine(a, base)?;
        let b = real.refine(b, base)?;
        let depth = real.depth();
        let diffs: Vec<Vec<(i64, u64)>> = (base..depth)
            .map(|m| start_differences(real.copy_starts(m)))
            .collect();
        let mut a_counts = vec![a.count()];
        for m in base..depth {
            let c = a_counts.last().unwrap() * real.copy_starts(m).len() as u64;
            a_counts.push(c);
        }
        let mut kernel = CorrelationKernel {
            real,
            base,
            a,
            b,
            diffs,
            a_counts,
            table: None,
        };
        kernel.build_tables(table_limit.min(u32::MAX as usize));
        Ok(kernel)
    }

    pub fn realization(&self) -> &TowerRealization {
        self.real
    }

    /// Stage of the column on which `A` and `B` were given (the deeper of the two).
    pub fn base_stage(&self) -> usize {
        self.base
    }

    pub fn measure_a(&self) -> Rational {
        self.real.measure(&self.a)
    }

    pub fn measure_b(&self) -> Rational {
        self.real.measure(&self.b)
    }

    fn table_len(&self, m: usize) -> usize {
        2 * self.real.height_at(m) as usize - 1
    }

    fn build_tables(&mut self, limit: usize) {
        let h = self.real.height_at(self.base);
        if 2 * h as usize > limit {
            return;
        }
        let ra = self.a.runs().len() as u128;
        let rb = self.b.runs().len() as u128;
        let pair_cost = ra * rb;
        let scan_cost = 2 * h as u128 * (ra + rb);
        if pair_cost.min(scan_cost) > BASE_WORK_LIMIT {
            return;
        }
        let mut table = if pair_cost <= scan_cost {
            base_table_from_pairs(self.a.runs(), self.b.runs(), h)
        } else {
            let hi = h as i64;
            (-(hi - 1)..hi)
                .map(|x| overlap_runs(self.a.runs(), self.b.runs(), x) as u32)
                .collect()
        };
        let mut stage = self.base;
        while stage < self.real.depth() && 2 * self.real.height_at(stage + 1) as usize <= limit {
            let hm = self.real.height_at(stage) as i64;
            let hn = self.real.height_at(stage + 1) as i64;
            let mut next = vec![0u32; self.table_len(stage + 1)];
            for &(d, mult) in &self.diffs[stage - self.base] {
                // Entry y of the old table (x = y - hm + 1) feeds x + d in the new one.
                let off = d + hn - hm;
                for (y, &v) in table.iter().enumerate() {
                    if v != 0 {
                        let idx = (off + y as i64) as usize;
                        next[idx] += v * mult as u32;
                    }
                }
            }
            table = next;
            stage += 1;
        }
        self.table = Some((stage, table));
    }

    /// Number of depth-levels `u` of `A` with `u + n` in `B`.
    fn count(&self, m: usize, x: i64) -> u64 {
        let h = self.real.height_at(m) as i64;
        if x <= -h || x >= h {
            return 0;
        }
        if let Some((ts, table)) = &self.table {
            if m == *ts {
                return table[(x + h - 1) as usize] as u64;
            }
        }
        if m == self.base {
            return overlap_runs(self.a.runs(), self.b.runs(), x);
        }
        let hp = self.real.height_at(m - 1) as i64;
        let diffs = &self.diffs[m - 1 - self.base];
        let lo = diffs.partition_point(|&(d, _)| d <= x - hp);
        let mut total = 0;
        for &(d, mult) in &diffs[lo..] {
            if d >= x + hp {
                break;
            }
            let c = self.count(m - 1, x - d);
            total += c * mult;
        }
        total
    }

    /// `A`-levels among the top `t` levels of column `m`.
    fn top_count(&self, m: usize, t: u64) -> u64 {
        let h = self.real.height_at(m);
        if t == 0 {
            return 0;
        }
        if t >= h {
            return self.a_counts[m - self.base];
        }
        if m == self.base {
            return self.a.count_at_least(h - t);
        }
        let theta = h - t;
        let hp = self.real.height_at(m - 1);
        let full = self.a_counts[m - 1 - self.base];
        let mut total = 0;
        for &s in self.real.copy_starts(m - 1).iter().rev() {
            if s >= theta {
                total += full;
            } else {
                if s + hp > theta {
                    total += self.top_count(m - 1, s + hp - theta);
                }
                break;
            }
        }
        total
    }

    /// `A`-levels among the bottom `t` levels of column `m`.
    fn bottom_count(&self, m: usize, t: u64) -> u64 {
        let h = self.real.height_at(m);
        if t == 0 {
            return 0;
        }
        if t >= h {
            return self.a_counts[m - self.base];
        }
        if m == self.base {
            return self.a.count_below(t);
        }
        let hp = self.real.height_at(m - 1);
        let full = self.a_counts[m - 1 - self.base];
        let mut total = 0;
        for &s in self.real.copy_starts(m - 1) {
            if s + hp <= t {
                total += full;
            } else {
                if s < t {
                    total += self.bottom_count(m - 1, t - s);
                }
                break;
            }
        }
        total
    }

    /// Depth-levels of `A` whose image under `T^n` leaves the column.
    pub fn unresolved_levels(&self, n: i64) -> u64 {
        let d = self.real.depth();
        match n.cmp(&0) {
            std::cmp::Ordering::Greater => self.top_count(d, n as u64),
            std::cmp::Ordering::Less => self.bottom_count(d, n.unsigned_abs()),
            std::cmp::Ordering::Equal => 0,
        }
    }

    pub fn correlation(&self, n: i64) -> Result<Correlation> {
        check_power(self.real, n)?;
        let resolved = self.count(self.real.depth(), n);
        let unresolved = self.unresolved_levels(n);
        let w = self.real.level_width();
        Ok(Correlation {
            n,
            value: if resolved == 0 {
                Rational::zero()
            } else {
                w * rat_int(resolved)
            },
            error_bound: if unresolved == 0 {
                Rational::zero()
            } else {
                w * rat_int(unresolved)
            },
            resolved_levels: resolved,
            unresolved_levels: unresolved,
        })
    }
}

fn start_differences(starts: &[u64]) -> Vec<(i64, u64)> {
    let mut d: Vec<i64> = Vec::with_capacity(starts.len() * starts.len());
    for &s1 in starts {
        for &s2 in starts {
            d.push(s2 as i64 - s1 as i64);
        }
    }
    d.sort_unstable();
    let mut out: Vec<(i64, u64)> = Vec::new();
    for v in d {
        match out.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// `C(x)` for `x in (-h, h)` as a sum of run-pair trapezoids, via second differences.
fn base_table_from_pairs(a: &[(u64, u64)], b: &[(u64, u64)], h: u64) -> Vec<u32> {
    let h = h as i64;
    let len = (2 * h - 1) as usize;
    let mut d2 = vec![0i64; len + 3];
    // Array position of x is x + h, so the whole range maps into 1..=len.
    let mut bump = |x: i64, v: i64| {
        let p = x + h;
        if p >= 0 && (p as usize) < d2.len() {
            d2[p as usize] += v;
        }
    };
    for &(a1, a2) in a {
        for &(b1, b2) in b {
            let short = (a2 - a1).min(b2 - b1) as i64;
            let x0 = b1 as i64 - a2 as i64;
            let x3 = b2 as i64 - a1 as i64;
            bump(x0 + 1, 1);
            bump(x0 + 1 + short, -1);
            bump(x3 + 1 - short, -1);
            bump(x3 + 1, 1);
        }
    }
    let mut out = Vec::with_capacity(len);
    let (mut slope, mut val) = (0i64, 0i64);
    for (p, &v) in d2.iter().enumerate() {
        slope += v;
        val += slope;
        if (1..=len).contains(&p) {
            out.push(val as u32);
        }
    }
    out
}
