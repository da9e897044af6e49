use std::collections::BTreeMap;
use std::io::{self, Write};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, rat, serde_rational, to_f64, Rational};
use crate::sets::{IndexSet, Window};
use crate::tower::{Correlation, CorrelationKernel, LevelSet, TowerRealization};

/// Fraction of a window treated as its tail when none is given.
pub const DEFAULT_TAIL_FRACTION: (i64, i64) = (1, 2);

/// Correlations `mu(T^n A ∩ B)` for `n` in an index set, with their certified errors.
///
/// Stored values are raw masses. Deviations and ratios are normalized by
/// `total`, the mass of the whole space the plan describes.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub entries: Vec<Correlation>,
    pub measure_a: Rational,
    pub measure_b: Rational,
    pub total: Rational,
    /// Requested and used windows differ when the request reached past the column.
    pub requested: Window,
    pub window: Window,
    pub tail_fraction: Rational,
    /// Estimator caps and builder settings the realization depends on.
    pub assumptions: BTreeMap<String, String>,
    /// Column heights of the realization, for stage bands.
    pub heights: Vec<u64>,
}

/// `sup` deviation over the `n` of one band `[h_m, h_{m+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDeviation {
    pub stage: usize,
    pub lo: u64,
    pub hi: u64,
    pub count: usize,
    #[serde(with = "serde_rational")]
    pub sup_deviation: Rational,
}

/// Summary document of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub count: usize,
    pub requested_window: [i64; 2],
    pub window: [i64; 2],
    pub truncated: bool,
    #[serde(with = "serde_rational")]
    pub target: Rational,
    #[serde(with = "serde_rational")]
    pub tail_fraction: Rational,
    pub tail_start: i64,
    pub tail_count: usize,
    /// Absent for an empty tail.
    pub tail_sup_deviation: Option<String>,
    pub bands: Vec<BandDeviation>,
    pub assumptions: BTreeMap<String, String>,
}

/// Correlations along `M ∩ window`. The window is clipped to `|n| < height`.
pub fn sweep(
    real: &TowerRealization,
    a: &LevelSet,
    b: &LevelSet,
    m: &IndexSet,
    window: Window,
) -> Result<CorrelationReport> {
    let reach = real.height() as i64 - 1;
    let clipped = Window::new(window.lo.max(-reach), window.hi.min(reach));
    let used = match clipped {
        Ok(w) => w,
        // Nothing of the request lies inside the column.
        Err(_) => Window { lo: 0, hi: -1 },
    };
    let times = if used.is_empty() { Vec::new() } else { m.enumerate(used)? };
    let kernel = CorrelationKernel::new(real, a, b)?;
    let mut entries: Vec<Correlation> = times
        .par_iter()
        .map(|&n| kernel.correlation(n))
        .collect::<Result<_>>()?;
    entries.sort_by_key(|c| c.n);
    Ok(CorrelationReport {
        entries,
        measure_a: kernel.measure_a(),
        measure_b: kernel.measure_b(),
        total: real.plan_measure(),
        requested: window,
        window: used,
        tail_fraction: rat(DEFAULT_TAIL_FRACTION.0, DEFAULT_TAIL_FRACTION.1),
        assumptions: BTreeMap::new(),
        heights: real.heights().to_vec(),
    })
}

impl CorrelationReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.window != self.requested
    }

    pub fn with_tail_fraction(mut self, fraction: Rational) -> Result<Self> {
        if fraction <= Rational::zero() || fraction > rat(1, 1) {
            return Err(Error::invalid(format!("tail fraction {fraction} must lie in (0, 1]")));
        }
        self.tail_fraction = fraction;
        Ok(self)
    }

    /// `mu(A) mu(B)` as a probability.
    pub fn target(&self) -> Rational {
        &self.measure_a * &self.measure_b / (&self.total * &self.total)
    }

    /// Normalized certified interval of one entry.
    pub fn interval(&self, c: &Correlation) -> (Rational, Rational) {
        (&c.value / &self.total, c.upper() / &self.total)
    }

    /// `|value - mu(A) mu(B)|`, normalized; the true deviation is at most this plus the normalized error.
    pub fn deviation(&self, c: &Correlation) -> Rational {
        (&c.value / &self.total - self.target()).abs()
    }

    /// Largest distance from the target to either end of the certified interval.
    pub fn worst_deviation(&self, c: &Correlation) -> Rational {
        let p = self.target();
        let (lo, hi) = self.interval(c);
        (lo - &p).abs().max((hi - &p).abs())
    }

    /// First `n` of the tail: the last `tail_fraction` of the used window.
    pub fn tail_start(&self) -> i64 {
        if self.window.is_empty() {
            return self.window.lo;
        }
        let len = rat(self.window.hi - self.window.lo + 1, 1);
        let skip = (len * (rat(1, 1) - &self.tail_fraction)).floor().to_integer();
        self.window.lo + i64::try_from(skip).unwrap_or(0)
    }

    pub fn tail(&self) -> &[Correlation] {
        let start = self.tail_start();
        let i = self.entries.partition_point(|c| c.n < start);
        &self.entries[i..]
    }

    pub fn tail_sup_deviation(&self) -> Option<Rational> {
        self.tail().iter().map(|c| self.worst_deviation(c)).max()
    }

    /// Sup of the worst deviation over each complete stage band `[h_m, h_{m+1})`
    /// that contains at least one `n` of the report.
    pub fn band_deviations(&self) -> Vec<BandDeviation> {
        let mut out = Vec::new();
        for (stage, pair) in self.heights.windows(2).enumerate() {
            let (lo, hi) = (pair[0], pair[1]);
            let from = self.entries.partition_point(|c| c.n < lo as i64);
            let to = self.entries.partition_point(|c| c.n < hi as i64);
            if from == to {
                continue;
            }
            let sup = self.entries[from..to]
                .iter()
                .map(|c| self.worst_deviation(c))
                .max()
                .unwrap_or_default();
            out.push(BandDeviation {
                stage,
                lo,
                hi,
                count: to - from,
                sup_deviation: sup,
            });
        }
        out
    }

    pub fn summary(&self) -> CorrelationSummary {
        CorrelationSummary {
            count: self.entries.len(),
            requested_window: [self.requested.lo, self.requested.hi],
            window: [self.window.lo, self.window.hi],
            truncated: self.truncated(),
            target: self.target(),
            tail_fraction: self.tail_fraction.clone(),
            tail_start: self.tail_start(),
            tail_count: self.tail().len(),
            tail_sup_deviation: self.tail_sup_deviation().map(|d| format_rational(&d)),
            bands: self.band_deviations(),
            assumptions: self.assumptions.clone(),
        }
    }

    /// Rows `n,value_num,value_den,err_num,err_den` with raw masses, sorted by `n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,value_num,value_den,err_num,err_den")?;
        for c in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.n,
                c.value.numer(),
                c.value.denom(),
                c.error_bound.numer(),
                c.error_bound.denom()
            )?;
        }
        Ok(())
    }

    /// Static log-scale plot of the worst deviation against `n`.
    pub fn write_svg<W: Write>(&self, mut out: W, title: &str) -> io::Result<()> {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const M: f64 = 50.0;
        let points: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|c| c.n > 0)
            .map(|c| (c.n as f64, to_f64(&self.worst_deviation(c)).max(1e-16)))
            .collect();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        )?;
        writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
        writeln!(
            out,
            r#"<text x="{M}" y="20" font-family="sans-serif" font-size="13">{}</text>"#,
            escape(title)
        )?;
        writeln!(
            out,
            r#"<path d="M{M} {M} V{} H{}" stroke="black" fill="none"/>"#,
            H - M,
            W - M
        )?;
        if !points.is_empty() {
            let (x0, x1) = log_range(points.iter().map(|p| p.0));
            let (y0, y1) = log_range(points.iter().map(|p| p.1));
            let sx = |x: f64| M + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * M);
            let sy = |y: f64| H - M - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * M);
            write!(out, r#"<polyline fill="none" stroke="steelblue" points=""#)?;
            for (x, y) in &points {
                write!(out, "{:.2},{:.2} ", sx(*x), sy(*y))?;
            }
            writeln!(out, r#""/>"#)?;
            writeln!(
                out,
                r#"<text x="{M}" y="{}" font-family="sans-serif" font-size="11">n from 1e{x0:.1} to 1e{x1:.1}; deviation from 1e{y0:.1} to 1e{y1:.1}</text>"#,
                H - 15.0
            )?;
        }
        writeln!(out, "</svg>")
    }
}

fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.log10()), hi.max(v.log10()))
    });
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Outcome of comparing the tail of a report against `K mu(A) mu(B)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KBoundVerdict {
    #[serde(with = "serde_rational")]
    pub k: Rational,
    /// `sup (value + error) / (mu(A) mu(B))` over the tail, normalized.
    #[serde(with = "serde_rational")]
    pub sup_ratio: Rational,
    pub worst_n: i64,
    pub tail_start: i64,
    pub tail_count: usize,
    pub holds: bool,
}

/// Window-relative check of `limsup mu(T^n A ∩ B) <= K mu(A) mu(B)` on the tail.
pub fn k_bound_check(report: &CorrelationReport, k: &Rational) -> Result<KBoundVerdict> {
    let tail = report.tail();
    if tail.is_empty() {
        return Err(Error::precondition("the report tail is empty"));
    }
    let target = report.target();
    if target.is_zero() {
        return Err(Error::precondition("mu(A) mu(B) is zero"));
    }
    let (worst_n, sup_ratio) = tail
        .iter()
        .map(|c| (c.n, report.interval(c).1 / &target))
        .max_by(|x, y| x.1.cmp(&y.1))
        .expect("nonempty tail");
    Ok(KBoundVerdict {
        k: k.clone(),
        holds: sup_ratio <= *k,
        sup_ratio,
        worst_n,
        tail_start: report.tail_start(),
        tail_count: tail.len(),
    })
}
