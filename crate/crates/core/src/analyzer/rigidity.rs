use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::BuildReport;
use crate::error::{Error, Result};
use crate::exact::{format_rational, rat_int, rat_uint, serde_rational, Rational};
use crate::tower::{heights_of, ConstructionPlan, CorrelationKernel, LevelSet, TowerRealization};

use super::correlation::CorrelationReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidityEntry {
    pub time: i64,
    /// Certified `mu(T^n A ∩ A)` lies in `[lower, upper]` (raw masses).
    #[serde(with = "serde_rational")]
    pub lower: Rational,
    #[serde(with = "serde_rational")]
    pub upper: Rational,
    /// `lower / mu(A)`.
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidityReport {
    #[serde(with = "serde_rational")]
    pub measure_a: Rational,
    #[serde(with = "serde_rational")]
    pub alpha: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    pub entries: Vec<RigidityEntry>,
    /// Largest certified ratio over nonzero times.
    pub best_alpha: Option<String>,
    /// Nonzero times whose ratio reaches `alpha - delta`.
    pub witnesses: Vec<i64>,
}

/// Certified lower bounds on `mu(T^n A ∩ A) / mu(A)` at the given times.
pub fn rigidity_scan(
    real: &TowerRealization,
    a: &LevelSet,
    times: &[i64],
    alpha: &Rational,
    delta: &Rational,
) -> Result<RigidityReport> {
    let kernel = CorrelationKernel::new(real, a, a)?;
    let mu = kernel.measure_a();
    if mu.is_zero() {
        return Err(Error::precondition("A is empty"));
    }
    let threshold = alpha - delta;
    let entries: Vec<RigidityEntry> = times
        .par_iter()
        .map(|&t| {
            let c = kernel.correlation(t)?;
            let ratio = &c.value / &mu;
            Ok(RigidityEntry {
                time: t,
                upper: c.upper(),
                flagged: ratio >= threshold,
                lower: c.value,
                ratio,
            })
        })
        .collect::<Result<_>>()?;
    let best_alpha = entries
        .iter()
        .filter(|e| e.time != 0)
        .map(|e| &e.ratio)
        .max()
        .map(format_rational);
    let witnesses = entries.iter().filter(|e| e.time != 0 && e.flagged).map(|e| e.time).collect();
    Ok(RigidityReport {
        measure_a: mu,
        alpha: alpha.clone(),
        delta: delta.clone(),
        entries,
        best_alpha,
        witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionEntry {
    pub time: i64,
    /// Certified lower bound on `mu(T^t A ∩ A) / mu(A)`.
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    /// `(r + 1) t`, probed only when `ratio > beta`.
    pub later_time: Option<i64>,
    /// Normalized certified interval of `mu(T^{(r+1)t} A ∩ A)`.
    pub later_interval: Option<[String; 2]>,
    /// Lower bound the inequality chain predicts, `((r + 1) beta - r) mu(A)`, normalized.
    pub predicted: Option<String>,
    /// Whether the certified lower bound exceeds `mu(A)^2`.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionVerdict {
    pub r: u32,
    #[serde(with = "serde_rational")]
    pub beta: Rational,
    /// Normalized `mu(A)`.
    #[serde(with = "serde_rational")]
    pub measure_a: Rational,
    #[serde(with = "serde_rational")]
    pub measure_a_squared: Rational,
    pub entries: Vec<ObstructionEntry>,
    /// Some time had ratio above `beta` and a certified excess at `(r + 1) t`.
    pub obstruction: bool,
}

/// Replays the non-mixing chain: a time `t` with `mu(T^t A ∩ A) > beta mu(A)` forces
/// `mu(T^{(r+1)t} A ∩ A) >= ((r + 1) beta - r) mu(A) > mu(A)^2`. Both sides are
/// measured; measures are normalized by the mass of the whole plan.
pub fn alpha_obstruction_check(
    real: &TowerRealization,
    a: &LevelSet,
    r: u32,
    times: &[i64],
    beta: &Rational,
) -> Result<ObstructionVerdict> {
    if r == 0 {
        return Err(Error::invalid("r must be positive"));
    }
    let r1 = rat_int(r + 1);
    let floor = rat_int(r) / &r1;
    if *beta <= floor || *beta >= Rational::one() {
        return Err(Error::precondition(format!(
            "beta = {beta} must lie in ({floor}, 1)"
        )));
    }
    let total = real.plan_measure();
    let kernel = CorrelationKernel::new(real, a, a)?;
    let raw = kernel.measure_a();
    let mu = &raw / &total;
    let gain = &r1 * beta - rat_int(r);
    if mu >= gain {
        return Err(Error::precondition(format!(
            "mu(A) = {mu} is not below (r + 1) beta - r = {gain}"
        )));
    }
    let mu2 = &mu * &mu;
    let mut entries = Vec::with_capacity(times.len());
    for &t in times {
        let c = kernel.correlation(t)?;
        let ratio = &c.value / &raw;
        let mut e = ObstructionEntry {
            time: t,
            ratio,
            later_time: None,
            later_interval: None,
            predicted: None,
            holds: None,
        };
        if e.ratio > *beta {
            let later = t
                .checked_mul(i64::from(r) + 1)
                .ok_or_else(|| Error::invalid("(r + 1) t overflows"))?;
            let d = kernel.correlation(later)?;
            let lo = &d.value / &total;
            let hi = d.upper() / &total;
            e.holds = Some(lo > mu2);
            e.later_time = Some(later);
            e.later_interval = Some([format_rational(&lo), format_rational(&hi)]);
            e.predicted = Some(format_rational(&(&gain * &mu)));
        }
        entries.push(e);
    }
    Ok(ObstructionVerdict {
        r,
        beta: beta.clone(),
        obstruction: entries.iter().any(|e| e.holds == Some(true)),
        measure_a: mu,
        measure_a_squared: mu2,
        entries,
    })
}

/// Certified bounds on `mu(J ∩ T^p J ∩ ... ∩ T^{tp} J)`, computed in the deepest column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionBound {
    pub measure_j: Rational,
    pub lower: Rational,
    pub upper: Rational,
}

pub fn intersection_of_powers(
    real: &TowerRealization,
    j: &LevelSet,
    period: u64,
    t: u64,
) -> Result<IntersectionBound> {
    let h = real.height();
    let top = real.refine(j, real.depth())?;
    let w = real.level_width();
    let mut meet = top.clone();
    let mut lost_total = 0u64;
    for d in 1..=t {
        let shift = period
            .checked_mul(d)
            .filter(|s| *s < h)
            .ok_or_else(|| Error::precondition(format!("{d} * {period} is not below the height {h}")))?;
        let (image, lost) = top.shift_within(shift as i64, h);
        lost_total += lost;
        meet = meet.intersect(&image)?;
    }
    let lower = w * rat_int(meet.count());
    let upper = (w * rat_int(meet.count() + lost_total)).min(real.measure(j));
    Ok(IntersectionBound {
        measure_j: real.measure(j),
        lower,
        upper,
    })
}

/// Which band of the mixing argument a time falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TimeClass {
    /// `[eps_i H_i, H_{i+1}]` away from the rigid times of round `i`.
    M1 { round: usize },
    /// Within `L_i` of the rigid time `j H_i`, excluded from both bands.
    Gap { round: usize, j: usize },
    M2,
}

impl TimeClass {
    pub fn label(&self) -> String {
        match self {
            TimeClass::M1 { round } => format!("m1_round_{round}"),
            TimeClass::Gap { round, j } => format!("gap_round_{round}_time_{j}"),
            TimeClass::M2 => "m2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassStat {
    pub count: usize,
    pub max_deviation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartitionAudit {
    pub classes: Vec<(i64, TimeClass)>,
    pub stats: BTreeMap<String, ClassStat>,
    /// Times excluded from both bands.
    pub flagged: Vec<i64>,
}

/// Classifies every time of `report` by the rounds recorded in `build`.
///
/// Round `i` with padded height `H`, horizon `L` and rigid times `jH` owns
/// `[eps_i H, H']`, `H'` the column height after the rigid cut; times with
/// `|n - jH| < max(L, 1)` are gaps. Anything else is `M2`.
pub fn m1_m2_partition_audit(
    plan: &ConstructionPlan,
    build: &BuildReport,
    report: &CorrelationReport,
) -> Result<PartitionAudit> {
    if build.rounds.is_empty() {
        return Err(Error::precondition("the build report records no rigid rounds"));
    }
    let heights = heights_of(plan, plan.len())?;
    let mut bands = Vec::with_capacity(build.rounds.len());
    for rec in &build.rounds {
        let after = heights
            .get(rec.rigid_stage + 1)
            .ok_or(Error::OutOfRange { index: rec.rigid_stage + 1, limit: plan.len() })?;
        let lo = (&rec.epsilon * rat_uint(&rec.k)).ceil().to_integer();
        let times: Vec<Rational> = rec.times.iter().map(rat_uint).collect();
        let reach = rat_int(rec.mixing_horizon.max(1));
        bands.push((rec.i, Rational::from_integer(lo), rat_uint(after), times, reach));
    }
    let mut audit = PartitionAudit::default();
    let mut worst: BTreeMap<String, (usize, Rational)> = BTreeMap::new();
    for c in &report.entries {
        let n = rat_int(c.n);
        let mut class = TimeClass::M2;
        'rounds: for (i, lo, hi, times, reach) in &bands {
            for (j, t) in times.iter().enumerate() {
                if (&n - t).abs() < *reach {
                    class = TimeClass::Gap { round: *i, j: j + 1 };
                    break 'rounds;
                }
            }
            if *lo <= n && n <= *hi {
                class = TimeClass::M1 { round: *i };
                break;
            }
        }
        if matches!(class, TimeClass::Gap { .. }) {
            audit.flagged.push(c.n);
        }
        let dev = report.worst_deviation(c);
        let slot = worst.entry(class.label()).or_insert((0, Rational::zero()));
        slot.0 += 1;
        if dev > slot.1 {
            slot.1 = dev;
        }
        audit.classes.push((c.n, class));
    }
    audit.stats = worst
        .into_iter()
        .map(|(k, (count, d))| (k, ClassStat { count, max_deviation: format_rational(&d) }))
        .collect();
    Ok(audit)
}
