use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rat_uint, Rational};
use crate::tower::{ConstructionPlan, CutStage};

/// How the cut parameter `r_n` of a mixing staircase is chosen.
///
/// Stages are numbered from 1: `r_n` cuts column `n - 1`, whose height is `h_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthPolicy {
    /// `r_n = n + offset`.
    Linear { offset: u64 },
    /// `r_n = cuts[n - 1]`.
    Explicit { cuts: Vec<u64> },
    /// `r_n = h_n`. Never satisfies `r_n^2 / h_n -> 0`; kept as a negative control.
    HeightMatched,
}

impl GrowthPolicy {
    pub fn cut(&self, n: usize, h_n: &BigUint) -> Result<u64> {
        let r = match self {
            GrowthPolicy::Linear { offset } => n as u64 + offset,
            GrowthPolicy::Explicit { cuts } => *cuts.get(n - 1).ok_or(Error::OutOfRange {
                index: n,
                limit: cuts.len(),
            })?,
            GrowthPolicy::HeightMatched => h_n.to_u64().ok_or_else(|| Error::Budget {
                what: "cut parameter",
                value: h_n.to_string(),
                budget: u64::MAX.to_string(),
            })?,
        };
        if r == 0 {
            return Err(Error::invalid(format!("policy gives r_{n} = 0")));
        }
        Ok(r)
    }
}

/// Stages whose `r_n^2 / h_n` is exempt from the monotonicity check.
pub const BURN_IN: usize = 3;

/// Staircase plan from a unit-width column of `h1` levels, `depth` stages deep.
///
/// On the produced prefix the cuts must be nondecreasing, eventually grow,
/// and `r_n^2 / h_n` must strictly decrease from stage `BURN_IN` on.
pub fn build_mixing_staircase(h1: u64, depth: usize, policy: &GrowthPolicy) -> Result<ConstructionPlan> {
    let mut plan = ConstructionPlan::unit(h1);
    if h1 == 0 {
        return Err(Error::invalid("h1 must be positive"));
    }
    let mut h = BigUint::from(h1);
    let mut prev: Option<(u64, Rational)> = None;
    for n in 1..=depth {
        let r = policy.cut(n, &h)?;
        let ratio = Rational::from_integer((r as u128 * r as u128).into()) / rat_uint(&h);
        if let Some((prev_r, prev_ratio)) = &prev {
            if r < *prev_r {
                return Err(Error::precondition(format!(
                    "cuts must be nondecreasing: r_{n} = {r} < r_{} = {prev_r}",
                    n - 1
                )));
            }
            if n > BURN_IN && ratio >= *prev_ratio {
                return Err(Error::precondition(format!(
                    "r_n^2 / h_n does not decrease at n = {n}: {ratio} >= {prev_ratio}"
                )));
            }
        }
        let stage = CutStage::staircase(r);
        h = stage.next_height(&h, &BigUint::default());
        plan.push(stage);
        prev = Some((r, ratio));
    }
    if depth > BURN_IN {
        let first = plan.stages[BURN_IN - 1].cuts();
        let last = plan.stages[depth - 1].cuts();
        if last <= first {
            return Err(Error::precondition(format!(
                "cuts do not grow after the burn-in: r_{BURN_IN} = {first}, r_{depth} = {last}"
            )));
        }
    }
    Ok(plan)
}

/// Continuation rule shared by the builders and the horizon estimators: the next
/// staircase cut is one more than the last, or `floor(sqrt(h / ratio))` once that is larger.
pub fn continuation_cut(last: u64, height: &BigUint, ratio: u64) -> u64 {
    let root = (height / BigUint::from(ratio.max(1))).sqrt();
    (last + 1).max(root.to_u64().unwrap_or(u64::MAX))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_policy_heights() {
        let plan = build_mixing_staircase(1, 10, &GrowthPolicy::Linear { offset: 1 }).unwrap();
        let hs: Vec<u64> = plan.heights().iter().map(|h| h.to_u64().unwrap()).collect();
        assert_eq!(
            hs,
            [1, 3, 12, 54, 280, 1695, 11886, 95116, 856080, 8560845, 94169350]
        );
    }

    #[test]
    fn depth_zero_is_the_initial_column() {
        let plan = build_mixing_staircase(5, 0, &GrowthPolicy::HeightMatched).unwrap();
        assert!(plan.is_empty());
        assert_eq!(plan.initial_height, BigUint::from(5u32));
    }

    #[test]
    fn height_matched_is_rejected() {
        let err = build_mixing_staircase(2, 8, &GrowthPolicy::HeightMatched).unwrap_err();
        assert!(err.to_string().contains("n = 4"), "{err}");
    }

    #[test]
    fn shrinking_cuts_are_rejected() {
        let policy = GrowthPolicy::Explicit { cuts: vec![3, 4, 2] };
        assert!(build_mixing_staircase(1, 3, &policy).is_err());
    }

    #[test]
    fn continuation_tracks_the_square_root() {
        assert_eq!(continuation_cut(2, &BigUint::from(10u32), 16), 3);
        assert_eq!(continuation_cut(2, &BigUint::from(1600u32), 16), 10);
    }
}
