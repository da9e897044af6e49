//! Plan builders: the mixing staircase, flow constructions that interleave
//! mixing stages with rigid times placed in a target set, and the M-tower.

mod flow;
mod friedman;
mod report;
mod staircase;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, rat_int, Rational};
use crate::tower::ConstructionPlan;

pub use flow::{build_half_rigid, build_r_rigid, build_rigid_for_density_zero, density_check, FlowConfig};
pub use friedman::{build_friedman_m_tower, FriedmanConfig, FriedmanReport, FriedmanRound};
pub use report::{BuildReport, RoundRecord, StageMeasure, SubstageRecord};
pub use staircase::{build_mixing_staircase, continuation_cut, GrowthPolicy, BURN_IN};

/// Positive tolerances `eps_1, eps_2, ...` whose partial sums stay below `bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpsilonSchedule {
    Explicit { values: Vec<Rational>, bound: Rational },
    /// `eps_i = first * ratio^(i - 1)`.
    Geometric { first: Rational, ratio: Rational, bound: Rational },
}

impl EpsilonSchedule {
    pub fn explicit(values: Vec<Rational>, bound: Rational) -> Result<Self> {
        let s = EpsilonSchedule::Explicit { values, bound };
        s.validate()?;
        Ok(s)
    }

    pub fn geometric(first: Rational, ratio: Rational, bound: Rational) -> Result<Self> {
        let s = EpsilonSchedule::Geometric { first, ratio, bound };
        s.validate()?;
        Ok(s)
    }

    pub fn bound(&self) -> &Rational {
        match self {
            EpsilonSchedule::Explicit { bound, .. } | EpsilonSchedule::Geometric { bound, .. } => bound,
        }
    }

    /// Number of terms, `None` when unbounded.
    pub fn len(&self) -> Option<usize> {
        match self {
            EpsilonSchedule::Explicit { values, .. } => Some(values.len()),
            EpsilonSchedule::Geometric { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `eps_i` for `i >= 1`.
    pub fn get(&self, i: usize) -> Result<Rational> {
        if i == 0 {
            return Err(Error::invalid("epsilon indices start at 1"));
        }
        match self {
            EpsilonSchedule::Explicit { values, .. } => {
                values.get(i - 1).cloned().ok_or_else(|| {
                    Error::precondition(format!("epsilon schedule exhausted at index {i} (length {})", values.len()))
                })
            }
            EpsilonSchedule::Geometric { first, ratio, .. } => Ok(first * num_traits::pow(ratio.clone(), i - 1)),
        }
    }

    pub fn partial_sum(&self, n: usize) -> Result<Rational> {
        (1..=n).try_fold(Rational::zero(), |acc, i| Ok(acc + self.get(i)?))
    }

    fn validate(&self) -> Result<()> {
        let bound = self.bound();
        match self {
            EpsilonSchedule::Explicit { values, .. } => {
                let mut sum = Rational::zero();
                for (i, v) in values.iter().enumerate() {
                    if *v <= Rational::zero() {
                        return Err(Error::invalid(format!("eps_{} = {v} is not positive", i + 1)));
                    }
                    sum += v;
                    if sum >= *bound {
                        return Err(Error::invalid(format!(
                            "partial sum through eps_{} is {sum}, not below {bound}",
                            i + 1
                        )));
                    }
                }
            }
            EpsilonSchedule::Geometric { first, ratio, .. } => {
                if *first <= Rational::zero() {
                    return Err(Error::invalid("first epsilon must be positive"));
                }
                if *ratio <= Rational::zero() || *ratio >= Rational::one() {
                    return Err(Error::invalid("geometric ratio must lie in (0, 1)"));
                }
                let total = first / (Rational::one() - ratio);
                if total >= *bound {
                    return Err(Error::invalid(format!("series sum {total} is not below {bound}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> EpsilonDoc {
        match self {
            EpsilonSchedule::Explicit { values, bound } => EpsilonDoc {
                values: Some(values.iter().map(format_rational).collect()),
                first: None,
                ratio: None,
                bound: format_rational(bound),
            },
            EpsilonSchedule::Geometric { first, ratio, bound } => EpsilonDoc {
                values: None,
                first: Some(format_rational(first)),
                ratio: Some(format_rational(ratio)),
                bound: format_rational(bound),
            },
        }
    }

    pub fn from_doc(doc: &EpsilonDoc) -> Result<Self> {
        let bound = parse_rational(&doc.bound)?;
        match (&doc.values, &doc.first, &doc.ratio) {
            (Some(values), None, None) => Self::explicit(
                values.iter().map(|v| parse_rational(v)).collect::<Result<_>>()?,
                bound,
            ),
            (None, Some(first), Some(ratio)) => {
                Self::geometric(parse_rational(first)?, parse_rational(ratio)?, bound)
            }
            _ => Err(Error::invalid(
                "an epsilon schedule needs either `values` or both `first` and `ratio`",
            )),
        }
    }
}

/// Text form of an [`EpsilonSchedule`]; rationals are strings such as `"1/4"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<String>,
    pub bound: String,
}

/// Finite-horizon stand-ins for the existence statements the flow constructions rely on.
///
/// `Ok(None)` means the horizon was not reached on what the estimator could afford to look at.
pub trait HorizonEstimator: Sync {
    /// Smallest `N` at which Cesaro averages along progressions are uniformly
    /// `eps`-close to the measure, for atoms built from column `atom_stage`.
    fn uniform_cesaro(&self, plan: &ConstructionPlan, atom_stage: usize, eps: &Rational) -> Result<Option<u64>>;

    /// Smallest `L` past which correlations of atoms of column `atom_stage` stay
    /// within `eps * mu(A) mu(B)` of the product, for the plan continued as a mixing staircase.
    fn mixing(&self, plan: &ConstructionPlan, atom_stage: usize, eps: &Rational) -> Result<Option<u64>>;

    /// Caps and conventions the estimates depend on, recorded in reports.
    fn caps(&self) -> BTreeMap<String, String>;
}

/// Mass added by stage `k`: its pad on top of column `k` plus its spacers.
pub fn stage_added_measure(plan: &ConstructionPlan, k: usize) -> Rational {
    let w = plan.width_at(k);
    let stage = &plan.stages[k];
    let pad = rat_int(plan.pad(k));
    &w * pad + &w / rat_int(stage.cuts()) * rat_int(stage.spacer_total())
}

/// Exact spacer and pad mass over all stages of the plan.
pub fn total_added_measure(plan: &ConstructionPlan) -> Rational {
    (0..plan.len()).map(|k| stage_added_measure(plan, k)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::tower::CutStage;

    #[test]
    fn schedule_partial_sums() {
        assert!(EpsilonSchedule::explicit(vec![rat(1, 2), rat(1, 4)], rat(1, 1)).is_ok());
        assert!(EpsilonSchedule::explicit(vec![rat(1, 2), rat(1, 2)], rat(1, 1)).is_err());
        let g = EpsilonSchedule::geometric(rat(1, 2), rat(1, 2), rat(3, 2)).unwrap();
        assert_eq!(g.get(3).unwrap(), rat(1, 8));
        assert!(EpsilonSchedule::geometric(rat(1, 2), rat(1, 2), rat(1, 1)).is_err());
        let doc = g.to_doc();
        assert_eq!(EpsilonSchedule::from_doc(&doc).unwrap(), g);
    }

    #[test]
    fn added_measure_accounting() {
        let plan = ConstructionPlan::unit(1).with_stages([CutStage::staircase(2)]);
        assert_eq!(total_added_measure(&plan), rat(1, 2));
        let plan = ConstructionPlan::unit(3).with_stages([CutStage::flat(4)]);
        assert_eq!(total_added_measure(&plan), rat(0, 1));
        let mut plan = ConstructionPlan::unit(2).with_stages([CutStage::flat(2)]);
        plan.set_pad(0, 3u32.into());
        assert_eq!(total_added_measure(&plan), rat(3, 1));
    }
}
