use num_bigint::BigUint;
use num_traits::Zero;

use super::levels::LevelSet;
use super::plan::ConstructionPlan;
use crate::error::{Error, Result};
use crate::exact::{biguint_to_u64, rat_int, Rational};

/// Largest column height a realization will accept unless told otherwise.
pub const DEFAULT_HEIGHT_BUDGET: u64 = 1_000_000_000;

/// Largest number of runs a refined level set may hold.
const RUN_BUDGET: usize = 50_000_000;

/// Column layout of one stage: where each copy of column `k` starts inside column `k + 1`.
#[derive(Debug, Clone)]
pub(crate) struct StageLayout {
    pub(crate) starts: Vec<u64>,
}

/// Exact realization of the first `depth` stages of a plan.
///
/// Levels are implicit: column `k` has levels `0..heights[k]`, all of width
/// `widths[k]`. Column `k + 1` is the concatenation, for each subcolumn `j`,
/// of a copy of column `k`, the stage pad and `spacers[j]` new levels.
#[derive(Debug, Clone)]
pub struct TowerRealization {
    plan: ConstructionPlan,
    depth: usize,
    heights: Vec<u64>,
    widths: Vec<Rational>,
    layouts: Vec<StageLayout>,
    total_measure: Rational,
    remainder_measure: Rational,
}

pub fn realize(plan: &ConstructionPlan, depth: usize) -> Result<TowerRealization> {
    realize_with_budget(plan, depth, DEFAULT_HEIGHT_BUDGET)
}

pub fn realize_with_budget(
    plan: &ConstructionPlan,
    depth: usize,
    height_budget: u64,
) -> Result<TowerRealization> {
    plan.validate()?;
    if depth > plan.len() {
        return Err(Error::OutOfRange {
            index: depth,
            limit: plan.len(),
        });
    }
    let mut heights = Vec::with_capacity(depth + 1);
    let mut widths = Vec::with_capacity(depth + 1);
    let mut layouts = Vec::with_capacity(depth);
    let mut h = biguint_to_u64(&plan.initial_height, "column height", height_budget)?;
    let mut w = plan.initial_width.clone();
    heights.push(h);
    widths.push(w.clone());
    for (k, stage) in plan.stages[..depth].iter().enumerate() {
        let pad = plan.pad(k);
        let next = stage.next_height(&BigUint::from(h), &pad);
        let next = biguint_to_u64(&next, "column height", height_budget)?;
        let block = h + biguint_to_u64(&pad, "pad", height_budget)?;
        let mut starts = Vec::with_capacity(stage.cuts() as usize);
        let mut s = 0u64;
        for &sp in stage.spacers() {
            starts.push(s);
            s += block + sp;
        }
        debug_assert_eq!(s, next);
        layouts.push(StageLayout { starts });
        h = next;
        w = w / rat_int(stage.cuts());
        heights.push(h);
        widths.push(w.clone());
    }
    let total_measure = &w * rat_int(h);
    let remainder_measure = spacer_mass_after(plan, depth);
    Ok(TowerRealization {
        plan: plan.clone(),
        depth,
        heights,
        widths,
        layouts,
        total_measure,
        remainder_measure,
    })
}

/// Spacer and pad mass added by stages `from..` of the plan.
fn spacer_mass_after(plan: &ConstructionPlan, from: usize) -> Rational {
    let mut mass = Rational::zero();
    let mut w = plan.width_at(from);
    for (k, stage) in plan.stages.iter().enumerate().skip(from) {
        let pad = plan.pad(k);
        if !pad.is_zero() {
            mass += &w * rat_int(pad);
        }
        w = w / rat_int(stage.cuts());
        mass += &w * rat_int(stage.spacer_total());
    }
    mass
}

impl TowerRealization {
    pub fn plan(&self) -> &ConstructionPlan {
        &self.plan
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Height of the deepest realized column.
    pub fn height(&self) -> u64 {
        self.heights[self.depth]
    }

    pub fn height_at(&self, stage: usize) -> u64 {
        self.heights[stage]
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    /// Width of every level of the deepest column.
    pub fn level_width(&self) -> &Rational {
        &self.widths[self.depth]
    }

    pub fn width_at(&self, stage: usize) -> &Rational {
        &self.widths[stage]
    }

    /// Mass of the deepest column.
    pub fn total_measure(&self) -> &Rational {
        &self.total_measure
    }

    /// Spacer mass the plan adds after the realized depth.
    pub fn remainder_measure(&self) -> &Rational {
        &self.remainder_measure
    }

    /// Mass of the whole space the plan describes.
    pub fn plan_measure(&self) -> Rational {
        &self.total_measure + &self.remainder_measure
    }

    /// Starts of the copies of column `stage` inside column `stage + 1`.
    pub fn copy_starts(&self, stage: usize) -> &[u64] {
        &self.layouts[stage].starts
    }

    pub fn measure(&self, set: &LevelSet) -> Rational {
        &self.widths[set.stage()] * rat_int(set.count())
    }

    /// Whole column `stage` as a level set.
    pub fn column(&self, stage: usize) -> LevelSet {
        LevelSet::range(stage, 0, self.heights[stage])
    }

    pub fn check(&self, set: &LevelSet) -> Result<()> {
        if set.stage() > self.depth {
            return Err(Error::precondition(format!(
                "level set lives on column {} but only {} stages are realized",
                set.stage(),
                self.depth
            )));
        }
        set.check_bounds(self.heights[set.stage()])
    }

    /// Positions of the copies of column `stage` inside column `target`, ascending.
    pub fn copy_offsets(&self, stage: usize, target: usize) -> Result<Vec<u64>> {
        if stage > target || target > self.depth {
            return Err(Error::OutOfRange {
                index: target,
                limit: self.depth,
            });
        }
        let mut offsets = vec![0u64];
        for m in (stage..target).rev() {
            let starts = &self.layouts[m].starts;
            if offsets.len().saturating_mul(starts.len()) > RUN_BUDGET {
                return Err(Error::Budget {
                    what: "copy count",
                    value: format!("{}", offsets.len() as u128 * starts.len() as u128),
                    budget: RUN_BUDGET.to_string(),
                });
            }
            // Copies of column m+1 are disjoint and each spans h_{m+1}, so nesting keeps order.
            offsets = offsets
                .iter()
                .flat_map(|&o| starts.iter().map(move |&s| o + s))
                .collect();
        }
        Ok(offsets)
    }

    /// The levels of column `target` that refine `set`.
    pub fn refine(&self, set: &LevelSet, target: usize) -> Result<LevelSet> {
        self.check(set)?;
        if set.stage() == target {
            return Ok(set.clone());
        }
        let offsets = self.copy_offsets(set.stage(), target)?;
        let n = offsets.len().saturating_mul(set.runs().len());
        if n > RUN_BUDGET {
            return Err(Error::Budget {
                what: "refined run count",
                value: n.to_string(),
                budget: RUN_BUDGET.to_string(),
            });
        }
        let mut runs = Vec::with_capacity(n);
        for o in offsets {
            runs.extend(set.runs().iter().map(|&(a, b)| (o + a, o + b)));
        }
        Ok(LevelSet::from_sorted_runs(target, runs))
    }

    /// The level of column `stage` that `level` of column `from` lies in, or
    /// `None` when it is a spacer added after `stage`.
    pub fn ancestor(&self, from: usize, level: u64, stage: usize) -> Option<u64> {
        if stage > from || from > self.depth || level >= self.heights[from] {
            return None;
        }
        let mut p = level;
        for m in (stage..from).rev() {
            let starts = &self.layouts[m].starts;
            let j = starts.partition_point(|&s| s <= p) - 1;
            p -= starts[j];
            if p >= self.heights[m] {
                return None;
            }
        }
        Some(p)
    }

    /// For each level of the deepest column, the column-`stage` level it refines.
    pub fn labels(&self, stage: usize) -> Result<Vec<Option<u64>>> {
        if stage > self.depth {
            return Err(Error::OutOfRange {
                index: stage,
                limit: self.depth,
            });
        }
        if self.height() as usize > RUN_BUDGET {
            return Err(Error::Budget {
                what: "explicit label count",
                value: self.height().to_string(),
                budget: RUN_BUDGET.to_string(),
            });
        }
        let mut labels: Vec<Option<u64>> = (0..self.heights[stage]).map(Some).collect();
        for m in stage..self.depth {
            let next_h = self.heights[m + 1] as usize;
            let mut next = vec![None; next_h];
            for &s in &self.layouts[m].starts {
                next[s as usize..s as usize + labels.len()].copy_from_slice(&labels);
            }
            labels = next;
        }
        Ok(labels)
    }
}
