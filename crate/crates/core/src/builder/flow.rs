use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::report::{BuildReport, RoundRecord, StageMeasure, SubstageRecord};
use super::staircase::{build_mixing_staircase, GrowthPolicy};
use super::{stage_added_measure, total_added_measure, EpsilonSchedule, HorizonEstimator};
use crate::error::{Error, Result};
use crate::exact::{format_rational, rat, rat_int, rat_uint, Rational};
use crate::heights::{number_approximation_step, SegmentState};
use crate::sets::{grid_margin, r_thick_witness_from, IndexSet, Window};
use crate::tower::{ConstructionPlan, CutStage, RigidTime};

/// Settings shared by the flow constructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowConfig {
    pub initial_height: u64,
    /// Smallest cut of the first mixing stage.
    pub initial_alpha: u64,
    /// Rigid times need at least this margin inside the complement of `M`.
    pub min_margin: u64,
    /// No column may exceed this height.
    pub height_budget: u64,
    /// Mixing stages appended after the last rigid step.
    pub tail_stages: usize,
    pub max_substages: usize,
    /// Depth of the plain staircase returned when no segments are requested.
    pub staircase_depth: usize,
    /// Density-zero variant: `M` may have density at most this on the checkpoints.
    pub density_threshold: Rational,
    /// Density-zero variant: checkpoints are powers of two in `[sqrt(W), W]`.
    pub density_window: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            initial_height: 1,
            initial_alpha: 2,
            min_margin: 10,
            height_budget: 1_000_000_000,
            tail_stages: 2,
            max_substages: 64,
            staircase_depth: 8,
            density_threshold: rat(1, 20),
            density_window: 1 << 20,
        }
    }
}

/// Mixing construction with one half-rigid time per segment, each placed in
/// the complement of `m` with a margin beyond the estimated mixing horizon.
pub fn build_half_rigid(
    m: &IndexSet,
    eps: &EpsilonSchedule,
    segments: usize,
    estimator: &dyn HorizonEstimator,
    config: &FlowConfig,
) -> Result<(ConstructionPlan, BuildReport)> {
    build_r_rigid(m, 1, eps, segments, estimator, config)
}

/// As [`build_half_rigid`], but each rigid step stacks `r + 1` copies, giving
/// rigid times `k, 2k, ..., rk` that must all lie in the complement of `m`.
pub fn build_r_rigid(
    m: &IndexSet,
    r: u32,
    eps: &EpsilonSchedule,
    segments: usize,
    estimator: &dyn HorizonEstimator,
    config: &FlowConfig,
) -> Result<(ConstructionPlan, BuildReport)> {
    if r == 0 {
        return Err(Error::invalid("r must be at least 1"));
    }
    let kind = if r == 1 { "half_rigid".to_string() } else { format!("r_rigid_{r}") };
    Flow::new(m, eps, estimator, config, kind)?.run(segments, |_| r)
}

/// Rigid steps with `r_i = i` copies in round `i`, for `M` of density zero.
pub fn build_rigid_for_density_zero(
    m: &IndexSet,
    eps: &EpsilonSchedule,
    segments: usize,
    estimator: &dyn HorizonEstimator,
    config: &FlowConfig,
) -> Result<(ConstructionPlan, BuildReport)> {
    density_check(m, config.density_window, &config.density_threshold)?;
    Flow::new(m, eps, estimator, config, "density_zero".into())?.run(segments, |i| i as u32)
}

/// Rejects `m` unless `|m ∩ [0, W')| <= threshold * W'` at every power of two
/// `W'` between `sqrt(W)` and `W`.
pub fn density_check(m: &IndexSet, window: u64, threshold: &Rational) -> Result<()> {
    let mut w = 1u64;
    while w * w < window {
        w *= 2;
    }
    while w <= window {
        let count = m.count(Window::new(0, w as i64 - 1)?)?;
        let density = rat(count as i64, w as i64);
        if density > *threshold {
            return Err(Error::precondition(format!(
                "density of M on [0, {w}) is {} > {}",
                format_rational(&density),
                format_rational(threshold)
            )));
        }
        w *= 2;
    }
    Ok(())
}

struct Flow<'a> {
    complement: IndexSet,
    eps: &'a EpsilonSchedule,
    estimator: &'a dyn HorizonEstimator,
    config: &'a FlowConfig,
    plan: ConstructionPlan,
    report: BuildReport,
    /// Substage owning each stage, for the ledger.
    stage_owner: Vec<usize>,
    height: BigUint,
    alpha: u64,
    /// Last mixing cut, so the next stage grows from it.
    last_cut: u64,
    p: usize,
}

/// Outcome of one number-approximation substage.
struct Placement {
    k: BigUint,
    margin: u64,
    height: BigUint,
    pad: BigUint,
    pad_proportion: Rational,
    last_cut: u64,
}

impl<'a> Flow<'a> {
    fn new(
        m: &IndexSet,
        eps: &'a EpsilonSchedule,
        estimator: &'a dyn HorizonEstimator,
        config: &'a FlowConfig,
        kind: String,
    ) -> Result<Self> {
        m.validate()?;
        if config.initial_height == 0 || config.initial_alpha < 2 {
            return Err(Error::invalid(
                "initial height must be positive, initial alpha at least 2",
            ));
        }
        let mut caps = estimator.caps();
        caps.insert("height_budget".into(), config.height_budget.to_string());
        caps.insert("min_margin".into(), config.min_margin.to_string());
        Ok(Flow {
            complement: m.clone().complement(),
            eps,
            estimator,
            config,
            plan: ConstructionPlan::unit(config.initial_height),
            report: BuildReport { kind, caps, ..BuildReport::default() },
            stage_owner: Vec::new(),
            height: BigUint::from(config.initial_height),
            alpha: config.initial_alpha,
            last_cut: config.initial_alpha,
            p: 0,
        })
    }

    fn run(mut self, segments: usize, r_of_round: impl Fn(usize) -> u32) -> Result<(ConstructionPlan, BuildReport)> {
        if segments == 0 {
            let plan = build_mixing_staircase(
                self.config.initial_height,
                self.config.staircase_depth,
                &GrowthPolicy::Linear { offset: 1 },
            )?;
            self.stage_owner = vec![0; plan.len()];
            self.plan = plan;
            return self.finish();
        }
        let mut round_base = 0usize;
        for i in 1..=segments {
            let r = r_of_round(i);
            let eps_i = self.eps.get(i)?;
            // The horizon belongs to the round-start prefix continued as a mixing
            // staircase; targets are chosen only after it is known.
            let horizon = self.estimator.mixing(&self.plan, round_base, &eps_i)?.ok_or_else(|| {
                Error::HorizonNotReached(format!(
                    "round {i}: mixing horizon of the atoms of column {round_base} not reached within the estimator caps"
                ))
            })?;
            log::info!("round {i}: mixing horizon {horizon} for atoms of column {round_base}");
            let required = self.config.min_margin.max(horizon + 1);
            loop {
                let (record, placement) = self.substage(r, required)?;
                log::info!(
                    "round {i} substage {}: k = {}, margin = {}, height = {}",
                    record.p,
                    record.k,
                    record.margin,
                    record.height
                );
                self.report.substages.push(record);
                let passes = placement.margin > horizon
                    && placement.margin >= self.config.min_margin
                    && &eps_i * rat_uint(&placement.height) > rat_int(horizon);
                if passes {
                    self.rigid_step(i, r, &eps_i, placement, horizon)?;
                    round_base = self.plan.len();
                    break;
                }
            }
        }
        for _ in 0..self.config.tail_stages {
            self.push_mixing_stage()?;
        }
        self.finish()
    }

    fn push(&mut self, stage: CutStage) -> Result<()> {
        let next = stage.next_height(&self.height, &self.plan.pad(self.plan.len()));
        if next > BigUint::from(self.config.height_budget) {
            return Err(Error::Budget {
                what: "column height",
                value: next.to_string(),
                budget: self.config.height_budget.to_string(),
            });
        }
        self.plan.push(stage);
        self.stage_owner.push(self.p);
        self.height = next;
        Ok(())
    }

    /// Staircase stage with the current cut; cuts grow only through `rho`.
    fn push_mixing_stage(&mut self) -> Result<()> {
        self.push(CutStage::staircase(self.alpha))?;
        self.last_cut = self.alpha;
        Ok(())
    }

    /// Mixing stages until the Cesaro horizon exists, then a constant-cut segment
    /// whose adjusted height approximates a target with an `r`-fold grid of
    /// radius `required` in the complement of `M`.
    fn substage(&mut self, r: u32, required: u64) -> Result<(SubstageRecord, Placement)> {
        self.p += 1;
        if self.p > self.config.max_substages {
            return Err(Error::HorizonNotReached(format!(
                "no rigid step passed the mixing-horizon checks within {} substages",
                self.config.max_substages
            )));
        }
        let eps_p = self.eps.get(self.p)?;
        let alpha = self.alpha;
        let atom_stage = self.plan.len();
        let inv = (Rational::from_integer(1.into()) / &eps_p).floor().to_integer().to_u64().unwrap_or(u64::MAX);
        let mut uc_stages = 0;
        let (rho, uc_horizon) = loop {
            let rho = self.alpha.max(inv + 1);
            let lead = rat_int((rho + 1) * (rho + 1)) / rat_uint(&self.height);
            if uc_stages > 0 && lead < eps_p {
                if let Some(n) = self.estimator.uniform_cesaro(&self.plan, atom_stage, &eps_p)? {
                    break (rho, n);
                }
            }
            self.push_mixing_stage()?;
            uc_stages += 1;
            log::debug!("substage {}: mixing stage to height {}", self.p, self.height);
        };
        let j = self.plan.len();
        let state = SegmentState { rho, j, h_j: self.height.clone() };
        let (k, margin) = self.find_target(&state, r, required)?;
        let step = number_approximation_step(&state, &k, &eps_p)?;
        for &c in &step.cuts {
            self.push(CutStage::staircase(c))?;
        }
        if self.height != step.height {
            return Err(Error::Invariant(format!(
                "segment height {} differs from the approximation {}",
                self.height, step.height
            )));
        }
        let last_cut = step.cuts.last().copied().unwrap_or(self.last_cut);
        self.last_cut = last_cut;
        self.alpha = rho;
        let record = SubstageRecord {
            p: self.p,
            epsilon: eps_p,
            alpha,
            uc_stages,
            uc_horizon,
            rho,
            j,
            n: step.n,
            k: k.clone(),
            margin,
            mask: step.mask.to_string_bits(),
            height: step.height.clone(),
        };
        let placement = Placement {
            k,
            margin,
            height: step.height,
            pad: step.pad,
            pad_proportion: step.pad_proportion,
            last_cut,
        };
        Ok((record, placement))
    }

    /// Smallest center at or above the first valid band whose band is valid.
    fn find_target(&self, state: &SegmentState, r: u32, required: u64) -> Result<(BigUint, u64)> {
        let budget = BigUint::from(self.config.height_budget);
        let hs = state.heights_until(&budget);
        let valid = |d: usize| {
            d > 0 && d + 1 < hs.len() && hs[d + 1] < &state.h_j * BigUint::from(state.rho + 1).pow(d as u32)
        };
        let Some(mut d) = (1..hs.len().saturating_sub(1)).find(|&d| valid(d)) else {
            return Err(Error::NoWitness(format!(
                "no valid approximation band below the height budget {budget} (rho = {}, h_j = {})",
                state.rho, state.h_j
            )));
        };
        let hi = (self.config.height_budget as i64).saturating_mul(i64::from(r) + 1);
        let window = Window::new(0, hi)?;
        loop {
            let from = hs[d].to_i64().unwrap_or(i64::MAX);
            let Some(w) = r_thick_witness_from(&self.complement, r, window, required, from)? else {
                return Err(Error::NoWitness(format!(
                    "complement of M has no {r}-fold grid of radius {required} with center in [{from}, {}]",
                    self.config.height_budget
                )));
            };
            let k = BigUint::from(w.center as u64);
            if k >= budget {
                return Err(Error::NoWitness(format!(
                    "first {r}-fold grid of radius {required} above {from} is centered at {k}, beyond the height budget"
                )));
            }
            let band = hs.partition_point(|h| h <= &k) - 1;
            if valid(band) {
                let margin = grid_margin(&self.complement, r, w.center, w.center as u64)?
                    .ok_or_else(|| Error::Invariant(format!("witness {k} is not in the complement of M")))?;
                return Ok((k, margin));
            }
            d = band + 1;
        }
    }

    fn rigid_step(&mut self, i: usize, r: u32, eps_i: &Rational, placement: Placement, horizon: u64) -> Result<()> {
        let eps_p = self.eps.get(self.p)?;
        if placement.pad_proportion >= rat_int(2u32) * &eps_p {
            return Err(Error::Invariant(format!(
                "pad proportion {} is not below 2 eps_{} = {}",
                format_rational(&placement.pad_proportion),
                self.p,
                format_rational(&(rat_int(2u32) * &eps_p))
            )));
        }
        let stage = self.plan.len();
        self.plan.set_pad(stage, placement.pad.clone());
        self.push(CutStage::flat(u64::from(r) + 1))?;
        let times: Vec<BigUint> = (1..=r).map(|j| &placement.k * j).collect();
        for t in &times {
            self.plan.rigid_times.push(RigidTime { stage, time: t.clone() });
        }
        self.alpha = placement.last_cut.saturating_sub(1).max(2);
        self.report.rounds.push(RoundRecord {
            i,
            r,
            epsilon: eps_i.clone(),
            p: self.p,
            k: placement.k,
            margin: placement.margin,
            height: placement.height,
            pad: placement.pad,
            pad_proportion: placement.pad_proportion,
            mixing_horizon: horizon,
            rigid_stage: stage,
            times,
        });
        Ok(())
    }

    fn finish(mut self) -> Result<(ConstructionPlan, BuildReport)> {
        let heights = self.plan.heights();
        for (k, &owner) in self.stage_owner.iter().enumerate() {
            let added = stage_added_measure(&self.plan, k);
            let mass = self.plan.width_at(k) * rat_uint(&heights[k]);
            let proportion = &added / mass;
            if owner > 0 {
                let cap = rat_int(2u32) * self.eps.get(owner)?;
                if proportion >= cap {
                    return Err(Error::Invariant(format!(
                        "stage {k} adds proportion {} of its column, not below 2 eps_{owner}",
                        format_rational(&proportion)
                    )));
                }
            }
            self.report.ledger.push(StageMeasure { stage: k, p: owner, added, proportion });
        }
        self.report.total_added = total_added_measure(&self.plan);
        debug_assert!(self.report.rounds.windows(2).all(|w| w[0].p < w[1].p));
        Ok((self.plan, self.report))
    }
}
