use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ceil_div_rational, rat_int, rat_uint, serde_biguint, serde_biguint_vec, serde_rational, Rational};
use crate::sets::{IndexSet, Window};
use crate::tower::{ConstructionPlan, CutStage, RigidTime};

/// Schedules for the M-tower construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FriedmanConfig {
    pub initial_height: u64,
    /// `eps_n`, one per round.
    pub epsilons: Vec<Rational>,
    /// `t_n`, one per round; needs `b(n - 1) / t_n < eps_n` with `b(n) = t_1 + ... + t_n`.
    pub t: Vec<u64>,
    /// `k_n`, lower bounds on the first cut; defaults to 1.
    pub k: Vec<u64>,
    /// Horizons `N_n` after which square times mix on `G_n`; default `h(G_n)`.
    pub horizons: Vec<u64>,
}

impl FriedmanConfig {
    pub fn new(epsilons: Vec<Rational>, t: Vec<u64>) -> Self {
        FriedmanConfig {
            initial_height: 1,
            epsilons,
            t,
            k: Vec::new(),
            horizons: Vec::new(),
        }
    }
}

/// One round `G_n -> G_{n,1} -> G_{n,2} -> G_{n,3} -> G_{n+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FriedmanRound {
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub t: u64,
    /// `b(n - 1)`.
    pub b_prev: u64,
    #[serde(with = "serde_biguint")]
    pub horizon: BigUint,
    pub first_cut: u64,
    pub second_cut: u64,
    /// `h(G_n)`.
    #[serde(with = "serde_biguint")]
    pub tower_height: BigUint,
    /// `h_n = h(G_{n,2})`, the period of the rigidity witnesses.
    #[serde(with = "serde_biguint")]
    pub h: BigUint,
    /// Stage cutting `G_{n,2}` into `second_cut` copies.
    pub second_stage: usize,
    /// Whether `eps_n < w_n / (100 L_n^2)` with `L_n = h(G_n)`; reported, not enforced.
    pub small_relative_to_width: bool,
    /// Members of the index set in `[N_{n-1}, N_n]`.
    pub set_count: u64,
    /// `d h_n` for `1 <= d <= t_n`.
    #[serde(with = "serde_biguint_vec")]
    pub witnesses: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FriedmanReport {
    pub rounds: Vec<FriedmanRound>,
}

/// The M-tower recursion, encoded as a single column per stage: `S_r` is a
/// flat cut into `r` copies, merging columns is the identity on one column, and
/// the two-column tower `G_{n+1}` is a 2-cut with spacers `[0, 1]`.
pub fn build_friedman_m_tower(
    s: &IndexSet,
    config: &FriedmanConfig,
    depth: usize,
) -> Result<(ConstructionPlan, FriedmanReport)> {
    s.validate()?;
    if config.initial_height == 0 {
        return Err(Error::invalid("initial height must be positive"));
    }
    if config.epsilons.len() < depth || config.t.len() < depth {
        return Err(Error::invalid(format!(
            "depth {depth} needs {depth} epsilons and t values (got {} and {})",
            config.epsilons.len(),
            config.t.len()
        )));
    }
    let mut plan = ConstructionPlan::unit(config.initial_height);
    let mut report = FriedmanReport::default();
    let mut h = BigUint::from(config.initial_height);
    let mut b_prev = 0u64;
    let mut prev_horizon = BigUint::zero();
    for n in 1..=depth {
        let eps = &config.epsilons[n - 1];
        let t = config.t[n - 1];
        if *eps <= Rational::zero() || *eps >= Rational::one() {
            return Err(Error::invalid(format!("eps_{n} = {eps} must lie in (0, 1)")));
        }
        if t == 0 {
            return Err(Error::invalid(format!("t_{n} must be positive")));
        }
        if rat_int(b_prev) / rat_int(t) >= *eps {
            return Err(Error::precondition(format!(
                "b({}) / t_{n} = {b_prev}/{t} is not below eps_{n} = {eps}",
                n - 1
            )));
        }
        let k = config.k.get(n - 1).copied().unwrap_or(1);
        let horizon = config.horizons.get(n - 1).map_or_else(|| h.clone(), |&v| BigUint::from(v));
        let by_horizon = to_cut(ceil_div_rational(&rat_uint(&horizon), eps), "N_n / eps_n")?;
        let by_t = to_cut(ceil_div_rational(&rat_int(t), eps), "t_n / eps_n")?;
        let first_cut = k.max(by_horizon).max(by_t).max(1);
        let second_cut = by_t.max(first_cut);
        let width = plan.width_at(plan.len());
        let small_relative_to_width = *eps < width / (rat_int(100u32) * rat_uint(&(&h * &h)));
        let set_count = count_in(s, &prev_horizon, &horizon)?;

        let tower_height = h.clone();
        plan.push(CutStage::flat(first_cut));
        h *= first_cut;
        let h_n = h.clone();
        let second_stage = plan.len();
        plan.push(CutStage::flat(second_cut));
        h *= second_cut;
        plan.push(CutStage::new(2, vec![0, 1])?);
        h = h * 2u32 + 1u32;

        let witnesses: Vec<BigUint> = (1..=t).map(|d| &h_n * d).collect();
        for w in &witnesses {
            plan.rigid_times.push(RigidTime {
                stage: second_stage,
                time: w.clone(),
            });
        }
        report.rounds.push(FriedmanRound {
            n,
            epsilon: eps.clone(),
            t,
            b_prev,
            horizon: horizon.clone(),
            first_cut,
            second_cut,
            tower_height,
            h: h_n,
            second_stage,
            small_relative_to_width,
            set_count,
            witnesses,
        });
        b_prev += t;
        prev_horizon = horizon;
    }
    Ok((plan, report))
}

fn to_cut(v: num_bigint::BigInt, what: &'static str) -> Result<u64> {
    u64::try_from(v.clone()).map_err(|_| Error::Budget {
        what,
        value: v.to_string(),
        budget: u64::MAX.to_string(),
    })
}

fn count_in(s: &IndexSet, lo: &BigUint, hi: &BigUint) -> Result<u64> {
    let lo = i64::try_from(lo.clone()).unwrap_or(i64::MAX);
    let hi = i64::try_from(hi.clone()).unwrap_or(i64::MAX);
    if lo > hi {
        return Ok(0);
    }
    s.count(Window::new(lo, hi)?)
}
