#![allow(dead_code)]

use num_bigint::BigUint;
use rand::Rng;
use rigidmix::exact::{rat_int, Rational};
use rigidmix::tower::{ConstructionPlan, CutStage, LevelSet};

/// Explicit stack of the deepest column: entry `i` is the stage-`k` level
/// that level `i` refines, or `None` for a later spacer.
pub fn explicit_column(plan: &ConstructionPlan, k: usize, depth: usize) -> Vec<Option<u64>> {
    let heights = plan.heights_of(depth).unwrap();
    let hk: u64 = heights[k].clone().try_into().unwrap();
    let mut col: Vec<Option<u64>> = (0..hk).map(Some).collect();
    for m in k..depth {
        let stage = &plan.stages[m];
        let pad: u64 = plan.pad(m).try_into().unwrap();
        let mut next = Vec::new();
        for &sp in stage.spacers() {
            next.extend_from_slice(&col);
            next.extend(std::iter::repeat_n(None, (pad + sp) as usize));
        }
        col = next;
    }
    col
}

/// Level-by-level evaluation of `mu(T^n A ∩ B)` on the deepest column.
/// Returns `(resolved count, unresolved count)` of depth-levels.
pub fn brute_correlation(
    plan: &ConstructionPlan,
    depth: usize,
    n: i64,
    a: &[u64],
    ka: usize,
    b: &[u64],
    kb: usize,
) -> (u64, u64) {
    let ca = explicit_column(plan, ka, depth);
    let cb = explicit_column(plan, kb, depth);
    let h = ca.len() as i64;
    let (mut hit, mut lost) = (0, 0);
    for u in 0..h {
        let in_a = ca[u as usize].is_some_and(|l| a.contains(&l));
        if !in_a {
            continue;
        }
        let v = u + n;
        if v < 0 || v >= h {
            lost += 1;
        } else if cb[v as usize].is_some_and(|l| b.contains(&l)) {
            hit += 1;
        }
    }
    (hit, lost)
}

pub fn depth_width(plan: &ConstructionPlan, depth: usize) -> Rational {
    plan.width_at(depth)
}

pub fn scaled(w: &Rational, count: u64) -> Rational {
    w * rat_int(count)
}

/// A random plan whose columns stay below `max_height`.
pub fn random_plan<R: Rng>(rng: &mut R, max_height: u64) -> ConstructionPlan {
    let h1 = rng.random_range(1..=6u64);
    let mut plan = ConstructionPlan::new(
        BigUint::from(h1),
        Rational::new(rng.random_range(1..=3).into(), rng.random_range(1..=4).into()),
    )
    .unwrap();
    let mut h = h1;
    let stages = rng.random_range(0..=5);
    for k in 0..stages {
        let cuts = rng.random_range(1..=4u64);
        let spacers: Vec<u64> = match rng.random_range(0..3) {
            0 => (0..cuts).collect(),
            1 => vec![0; cuts as usize],
            _ => (0..cuts).map(|_| rng.random_range(0..=3)).collect(),
        };
        let pad = if rng.random_bool(0.25) { rng.random_range(1..=4u64) } else { 0 };
        let next = (h + pad) * cuts + spacers.iter().sum::<u64>();
        if next > max_height {
            break;
        }
        plan.push(CutStage::new(cuts, spacers).unwrap());
        plan.set_pad(k, BigUint::from(pad));
        h = next;
    }
    plan
}

pub fn random_levels<R: Rng>(rng: &mut R, stage: usize, height: u64) -> Vec<u64> {
    let mut v: Vec<u64> = match rng.random_range(0..3) {
        0 => {
            let a = rng.random_range(0..height);
            let b = rng.random_range(a..height);
            (a..=b).collect()
        }
        1 => (0..height).filter(|_| rng.random_bool(0.3)).collect(),
        _ => vec![rng.random_range(0..height)],
    };
    v.dedup();
    let _ = stage;
    v
}

pub fn level_set(stage: usize, levels: &[u64]) -> LevelSet {
    LevelSet::from_levels(stage, levels.iter().copied())
}

use rigidmix::heights::{BinaryMask, CutVector, H};

/// Exhaustive maximizer of `H_n(r + b, h1) <= k` over all masks on `[j, n-1]`;
/// ties resolve to the lexicographically smallest mask.
pub fn exhaustive_mask(
    r: &CutVector,
    h1: &BigUint,
    j: usize,
    n: usize,
    k: &BigUint,
) -> Option<(Vec<bool>, BigUint)> {
    let dims = n - j;
    let mut best: Option<(Vec<bool>, BigUint)> = None;
    for code in 0u32..(1 << dims) {
        let bits: Vec<bool> = (0..dims).map(|o| code >> (dims - 1 - o) & 1 == 1).collect();
        let mut e = r.entries().to_vec();
        for (o, &b) in bits.iter().enumerate() {
            e[j - 1 + o] += u64::from(b);
        }
        let h = H(&CutVector::new(e).unwrap(), h1, n).unwrap();
        if &h <= k && best.as_ref().is_none_or(|(_, b)| h > *b) {
            best = Some((bits, h));
        }
    }
    best
}

/// A random instance satisfying the mask preconditions, with `n - j <= max_dims`.
pub fn random_mask_instance<R: Rng>(rng: &mut R, max_dims: usize) -> (CutVector, BigUint, usize, usize, BigUint) {
    loop {
        let n = rng.random_range(2..=max_dims + 1);
        let j = rng.random_range(1..n);
        let mut r = Vec::with_capacity(n);
        let mut cur = rng.random_range(2..=5u64);
        for _ in 0..n {
            cur += rng.random_range(0..=1);
            r.push(cur);
        }
        let r = CutVector::new(r).unwrap();
        let h1 = BigUint::from(rng.random_range(1..=60u64));
        let hn = H(&r, &h1, n).unwrap();
        let hn1 = H(&r, &h1, n + 1).unwrap();
        let hj = H(&r, &h1, j).unwrap();
        let ceiling = r.entries()[j - 1..n - 1].iter().fold(hj, |acc, &ri| acc * (ri + 1));
        let top = hn1.min(ceiling);
        if top <= hn {
            continue;
        }
        let span: u64 = (&top - &hn).try_into().unwrap_or(u64::MAX);
        let k = &hn + BigUint::from(rng.random_range(0..span));
        return (r, h1, j, n, k);
    }
}

pub fn mask_bits(m: &BinaryMask) -> Vec<bool> {
    m.bits.clone()
}
