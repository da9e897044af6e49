//! Staircase height functional and binary adjustments of cut parameters.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{rat_uint, Rational};

/// Cut parameters `r_1, r_2, ...` (1-based), each at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutVector {
    entries: Vec<u64>,
}

impl CutVector {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|&r| r < 2) {
            return Err(Error::invalid(format!("cut parameter r_{} = {} is below 2", i + 1, entries[i])));
        }
        Ok(CutVector { entries })
    }

    pub fn constant(r: u64, len: usize) -> Result<Self> {
        Self::new(vec![r; len])
    }

    /// `r_i`, 1-based.
    pub fn get(&self, i: usize) -> u64 {
        self.entries[i - 1]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[0] <= w[1])
    }

    /// `r + b` for a mask on `[mask.start, mask.start + mask.len())`.
    pub fn plus(&self, mask: &BinaryMask) -> CutVector {
        let mut e = self.entries.clone();
        for (o, &b) in mask.bits.iter().enumerate() {
            if b {
                e[mask.start + o - 1] += 1;
            }
        }
        CutVector { entries: e }
    }
}

/// Bits `b_i` for `i` in `start..start + bits.len()` (1-based indices of a [`CutVector`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryMask {
    pub start: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn zeros(start: usize, len: usize) -> Self {
        BinaryMask {
            start,
            bits: vec![false; len],
        }
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_string_bits(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

fn step(h: &BigUint, r: u64) -> BigUint {
    h * r + BigUint::from(r) * (r - 1) / 2u32
}

/// `H_n(r, h1)`: the staircase recursion `h_{i+1} = r_i h_i + r_i (r_i - 1) / 2` from `h_1`.
#[allow(non_snake_case)]
pub fn H(r: &CutVector, h1: &BigUint, n: usize) -> Result<BigUint> {
    if n == 0 || n > r.len() + 1 {
        return Err(Error::OutOfRange {
            index: n,
            limit: r.len() + 1,
        });
    }
    Ok(r.entries[..n - 1].iter().fold(h1.clone(), |h, &ri| step(&h, ri)))
}

/// `H_1..=H_{len+1}`.
pub fn all_heights(r: &CutVector, h1: &BigUint) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(r.len() + 1);
    out.push(h1.clone());
    for &ri in &r.entries {
        let next = step(out.last().unwrap(), ri);
        out.push(next);
    }
    out
}

/// Result of the binary approximation of `k` by an adjusted height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskOutcome {
    pub mask: BinaryMask,
    /// `H_n(r + b, h1)`.
    pub height: BigUint,
    /// `k - H_n(r + b, h1)`.
    pub residual: BigUint,
    /// `(1/r_j + 1/H_j(r, h1)) H_n(r + b, h1)`, which strictly exceeds the residual.
    pub residual_bound: Rational,
}

/// Chooses bits `b_j..b_{n-1}` so that `H_n(r + b, h1)` is the largest adjusted
/// height not exceeding `k`; ties go to the lexicographically smallest mask.
///
/// Requires `r` nondecreasing, `H_n(r) <= k < H_{n+1}(r)` and
/// `k < prod_{i=j}^{n-1} (r_i + 1) * H_j(r)`.
pub fn height_mask(
    r: &CutVector,
    h1: &BigUint,
    j: usize,
    n: usize,
    k: &BigUint,
) -> Result<MaskOutcome> {
    if j == 0 || j > n || n > r.len() {
        return Err(Error::precondition(format!(
            "need 1 <= j <= n <= {} (got j = {j}, n = {n})",
            r.len()
        )));
    }
    if h1.is_zero() {
        return Err(Error::precondition("h1 must be positive"));
    }
    if !r.is_nondecreasing() {
        return Err(Error::precondition("cut vector is not nondecreasing"));
    }
    let hs = all_heights(r, h1);
    if &hs[n - 1] > k {
        return Err(Error::precondition(format!("H_n = {} exceeds k = {k}", hs[n - 1])));
    }
    if k >= &hs[n] {
        return Err(Error::precondition(format!("k = {k} is not below H_(n+1) = {}", hs[n])));
    }
    let ceiling = r.entries[j - 1..n - 1]
        .iter()
        .fold(hs[j - 1].clone(), |acc, &ri| acc * (ri + 1));
    if k >= &ceiling {
        return Err(Error::precondition(format!(
            "k = {k} is not below prod (r_i + 1) * H_j = {ceiling}"
        )));
    }

    let dims = n - j;
    let mut search = MaskSearch {
        r: &r.entries[j - 1..n - 1],
        k,
        bits: vec![false; dims],
        best: None,
    };
    search.descend(0, hs[j - 1].clone());
    let (bits, height) = search
        .best
        .ok_or_else(|| Error::Invariant("the zero mask always fits below k".into()))?;
    let mask = BinaryMask { start: j, bits };
    let residual = k - &height;
    let bound = (Rational::new(1.into(), r.get(j).into()) + Rational::new(1.into(), rat_uint(&hs[j - 1]).to_integer()))
        * rat_uint(&height);
    if rat_uint(&residual) >= bound {
        return Err(Error::Invariant(format!(
            "residual {residual} is not below the bound {bound} for mask {}",
            mask.to_string_bits()
        )));
    }
    // Maximality certificate: any single 0 -> 1 flip overshoots k.
    let adjusted = r.plus(&mask);
    for o in 0..dims {
        if !mask.bits[o] {
            let mut flipped = mask.clone();
            flipped.bits[o] = true;
            if &H(&r.plus(&flipped), h1, n)? <= k {
                return Err(Error::Invariant(format!("mask is not maximal at index {}", j + o)));
            }
        }
    }
    debug_assert_eq!(H(&adjusted, h1, n)?, height);
    Ok(MaskOutcome {
        mask,
        height,
        residual,
        residual_bound: bound,
    })
}

struct MaskSearch<'a> {
    r: &'a [u64],
    k: &'a BigUint,
    bits: Vec<bool>,
    best: Option<(Vec<bool>, BigUint)>,
}

impl MaskSearch<'_> {
    /// `h` is the height after applying bits `0..depth`. Heights are increasing in
    /// every bit, so all-zero / all-one completions bound the subtree.
    fn descend(&mut self, depth: usize, h: BigUint) {
        let rest = &self.r[depth..];
        let low = rest.iter().fold(h.clone(), |acc, &ri| step(&acc, ri));
        if &low > self.k {
            return;
        }
        let high = rest.iter().fold(h.clone(), |acc, &ri| step(&acc, ri + 1));
        if let Some((_, b)) = &self.best {
            if &high < b {
                return;
            }
        }
        if depth == self.r.len() {
            let better = match &self.best {
                None => true,
                Some((bits, b)) => low > *b || (low == *b && self.bits < *bits),
            };
            if better {
                self.best = Some((self.bits.clone(), low));
            }
            return;
        }
        for bit in [true, false] {
            self.bits[depth] = bit;
            let next = step(&h, self.r[depth] + u64::from(bit));
            self.descend(depth + 1, next);
        }
        self.bits[depth] = false;
    }
}

/// Outcome of placing a target `k` on a constant-cut segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproximationStep {
    /// Global index of the column whose adjusted height approximates `k`.
    pub n: usize,
    /// Bits on the segment indices `j..n-1`.
    pub mask: BinaryMask,
    /// Cut parameters `rho + b_i` for the segment.
    pub cuts: Vec<u64>,
    /// Heights of the adjusted segment, from `h_j` to the adjusted `H_n`.
    pub heights: Vec<BigUint>,
    pub height: BigUint,
    /// `k - H_n(r + b)` spacers to put on top of the adjusted column.
    pub pad: BigUint,
    /// `pad / H_n(r + b)`.
    pub pad_proportion: Rational,
}

/// State of a number-approximation segment: constant cut `rho` from column `j`
/// of height `h_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentState {
    pub rho: u64,
    pub j: usize,
    pub h_j: BigUint,
}

impl SegmentState {
    /// Heights `h_j, h_{j+1}, ...` while they stay at most `limit`, plus the first one above.
    pub fn heights_until(&self, limit: &BigUint) -> Vec<BigUint> {
        let mut hs = vec![self.h_j.clone()];
        while hs.last().unwrap() <= limit {
            let next = step(hs.last().unwrap(), self.rho);
            hs.push(next);
        }
        hs
    }

    /// Smallest `x` with a valid placement at or above `x`: the lower end of the
    /// first band `[h_n, h_{n+1})` with `h_{n+1} < (rho + 1)^(n - j) h_j`.
    pub fn first_valid_band(&self, max_steps: usize) -> Option<(usize, BigUint, BigUint)> {
        let mut h = self.h_j.clone();
        let mut cap = self.h_j.clone();
        for d in 0..max_steps {
            let next = step(&h, self.rho);
            if next < cap {
                return Some((self.j + d, h, next));
            }
            h = next;
            cap *= self.rho + 1;
        }
        None
    }
}

/// Places `k` at the column `n` with `h_n <= k < h_{n+1} < (rho+1)^(n-j) h_j`
/// and adjusts the segment cuts so that the column height approximates `k` from below.
pub fn number_approximation_step(
    state: &SegmentState,
    k: &BigUint,
    epsilon: &Rational,
) -> Result<ApproximationStep> {
    let rho = state.rho;
    if rho < 2 {
        return Err(Error::precondition("rho must be at least 2"));
    }
    if Rational::new(1.into(), rho.into()) >= *epsilon {
        return Err(Error::precondition(format!("1/rho = 1/{rho} is not below epsilon = {epsilon}")));
    }
    let lead = Rational::new(((rho + 1) * (rho + 1)).into(), rat_uint(&state.h_j).to_integer());
    if lead >= *epsilon {
        return Err(Error::precondition(format!(
            "(rho + 1)^2 / h_j = {lead} is not below epsilon = {epsilon}"
        )));
    }
    if k < &state.h_j {
        return Err(Error::precondition(format!("k = {k} is too small for this stage")));
    }
    let hs = state.heights_until(k);
    // hs[d] = h_{j+d}; the last entry is the first height above k.
    let d = hs.len() - 2;
    let cap = &state.h_j * BigUint::from(rho + 1).pow(d as u32);
    if hs[d + 1] >= cap {
        return Err(Error::precondition(format!(
            "k = {k} is too small for this stage: h_(n+1) = {} is not below (rho+1)^(n-j) h_j = {cap}",
            hs[d + 1]
        )));
    }
    let n = state.j + d;
    if d == 0 {
        // k = h_j exactly is the only admissible value on an empty band.
        let pad = k - &state.h_j;
        return Ok(ApproximationStep {
            n,
            mask: BinaryMask::zeros(state.j, 0),
            cuts: vec![],
            heights: vec![state.h_j.clone()],
            height: state.h_j.clone(),
            pad_proportion: Rational::new(rat_uint(&pad).to_integer(), rat_uint(&state.h_j).to_integer()),
            pad,
        });
    }
    // Local indexing: local column 1 is global column j.
    let local = CutVector::constant(rho, d + 1)?;
    let out = height_mask(&local, &state.h_j, 1, d + 1, k)?;
    let mask = BinaryMask {
        start: state.j,
        bits: out.mask.bits.clone(),
    };
    let cuts: Vec<u64> = out.mask.bits.iter().map(|&b| rho + u64::from(b)).collect();
    let heights = all_heights(&CutVector::new(cuts.clone())?, &state.h_j);
    let pad = out.residual.clone();
    let pad_proportion = Rational::new(rat_uint(&pad).to_integer(), rat_uint(&out.height).to_integer());
    let two_over_rho = Rational::new(2.into(), rho.into());
    if pad_proportion >= two_over_rho {
        return Err(Error::Invariant(format!(
            "pad proportion {pad_proportion} is not below 2/rho"
        )));
    }
    Ok(ApproximationStep {
        n,
        mask,
        cuts,
        heights,
        height: out.height,
        pad,
        pad_proportion,
    })
}

/// `H_{i+1}(r + e_i) - H_{i+1}(r) = h_i + r_i`, which is below `(1/r_i + 1/h_i) h_{i+1}`.
pub fn single_flip_gap(r: &CutVector, h1: &BigUint, i: usize) -> Result<(BigUint, Rational)> {
    let hs = all_heights(r, h1);
    let ri = r.get(i);
    let gap = &hs[i - 1] + ri;
    let bound = (Rational::new(1.into(), ri.into()) + Rational::new(BigUint::one().into(), rat_uint(&hs[i - 1]).to_integer()))
        * rat_uint(&hs[i]);
    Ok((gap, bound))
}
