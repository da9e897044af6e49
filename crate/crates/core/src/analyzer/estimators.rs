use std::collections::BTreeMap;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::builder::{continuation_cut, HorizonEstimator};
use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};
use crate::tower::{realize_with_budget, ConstructionPlan, CorrelationKernel, CutStage, LevelSet};

/// Caps for [`EmpiricalEstimator`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorConfig {
    /// Largest progression step in the uniform Cesaro supremum.
    pub q_cap: u64,
    /// Atoms are this many contiguous blocks of the atom column (fewer if it is shorter).
    pub atom_cap: usize,
    /// Largest column the Cesaro scan will tabulate.
    pub uc_height_cap: u64,
    /// The mixing check continues the plan as a staircase until this height.
    pub extension_height_cap: u64,
    /// Continuation cuts follow `continuation_cut(_, _, extension_ratio)`.
    pub extension_ratio: u64,
    /// Correlations are verified for times up to the continued height over this divisor.
    pub window_divisor: u64,
    /// Geometric sample density: times grow by a factor `1 + 1/samples_per_octave`-ish.
    pub samples_per_octave: u64,
    pub table_limit: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            q_cap: 64,
            atom_cap: 3,
            uc_height_cap: 1 << 25,
            extension_height_cap: 1 << 30,
            extension_ratio: 64,
            window_divisor: 16,
            samples_per_octave: 48,
            table_limit: 1 << 22,
        }
    }
}

/// Estimates both horizons by direct computation on finite realizations.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalEstimator {
    pub config: EstimatorConfig,
}

impl EmpiricalEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        EmpiricalEstimator { config }
    }

    /// Contiguous blocks of column `stage`, at most `atom_cap` of them.
    fn atoms(&self, stage: usize, height: u64) -> Vec<LevelSet> {
        let k = (self.config.atom_cap.max(1) as u64).min(height);
        (0..k)
            .map(|i| LevelSet::range(stage, i * height / k, (i + 1) * height / k))
            .collect()
    }

    /// The plan followed by continuation stages up to the height cap.
    pub fn extend(&self, plan: &ConstructionPlan) -> ConstructionPlan {
        let mut ext = plan.clone();
        let cap = BigUint::from(self.config.extension_height_cap);
        let mut h = ext.heights().pop().expect("at least the initial column");
        let mut last = ext.stages.last().map_or(1, |s| s.cuts());
        loop {
            let mut r = continuation_cut(last, &h, self.config.extension_ratio);
            // Shrink the final cut so the column still fits under the cap.
            while r > last && CutStage::staircase(r).next_height(&h, &BigUint::default()) > cap {
                r -= 1;
            }
            let stage = CutStage::staircase(r);
            let next = stage.next_height(&h, &BigUint::default());
            if r <= last || next > cap {
                break;
            }
            ext.push(stage);
            h = next;
            last = r;
        }
        ext
    }

    /// Sample times in `1..=window`: every time up to 128, a geometric grid,
    /// and a few times on either side of every column height.
    fn sample_times(&self, window: u64, heights: &[u64]) -> Vec<u64> {
        let mut ts: Vec<u64> = (1..=window.min(128)).collect();
        let mut t = 128u64;
        let step = self.config.samples_per_octave.max(1);
        while t < window {
            t += (t / step).max(1);
            ts.push(t.min(window));
        }
        for &h in heights {
            for d in 0..=6u64 {
                let x = (h + d).saturating_sub(3);
                if (1..=window).contains(&x) {
                    ts.push(x);
                }
            }
        }
        ts.sort_unstable();
        ts.dedup();
        ts
    }
}

impl EmpiricalEstimator {
    /// Sampled times `t` with the worst relative deviation
    /// `max |mu(T^t A ∩ B) - mu(A) mu(B)| / (mu(A) mu(B))` over atom pairs, where the
    /// correlation ranges over its certified interval and measures are normalized
    /// by the realized mass of the continued plan.
    pub fn mixing_profile(&self, plan: &ConstructionPlan, atom_stage: usize) -> Result<Vec<(u64, f64)>> {
        let top = plan.len();
        if atom_stage > top {
            return Err(Error::OutOfRange { index: atom_stage, limit: top });
        }
        let ext = self.extend(plan);
        let real = realize_with_budget(&ext, ext.len(), self.config.extension_height_cap)?;
        let window = real.height() / self.config.window_divisor.max(1);
        let times = self.sample_times(window, real.heights());
        let atoms = self.atoms(atom_stage, real.height_at(atom_stage));
        let total = to_f64(real.total_measure());
        let mut worst = vec![0.0f64; times.len()];
        for a in &atoms {
            for b in &atoms {
                let kernel = CorrelationKernel::with_table_limit(&real, a, b, self.config.table_limit)?;
                let p = to_f64(&kernel.measure_a()) * to_f64(&kernel.measure_b()) / (total * total);
                let row: Vec<f64> = times
                    .par_iter()
                    .map(|&t| {
                        let c = kernel.correlation(t as i64)?;
                        let lo = to_f64(&c.value) / total;
                        let hi = lo + to_f64(&c.error_bound) / total;
                        Ok((lo - p).abs().max((hi - p).abs()) / p)
                    })
                    .collect::<Result<_>>()?;
                for (w, d) in worst.iter_mut().zip(row) {
                    *w = w.max(d);
                }
            }
        }
        Ok(times.into_iter().zip(worst).collect())
    }
}

impl HorizonEstimator for EmpiricalEstimator {
    fn uniform_cesaro(&self, plan: &ConstructionPlan, atom_stage: usize, eps: &Rational) -> Result<Option<u64>> {
        let top = plan.len();
        if atom_stage > top {
            return Err(Error::OutOfRange { index: atom_stage, limit: top });
        }
        let real = realize_with_budget(plan, top, self.config.uc_height_cap)?;
        let h = real.height();
        let atoms = self.atoms(atom_stage, real.height_at(atom_stage));
        // label[y] = atom of level y of the top column.
        let mut label = vec![u8::MAX; h as usize];
        for (i, a) in atoms.iter().enumerate() {
            for &(s, e) in real.refine(a, top)?.runs() {
                label[s as usize..e as usize].fill(i as u8);
            }
        }
        // The remainder (spacers added after the atom column) is one more atom.
        let remainder = atoms.len() as u8;
        for l in label.iter_mut().filter(|l| **l == u8::MAX) {
            *l = remainder;
        }
        let means: Vec<f64> = (0..=atoms.len())
            .map(|i| label.iter().filter(|&&l| l == i as u8).count() as f64 / h as f64)
            .collect();
        let eps = to_f64(eps);
        let q_cap = self.config.q_cap.max(1);
        let mut n = 1u64;
        while n * q_cap <= h / 2 {
            if cesaro_passes(&label, &means, n, q_cap, eps) {
                return Ok(Some(n));
            }
            n = (n + 1).max(n + n / 4);
        }
        Ok(None)
    }

    fn mixing(&self, plan: &ConstructionPlan, atom_stage: usize, eps: &Rational) -> Result<Option<u64>> {
        let profile = self.mixing_profile(plan, atom_stage)?;
        let eps = to_f64(eps);
        Ok(match profile.iter().rposition(|&(_, d)| d > eps) {
            None if profile.is_empty() => None,
            None => Some(0),
            Some(i) if i + 1 < profile.len() => Some(profile[i + 1].0),
            Some(_) => None,
        })
    }

    fn caps(&self) -> BTreeMap<String, String> {
        let c = &self.config;
        BTreeMap::from([
            ("q_cap".into(), c.q_cap.to_string()),
            ("atom_cap".into(), c.atom_cap.to_string()),
            ("uc_height_cap".into(), c.uc_height_cap.to_string()),
            ("extension_height_cap".into(), c.extension_height_cap.to_string()),
            ("extension_ratio".into(), c.extension_ratio.to_string()),
            ("window_divisor".into(), c.window_divisor.to_string()),
            ("samples_per_octave".into(), c.samples_per_octave.to_string()),
        ])
    }
}

/// Whether, for every atom, the mean over resolved levels of
/// `sup_{q <= q_cap} |(1/n) #{t < n : label[y - tq] = atom} - mean|` is at most `eps * mean`.
///
/// Level `y` is resolved for step `q` when `y - (n-1) q >= 0`; the backward orbit
/// stands in for the forward one since both have the same distribution.
fn cesaro_passes(label: &[u8], means: &[f64], n: u64, q_cap: u64, eps: f64) -> bool {
    let h = label.len();
    let n_us = n as usize;
    means.iter().enumerate().all(|(atom, &mean)| {
        if mean == 0.0 {
            return true;
        }
        let atom = atom as u8;
        let sup: Vec<f64> = (1..=q_cap as usize)
            .into_par_iter()
            .map(|q| {
                // prefix[y] = #{t >= 0 : y - tq >= 0, label[y - tq] = atom}
                let mut prefix = vec![0u32; h];
                for y in 0..h {
                    let below = if y >= q { prefix[y - q] } else { 0 };
                    prefix[y] = below + u32::from(label[y] == atom);
                }
                let span = (n_us - 1) * q;
                let mut dev = vec![f64::NAN; h];
                for y in span..h {
                    let before = if y >= span + q { prefix[y - span - q] } else { 0 };
                    let hits = prefix[y] - before;
                    dev[y] = (hits as f64 / n as f64 - mean).abs();
                }
                dev
            })
            .reduce(
                || vec![0.0; h],
                |mut x, y| {
                    for (a, b) in x.iter_mut().zip(y) {
                        // NAN marks unresolved; a level counts only once resolved for every q.
                        *a = if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) };
                    }
                    x
                },
            )
            .into_iter()
            .collect();
        let resolved: Vec<f64> = sup.into_iter().filter(|v| !v.is_nan()).collect();
        if resolved.is_empty() {
            return false;
        }
        resolved.iter().sum::<f64>() / resolved.len() as f64 <= eps * mean
    })
}
