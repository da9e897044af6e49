use num_complex::Complex;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use super::measure::{fourier_coefficient, SpectralMeasure};
use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};

/// Relative size below which negative circulant eigenvalues are clipped to zero.
pub const REPAIR_TOLERANCE: f64 = 1e-12;

/// `C(t)` for `0 <= t <= max_lag`; `C(-t) = C(t)` since coefficients are real.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovarianceSequence {
    values: Vec<Rational>,
}

impl CovarianceSequence {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        match values.first() {
            None => Err(Error::invalid("a covariance needs C(0)")),
            Some(c0) if !c0.is_one() => Err(Error::invalid(format!("C(0) = {c0}, expected 1"))),
            Some(_) => Ok(CovarianceSequence { values }),
        }
    }

    /// Unit variance, no correlation.
    pub fn white_noise(max_lag: usize) -> Self {
        let mut values = vec![Rational::zero(); max_lag + 1];
        values[0] = Rational::one();
        CovarianceSequence { values }
    }

    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    /// `C(t)`; zero past the stored lags.
    pub fn get(&self, t: i64) -> Rational {
        self.values.get(t.unsigned_abs() as usize).cloned().unwrap_or_default()
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Cholesky test of the `size x size` Toeplitz matrix `[C(s - t)]`.
    pub fn toeplitz_psd(&self, size: usize) -> bool {
        let c: Vec<f64> = (0..size).map(|t| to_f64(&self.get(t as i64))).collect();
        let mut l = vec![0.0f64; size * size];
        for i in 0..size {
            for j in 0..=i {
                let mut s = c[i - j];
                for k in 0..j {
                    s -= l[i * size + k] * l[j * size + k];
                }
                if i == j {
                    if s < -REPAIR_TOLERANCE {
                        return false;
                    }
                    l[i * size + i] = s.max(0.0).sqrt();
                } else {
                    let d = l[j * size + j];
                    if d > 0.0 {
                        l[i * size + j] = s / d;
                    } else if s.abs() > REPAIR_TOLERANCE {
                        // A zero pivot with a nonzero entry below it.
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// `C(t) = sigma^(t)` for `0 <= t <= max_lag`. Needs real coefficients.
pub fn gaussian_covariance(sigma: &SpectralMeasure, max_lag: usize) -> Result<CovarianceSequence> {
    if !sigma.is_real() {
        return Err(Error::precondition("a real covariance needs real coefficients"));
    }
    let values = (0..=max_lag as i64).map(|t| fourier_coefficient(sigma, t).re).collect();
    CovarianceSequence::new(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSample {
    pub values: Vec<f64>,
    /// Total magnitude of the clipped negative eigenvalues.
    pub repair: f64,
}

/// Stationary Gaussian sequence with covariance `cov`, by circulant embedding.
///
/// The first row `C(0), .., C(n-1), C(n-2), .., C(1)` of a `2(n-1)`-circulant is
/// diagonalized by an FFT; its eigenvalues must be nonnegative up to `REPAIR_TOLERANCE`.
pub fn gaussian_sample(cov: &CovarianceSequence, length: usize, seed: u64) -> Result<GaussianSample> {
    if length == 0 {
        return Ok(GaussianSample { values: Vec::new(), repair: 0.0 });
    }
    if length > cov.max_lag() + 1 {
        return Err(Error::precondition(format!(
            "length {length} needs lags up to {}, the covariance stops at {}",
            length - 1,
            cov.max_lag()
        )));
    }
    let size = (2 * (length - 1)).max(1);
    let mut row: Vec<Complex<f64>> = (0..size)
        .map(|i| {
            let t = if i < length { i } else { size - i };
            Complex::new(to_f64(&cov.get(t as i64)), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut row);
    let scale = row.iter().map(|z| z.re.abs()).fold(0.0, f64::max).max(1.0);
    let mut repair = 0.0;
    let mut roots = Vec::with_capacity(size);
    for z in &row {
        let lambda = z.re;
        if lambda < 0.0 {
            if -lambda > REPAIR_TOLERANCE * scale {
                return Err(Error::precondition(format!(
                    "circulant embedding has eigenvalue {lambda:e}; not nonnegative definite"
                )));
            }
            repair += -lambda;
        }
        roots.push((lambda.max(0.0) / size as f64).sqrt());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex<f64>> = roots
        .iter()
        .map(|&r| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            Complex::new(a, b) * r
        })
        .collect();
    planner.plan_fft_forward(size).process(&mut buf);
    Ok(GaussianSample {
        values: buf[..length].iter().map(|z| z.re).collect(),
        repair,
    })
}

/// `(1 / (N - t)) sum_i x_i x_{i+t}` for a zero-mean sample.
pub fn empirical_covariance(sample: &[f64], t: usize) -> Option<f64> {
    if t >= sample.len() {
        return None;
    }
    let n = sample.len() - t;
    Some(sample[..n].iter().zip(&sample[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
}

/// Bartlett's large-sample standard error of the lag-`t` sample covariance of `n`
/// points of a zero-mean Gaussian sequence:
/// `var = (1/n) sum_k (C(k)^2 + C(k + t) C(k - t))`, summed over the stored lags.
pub fn bartlett_standard_error(cov: &CovarianceSequence, t: i64, n: usize) -> f64 {
    let reach = cov.max_lag() as i64;
    let c = |k: i64| to_f64(&cov.get(k));
    let mut var = 0.0;
    for k in -reach..=reach {
        let ck = c(k);
        let cross = c(k + t) * c(k - t);
        if ck != 0.0 || cross != 0.0 {
            var += ck * ck + cross;
        }
    }
    (var.max(0.0) / n as f64).sqrt()
}
