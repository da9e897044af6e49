use std::f64::consts::PI;

use num_complex::Complex;
use num_traits::{One, Zero};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, rat, to_f64, Rational};
use crate::sets::{riesz_support, DissociatedSequence, IndexSet, Window};

pub type ComplexRational = Complex<Rational>;

/// Largest factor count the numeric integration oracle accepts.
pub const ORACLE_MAX_FACTORS: usize = 4;

/// Classical Riesz product `prod_j (1 + 2 Re(c_j z^{n_j}))` on the circle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct SpectralMeasure {
    freqs: DissociatedSequence,
    coeffs: Vec<ComplexRational>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    freqs: Vec<i64>,
    coeffs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    imag: Option<Vec<String>>,
}

impl TryFrom<MeasureDoc> for SpectralMeasure {
    type Error = Error;
    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let re = doc.coeffs.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
        let im = match doc.imag {
            Some(v) if v.len() != re.len() => {
                return Err(Error::invalid(format!("{} imaginary parts for {} coefficients", v.len(), re.len())))
            }
            Some(v) => v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?,
            None => vec![Rational::zero(); re.len()],
        };
        let coeffs = re.into_iter().zip(im).map(|(r, i)| Complex::new(r, i)).collect();
        SpectralMeasure::new(DissociatedSequence::new(doc.freqs)?, coeffs)
    }
}

impl From<SpectralMeasure> for MeasureDoc {
    fn from(m: SpectralMeasure) -> Self {
        let imag = m
            .coeffs
            .iter()
            .any(|c| !c.im.is_zero())
            .then(|| m.coeffs.iter().map(|c| format_rational(&c.im)).collect());
        MeasureDoc {
            freqs: m.freqs.terms().to_vec(),
            coeffs: m.coeffs.iter().map(|c| format_rational(&c.re)).collect(),
            imag,
        }
    }
}

impl SpectralMeasure {
    pub fn new(freqs: DissociatedSequence, coeffs: Vec<ComplexRational>) -> Result<Self> {
        if freqs.len() != coeffs.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} coefficients",
                freqs.len(),
                coeffs.len()
            )));
        }
        let quarter = rat(1, 4);
        for (j, c) in coeffs.iter().enumerate() {
            if c.norm_sqr() > quarter {
                return Err(Error::invalid(format!("|c_{j}| exceeds 1/2")));
            }
        }
        Ok(SpectralMeasure { freqs, coeffs })
    }

    /// Real coefficients.
    pub fn real(freqs: DissociatedSequence, coeffs: Vec<Rational>) -> Result<Self> {
        Self::new(freqs, coeffs.into_iter().map(|c| Complex::new(c, Rational::zero())).collect())
    }

    pub fn freqs(&self) -> &DissociatedSequence {
        &self.freqs
    }

    pub fn coeffs(&self) -> &[ComplexRational] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.is_zero())
    }

    /// The product of the first `k` factors.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k > self.coeffs.len() {
            return Err(Error::OutOfRange { index: k, limit: self.coeffs.len() });
        }
        Ok(SpectralMeasure {
            freqs: DissociatedSequence::new(self.freqs.terms()[..k].to_vec())?,
            coeffs: self.coeffs[..k].to_vec(),
        })
    }

    /// Number of nonzero signs in the decomposition of `m`, if `m` is a signed sum.
    pub fn word_length(&self, m: i64) -> Option<usize> {
        self.freqs.decompose(m).map(|e| e.iter().filter(|&&s| s != 0).count())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// `sigma^(m)`: the product of `c_j` over `eps_j = 1` and `conj(c_j)` over
/// `eps_j = -1` in the unique decomposition `m = sum eps_j n_j`, else 0.
pub fn fourier_coefficient(sigma: &SpectralMeasure, m: i64) -> ComplexRational {
    let Some(eps) = sigma.freqs.decompose(m) else {
        return Complex::zero();
    };
    let mut out = Complex::new(Rational::one(), Rational::zero());
    for (e, c) in eps.iter().zip(&sigma.coeffs) {
        match e {
            1 => out = out * c.clone(),
            -1 => out = out * c.conj(),
            _ => {}
        }
    }
    out
}

/// Numeric value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: Complex<f64>,
    pub error_bound: f64,
}

fn check_oracle(sigma: &SpectralMeasure) -> Result<()> {
    if sigma.coeffs.len() > ORACLE_MAX_FACTORS {
        return Err(Error::precondition(format!(
            "the integration oracle takes at most {ORACLE_MAX_FACTORS} factors, got {}",
            sigma.coeffs.len()
        )));
    }
    Ok(())
}

/// Density `prod_j (1 + c_j z^{n_j} + conj(c_j) z^{-n_j})` at the grid point `z = e^{2 pi i k / g}`.
fn density(sigma: &SpectralMeasure, k: u64, g: u64) -> Complex<f64> {
    let mut p = Complex::new(1.0, 0.0);
    for (&n, c) in sigma.freqs.terms().iter().zip(&sigma.coeffs) {
        let c = Complex::new(to_f64(&c.re), to_f64(&c.im));
        let z = unit(k as u128 * n as u128, g);
        p *= Complex::new(1.0, 0.0) + c * z + c.conj() * z.conj();
    }
    p
}

/// `e^{2 pi i e / g}` with the exponent reduced exactly first.
fn unit(e: u128, g: u64) -> Complex<f64> {
    Complex::from_polar(1.0, 2.0 * PI * (e % g as u128) as f64 / g as f64)
}

/// Per-sample rounding of the density, times `1 + steps` accumulation stages.
fn rounding_bound(sigma: &SpectralMeasure, steps: f64) -> f64 {
    let sup: f64 = sigma.coeffs.iter().map(|c| 1.0 + 2.0 * to_f64(&c.norm_sqr()).sqrt()).product();
    16.0 * f64::EPSILON * sup * (sigma.coeffs.len() as f64 + 1.0 + steps)
}

/// `int z^{-m} dsigma` on the uniform grid of `2 sum n_j + 2|m| + 1` points, which
/// integrates the trigonometric polynomial exactly up to rounding. Compensated sum.
pub fn integration_oracle(sigma: &SpectralMeasure, m: i64) -> Result<OracleValue> {
    check_oracle(sigma)?;
    let g = (2 * sigma.freqs.total() + 2 * m.abs() + 1) as u64;
    let e = (-(m as i128)).rem_euclid(g as i128) as u128;
    let mut acc = Complex::new(0.0, 0.0);
    let mut carry = Complex::new(0.0, 0.0);
    for k in 0..g {
        let term = density(sigma, k, g) * unit(e * k as u128, g) - carry;
        let next = acc + term;
        carry = (next - acc) - term;
        acc = next;
    }
    Ok(OracleValue {
        value: acc / g as f64,
        error_bound: rounding_bound(sigma, 2.0),
    })
}

/// All coefficients for `|m| <= reach` from one FFT of the density on a grid
/// larger than `sum n_j + reach`, so no coefficient aliases onto another in range.
pub fn integration_table(sigma: &SpectralMeasure, reach: u64) -> Result<Vec<(i64, OracleValue)>> {
    check_oracle(sigma)?;
    let g = (sigma.freqs.total() as u64 + reach + 1).next_power_of_two() * 2;
    let mut buf: Vec<Complex<f64>> = (0..g).map(|k| density(sigma, k, g)).collect();
    // The forward transform gives sum_k p(z_k) z_k^{-m} = g * coefficient of z^m.
    FftPlanner::new().plan_fft_forward(g as usize).process(&mut buf);
    let bound = rounding_bound(sigma, (g as f64).log2());
    let reach = reach as i64;
    Ok((-reach..=reach)
        .map(|m| {
            let idx = m.rem_euclid(g as i64) as usize;
            (m, OracleValue { value: buf[idx] / g as f64, error_bound: bound })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportHit {
    pub m: i64,
    pub value: String,
    pub word_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralVerdict {
    pub window: [i64; 2],
    /// `m` in `M ∩ window` with `sigma^(m) != 0`.
    pub hits: Vec<SupportHit>,
    /// Frequencies `n_j` in the window, where `sigma^(n_j) = c_j` does not decay.
    pub witnesses: Vec<SupportHit>,
    pub vacuous: bool,
    /// Every hit obeys `|sigma^(m)| <= 2^{-L(m)}` and none is a single frequency.
    pub consistent: bool,
}

/// Exact scan of the support of `sigma^` along `M` inside `window`.
pub fn mixing_verdict_along(sigma: &SpectralMeasure, m: &IndexSet, window: Window) -> Result<SpectralVerdict> {
    let support = riesz_support(&sigma.freqs, None, 0, window)?;
    let mut hits = Vec::new();
    for &x in &support {
        if m.contains(x)? {
            hits.push(hit(sigma, x));
        }
    }
    let witnesses = sigma
        .freqs
        .terms()
        .iter()
        .filter(|&&n| window.contains(n))
        .map(|&n| hit(sigma, n))
        .collect();
    let consistent = hits.iter().all(|h| {
        let v = fourier_coefficient(sigma, h.m).norm_sqr();
        let bound = rat(1, 1i64 << (2 * h.word_length.min(30)));
        h.word_length > 1 && v <= bound
    });
    Ok(SpectralVerdict {
        window: [window.lo, window.hi],
        vacuous: hits.is_empty(),
        hits,
        witnesses,
        consistent,
    })
}

fn hit(sigma: &SpectralMeasure, m: i64) -> SupportHit {
    SupportHit {
        m,
        value: format_complex(&fourier_coefficient(sigma, m)),
        word_length: sigma.word_length(m).unwrap_or(0),
    }
}

pub fn format_complex(c: &ComplexRational) -> String {
    if c.im.is_zero() {
        format_rational(&c.re)
    } else {
        format!("{} + {}i", format_rational(&c.re), format_rational(&c.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma(c: (i64, i64)) -> SpectralMeasure {
        SpectralMeasure::real(DissociatedSequence::new(vec![5, 125]).unwrap(), vec![rat(c.0, c.1); 2]).unwrap()
    }

    #[test]
    fn coefficients_of_two_factors() {
        let s = sigma((1, 2));
        assert_eq!(fourier_coefficient(&s, 5), Complex::new(rat(1, 2), rat(0, 1)));
        assert_eq!(fourier_coefficient(&s, 130), Complex::new(rat(1, 4), rat(0, 1)));
        assert!(fourier_coefficient(&s, 7).is_zero());
        assert!(fourier_coefficient(&s, 0).is_one());
        assert_eq!(fourier_coefficient(&s, -5), Complex::new(rat(1, 2), rat(0, 1)));
    }

    #[test]
    fn negative_times_conjugate() {
        let c = Complex::new(rat(1, 4), rat(1, 3));
        let s = SpectralMeasure::new(DissociatedSequence::new(vec![3]).unwrap(), vec![c.clone()]).unwrap();
        assert_eq!(fourier_coefficient(&s, 3), c);
        assert_eq!(fourier_coefficient(&s, -3), c.conj());
    }

    #[test]
    fn oversized_coefficients_are_rejected() {
        let d = DissociatedSequence::new(vec![5]).unwrap();
        assert!(SpectralMeasure::real(d, vec![rat(3, 5)]).is_err());
    }

    #[test]
    fn oracle_matches_small_cases() {
        let v = integration_oracle(&sigma((1, 2)), 130).unwrap();
        assert!((v.value.re - 0.25).abs() < 1e-10 && v.value.im.abs() < 1e-10);
        let one = SpectralMeasure::real(DissociatedSequence::new(vec![5]).unwrap(), vec![rat(1, 3)]).unwrap();
        let v = integration_oracle(&one, 5).unwrap();
        assert!((v.value.re - 1.0 / 3.0).abs() < 1e-10);
        let v = integration_oracle(&one, 11).unwrap();
        assert!(v.value.norm() < 1e-10);
    }

    #[test]
    fn document_round_trip() {
        let s = sigma((1, 2));
        let text = s.to_toml().unwrap();
        assert_eq!(SpectralMeasure::from_toml(&text).unwrap(), s);
        assert_eq!(SpectralMeasure::from_toml(&text).unwrap().to_toml().unwrap(), text);
    }

    #[test]
    fn frequencies_along_themselves_are_witnesses() {
        let s = sigma((1, 2));
        let m = IndexSet::explicit([5, 125]);
        let v = mixing_verdict_along(&s, &m, Window::new(0, 200).unwrap()).unwrap();
        assert_eq!(v.hits.len(), 2);
        assert!(!v.consistent);
        assert_eq!(v.witnesses.iter().map(|h| h.value.as_str()).collect::<Vec<_>>(), ["1/2", "1/2"]);
        let v = mixing_verdict_along(&s, &IndexSet::empty(), Window::new(0, 200).unwrap()).unwrap();
        assert!(v.vacuous && v.consistent);
    }
}
