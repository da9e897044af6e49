use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::index_set::IndexSet;
use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};

/// A rational stand-in for an irrational number: the true value lies within
/// `radius` of `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrrationalApprox {
    pub value: Rational,
    pub radius: Rational,
}

impl IrrationalApprox {
    pub fn new(value: Rational, radius: Rational) -> Result<Self> {
        if radius.is_negative() {
            return Err(Error::invalid("approximation radius must be nonnegative"));
        }
        Ok(IrrationalApprox { value, radius })
    }

    fn dyadic(numer: BigUint, bits: u32) -> Self {
        let den = BigInt::one() << bits;
        IrrationalApprox {
            value: Rational::new(numer.into(), den.clone()),
            radius: Rational::new(BigInt::one(), den),
        }
    }

    /// `sqrt(2)` truncated to `bits` binary digits.
    pub fn sqrt2(bits: u32) -> Self {
        let scaled = (BigUint::from(2u32) << (2 * bits)).sqrt();
        Self::dyadic(scaled, bits)
    }

    /// `(sqrt(5) - 1) / 2` truncated to `bits` binary digits.
    pub fn golden_conjugate(bits: u32) -> Self {
        let root = (BigUint::from(5u32) << (2 * bits + 2)).sqrt();
        let numer = (root - (BigUint::one() << (bits + 1))) >> 2u32;
        Self::dyadic(numer, bits)
    }
}

/// Star discrepancy of `{s_i alpha mod 1}` with a bound on how far it can be
/// from the value for the true irrational.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub count: usize,
    pub value: f64,
    pub approximation_error: f64,
}

impl Discrepancy {
    pub fn upper(&self) -> f64 {
        self.value + self.approximation_error
    }
}

/// Star discrepancy of the first `count` nonnegative members of `s` times `alpha`, mod 1.
pub fn equidistribution_discrepancy(
    s: &IndexSet,
    alpha: &IrrationalApprox,
    count: usize,
) -> Result<Discrepancy> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let terms = s.first_nonnegative(count)?;
    let (p, q) = (alpha.value.numer(), alpha.value.denom());
    let mut xs: Vec<f64> = Vec::with_capacity(count);
    for &t in &terms {
        let residue = (BigInt::from(t) * p).mod_floor(q);
        xs.push(to_f64(&Rational::new(residue, q.clone())));
    }
    xs.sort_by(f64::total_cmp);
    let n = count as f64;
    let value = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    // Each point moves by at most eta = max s_i * radius; a point within eta of
    // an endpoint may also wrap around.
    let max_term = terms.iter().copied().max().unwrap_or(0);
    let eta = to_f64(&(&alpha.radius * Rational::from_integer(max_term.into()))) + 4.0 * f64::EPSILON;
    let near_ends = xs.iter().filter(|&&x| x < eta || x > 1.0 - eta).count();
    let approximation_error = if alpha.radius.is_zero() {
        4.0 * f64::EPSILON
    } else {
        eta + near_ends as f64 / n
    };
    Ok(Discrepancy {
        count,
        value: value.clamp(0.5 / n, 1.0),
        approximation_error: approximation_error.min(1.0),
    })
}
