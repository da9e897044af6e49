use num_complex::Complex;
use num_traits::Zero;
use proptest::prelude::*;
use rigidmix::exact::{rat, Rational};
use rigidmix::sets::{DissociatedSequence, IndexSet, Window};
use rigidmix::spectral::*;

fn complex_measure() -> SpectralMeasure {
    let d = DissociatedSequence::new(vec![3, 10, 31]).unwrap();
    let coeffs = vec![
        Complex::new(rat(1, 4), rat(1, 4)),
        Complex::new(rat(0, 1), rat(-1, 3)),
        Complex::new(rat(1, 2), Rational::zero()),
    ];
    SpectralMeasure::new(d, coeffs).unwrap()
}

proptest! {
    #[test]
    fn coefficients_are_hermitian(m in -200i64..200) {
        let sigma = complex_measure();
        prop_assert_eq!(fourier_coefficient(&sigma, -m), fourier_coefficient(&sigma, m).conj());
    }

    #[test]
    fn oracle_matches_complex_coefficients(m in -100i64..100) {
        let sigma = complex_measure();
        let exact = fourier_coefficient(&sigma, m);
        let o = integration_oracle(&sigma, m).unwrap();
        let diff = (o.value - Complex::new(rigidmix::exact::to_f64(&exact.re), rigidmix::exact::to_f64(&exact.im))).norm();
        prop_assert!(diff <= o.error_bound.max(1e-12), "m={} diff={}", m, diff);
    }
}

#[test]
fn oversized_coefficients_are_rejected() {
    let d = DissociatedSequence::new(vec![1, 3]).unwrap();
    assert!(SpectralMeasure::real(d.clone(), vec![rat(1, 2), rat(3, 5)]).is_err());
    assert!(SpectralMeasure::new(d, vec![Complex::new(rat(2, 5), rat(2, 5)); 2]).is_err());
}

#[test]
fn measures_round_trip_through_toml() {
    let sigma = complex_measure();
    assert_eq!(SpectralMeasure::from_toml(&sigma.to_toml().unwrap()).unwrap(), sigma);
}

#[test]
fn verdict_separates_words_from_single_frequencies() {
    let d = DissociatedSequence::new(vec![5, 125]).unwrap();
    let sigma = SpectralMeasure::real(d, vec![rat(1, 2); 2]).unwrap();
    let w = Window::new(-200, 200).unwrap();
    let words = mixing_verdict_along(&sigma, &IndexSet::explicit([120, 130, 131]), w).unwrap();
    assert_eq!(words.hits.iter().map(|h| h.m).collect::<Vec<_>>(), vec![120, 130]);
    assert!(words.consistent && !words.vacuous);
    assert_eq!(words.witnesses.len(), 2);
    let single = mixing_verdict_along(&sigma, &IndexSet::explicit([5]), w).unwrap();
    assert!(!single.consistent);
    let none = mixing_verdict_along(&sigma, &IndexSet::Squares, Window::new(1, 100).unwrap()).unwrap();
    assert!(none.vacuous && none.consistent);
}

#[test]
fn sampler_rejects_short_covariances() {
    let cov = CovarianceSequence::white_noise(10);
    assert!(gaussian_sample(&cov, 12, 0).is_err());
    assert_eq!(gaussian_sample(&cov, 11, 0).unwrap().values.len(), 11);
}
