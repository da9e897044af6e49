//! Python bindings. Plans, reports and index sets cross the boundary as TOML
//! text; exact values come back as `fractions.Fraction`.

use pyo3::prelude::*;

#[pymodule]
mod rigidmix_py {
    use pyo3::exceptions::{PyMemoryError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyAny;

    use rigidmix::analyzer::{sweep, EmpiricalEstimator, EstimatorConfig};
    use rigidmix::builder::{build_half_rigid, build_mixing_staircase, EpsilonSchedule, FlowConfig, GrowthPolicy};
    use rigidmix::exact::{format_rational, parse_rational, Rational};
    use rigidmix::heights::{height_mask as mask, CutVector};
    use rigidmix::sets::{is_thick_in_window as thick, DissociatedSequence, IndexSet, Window};
    use rigidmix::spectral::{fourier_coefficient as coefficient, gaussian_covariance, gaussian_sample as sample, SpectralMeasure};
    use rigidmix::tower::{correlation, realize_with_budget, ConstructionPlan, LevelSet, TowerRealization, DEFAULT_HEIGHT_BUDGET};

    fn err(e: rigidmix::Error) -> PyErr {
        match e {
            rigidmix::Error::Budget { .. } => PyMemoryError::new_err(e.to_string()),
            _ => PyValueError::new_err(e.to_string()),
        }
    }

    fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
        py.import("fractions")?.getattr("Fraction")?.call1((format_rational(r),))
    }

    fn rational(s: &str) -> PyResult<Rational> {
        parse_rational(s).map_err(err)
    }

    fn window(lo: i64, hi: i64) -> PyResult<Window> {
        Window::new(lo, hi).map_err(err)
    }

    fn index_set(text: &str) -> PyResult<IndexSet> {
        IndexSet::from_toml(text).map_err(err)
    }

    fn levels(stage: usize, runs: Vec<(u64, u64)>) -> LevelSet {
        LevelSet::from_runs(stage, runs)
    }

    fn measure(freqs: Vec<i64>, coeffs: Vec<String>) -> PyResult<SpectralMeasure> {
        let d = DissociatedSequence::new(freqs).map_err(err)?;
        let c = coeffs.iter().map(|s| rational(s)).collect::<PyResult<Vec<_>>>()?;
        SpectralMeasure::real(d, c).map_err(err)
    }

    /// Plan TOML of the staircase with `r_n = n + offset`.
    #[pyfunction]
    #[pyo3(signature = (depth, offset = 1))]
    fn staircase_plan(depth: usize, offset: u64) -> PyResult<String> {
        let plan = build_mixing_staircase(1, depth, &GrowthPolicy::Linear { offset }).map_err(err)?;
        plan.to_toml().map_err(err)
    }

    /// Column heights of a plan, as Python ints.
    #[pyfunction]
    fn plan_heights(plan: &str) -> PyResult<Vec<num_bigint::BigUint>> {
        Ok(ConstructionPlan::from_toml(plan).map_err(err)?.heights())
    }

    /// Half-rigid build against `M`; returns `(plan_toml, report_toml)`.
    #[pyfunction]
    #[pyo3(signature = (m, segments, first = "9/10", ratio = "97/100", bound = "100", q_cap = 64))]
    fn half_rigid_plan(m: &str, segments: usize, first: &str, ratio: &str, bound: &str, q_cap: u64) -> PyResult<(String, String)> {
        let eps = EpsilonSchedule::geometric(rational(first)?, rational(ratio)?, rational(bound)?).map_err(err)?;
        let est = EmpiricalEstimator::new(EstimatorConfig { q_cap, ..EstimatorConfig::default() });
        let (plan, report) = build_half_rigid(&index_set(m)?, &eps, segments, &est, &FlowConfig::default()).map_err(err)?;
        Ok((plan.to_toml().map_err(err)?, report.to_toml().map_err(err)?))
    }

    #[pyclass(frozen)]
    struct Realization {
        inner: TowerRealization,
    }

    #[pymethods]
    impl Realization {
        #[new]
        #[pyo3(signature = (plan, depth = None, budget = DEFAULT_HEIGHT_BUDGET))]
        fn new(plan: &str, depth: Option<usize>, budget: u64) -> PyResult<Self> {
            let plan = ConstructionPlan::from_toml(plan).map_err(err)?;
            let depth = depth.unwrap_or(plan.len());
            Ok(Realization { inner: realize_with_budget(&plan, depth, budget).map_err(err)? })
        }

        #[getter]
        fn height(&self) -> u64 {
            self.inner.height()
        }

        #[getter]
        fn heights(&self) -> Vec<u64> {
            self.inner.heights().to_vec()
        }

        /// `(value, error_bound)` of `mu(T^n A ∩ B)`; the truth lies in `[value, value + error_bound]`.
        fn correlation<'py>(
            &self,
            py: Python<'py>,
            n: i64,
            a: (usize, Vec<(u64, u64)>),
            b: (usize, Vec<(u64, u64)>),
        ) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
            let c = correlation(&self.inner, n, &levels(a.0, a.1), &levels(b.0, b.1)).map_err(err)?;
            Ok((fraction(py, &c.value)?, fraction(py, &c.error_bound)?))
        }

        /// `[(n, value, error_bound)]` for `n` in `M ∩ [lo, hi]`, clipped to the height.
        fn sweep<'py>(
            &self,
            py: Python<'py>,
            m: &str,
            lo: i64,
            hi: i64,
            a: (usize, Vec<(u64, u64)>),
            b: (usize, Vec<(u64, u64)>),
        ) -> PyResult<Vec<(i64, Bound<'py, PyAny>, Bound<'py, PyAny>)>> {
            let m = index_set(m)?;
            let (a, b) = (levels(a.0, a.1), levels(b.0, b.1));
            let report = py.detach(|| sweep(&self.inner, &a, &b, &m, Window::new(lo, hi)?)).map_err(err)?;
            report
                .entries
                .iter()
                .map(|c| Ok((c.n, fraction(py, &c.value)?, fraction(py, &c.error_bound)?)))
                .collect()
        }
    }

    /// Exact `sigma^(m)` of the real Riesz product with the given frequencies and coefficients.
    #[pyfunction]
    fn fourier_coefficient<'py>(py: Python<'py>, freqs: Vec<i64>, coeffs: Vec<String>, m: i64) -> PyResult<Bound<'py, PyAny>> {
        let sigma = measure(freqs, coeffs)?;
        fraction(py, &coefficient(&sigma, m).re)
    }

    #[pyfunction]
    fn riesz_support(freqs: Vec<i64>, lo: i64, hi: i64) -> PyResult<Vec<i64>> {
        let d = DissociatedSequence::new(freqs).map_err(err)?;
        rigidmix::sets::riesz_support(&d, None, 0, window(lo, hi)?).map_err(err)
    }

    #[pyfunction]
    fn gaussian_sample(freqs: Vec<i64>, coeffs: Vec<String>, length: usize, seed: u64) -> PyResult<Vec<f64>> {
        if length == 0 {
            return Ok(Vec::new());
        }
        let sigma = measure(freqs, coeffs)?;
        let cov = gaussian_covariance(&sigma, length - 1).map_err(err)?;
        Ok(sample(&cov, length, seed).map_err(err)?.values)
    }

    /// `(bits, height)` of the height-approximation mask.
    #[pyfunction]
    fn height_mask(r: Vec<u64>, h1: u64, j: usize, n: usize, k: u64) -> PyResult<(Vec<bool>, num_bigint::BigUint)> {
        let r = CutVector::new(r).map_err(err)?;
        let out = mask(&r, &h1.into(), j, n, &k.into()).map_err(err)?;
        Ok((out.mask.bits, out.height))
    }

    /// Smallest center of a run of radius `radius` inside `M ∩ [lo, hi]`, if any.
    #[pyfunction]
    fn is_thick_in_window(m: &str, lo: i64, hi: i64, radius: u64) -> PyResult<Option<i64>> {
        Ok(thick(&index_set(m)?, window(lo, hi)?, radius).map_err(err)?.map(|w| w.center))
    }
}
