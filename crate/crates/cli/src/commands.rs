use std::collections::BTreeMap;
use std::path::Path;

use rigidmix::analyzer::{k_bound_check, sweep, CorrelationSummary, EmpiricalEstimator, EstimatorConfig, KBoundVerdict};
use rigidmix::builder::*;
use rigidmix::exact::{format_rational, parse_rational, Rational};
use rigidmix::sets::{doubling_free_check, r_thick_witness, IndexSet, Window};
use rigidmix::spectral::*;
use rigidmix::tower::{realize_with_budget, ConstructionPlan, LevelSet, TowerRealization};
use serde::Serialize;

use crate::config::*;
use crate::output::OutputDir;
use crate::CliError;

/// What a command concluded; `negative` maps to exit code 1.
pub struct Outcome {
    pub negative: bool,
    pub message: String,
}

impl Outcome {
    fn ok(message: impl Into<String>) -> Self {
        Outcome { negative: false, message: message.into() }
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

fn rational(field: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn window(field: &str, [lo, hi]: [i64; 2]) -> Result<Window, CliError> {
    Window::new(lo, hi).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn estimator(caps: &Caps) -> EmpiricalEstimator {
    EmpiricalEstimator::new(EstimatorConfig {
        q_cap: caps.q_cap,
        window_divisor: caps.l_window_divisor,
        ..EstimatorConfig::default()
    })
}

pub fn build(cfg: &RunConfig, base: &Path, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let b = section(&cfg.build, "build")?;
    let flow = FlowConfig {
        height_budget: cfg.caps.height_budget,
        staircase_depth: b.depth,
        ..FlowConfig::default()
    };
    let set = || -> Result<IndexSet, CliError> {
        section(&b.set, "build.set")?.load(base)
    };
    let eps = || -> Result<EpsilonSchedule, CliError> {
        let doc = section(&b.epsilon, "build.epsilon")?;
        EpsilonSchedule::from_doc(doc).map_err(|e| CliError::Config(format!("build.epsilon: {e}")))
    };
    let est = estimator(&cfg.caps);
    let (plan, report_text) = match b.kind {
        BuildKind::Staircase => {
            let growth = b.growth.clone().unwrap_or(GrowthPolicy::Linear { offset: 1 });
            let plan = build_mixing_staircase(1, b.depth, &growth)?;
            let report = BuildReport { kind: "staircase".into(), total_added: total_added_measure(&plan), ..BuildReport::default() };
            (plan, report.to_toml()?)
        }
        BuildKind::HalfRigid => {
            let (plan, report) = build_half_rigid(&set()?, &eps()?, b.segments, &est, &flow)?;
            (plan, report.to_toml()?)
        }
        BuildKind::RRigid => {
            let (plan, report) = build_r_rigid(&set()?, b.r, &eps()?, b.segments, &est, &flow)?;
            (plan, report.to_toml()?)
        }
        BuildKind::DensityZero => {
            let (plan, report) = build_rigid_for_density_zero(&set()?, &eps()?, b.segments, &est, &flow)?;
            (plan, report.to_toml()?)
        }
        BuildKind::Friedman => {
            let epsilons = b
                .epsilons
                .iter()
                .map(|s| rational("build.epsilons", s))
                .collect::<Result<Vec<_>, _>>()?;
            let config = FriedmanConfig::new(epsilons, b.t.clone());
            let (plan, report) = build_friedman_m_tower(&set()?, &config, b.segments)?;
            let text = toml::to_string(&report).map_err(|e| CliError::Io(e.to_string()))?;
            (plan, text)
        }
    };
    out.write_document("plan.toml", &plan.to_toml()?)?;
    out.write_document("build_report.toml", &report_text)?;
    let heights = plan.heights();
    Ok(Outcome::ok(format!(
        "{} stages, {} rigid times, final height {}",
        plan.len(),
        plan.rigid_times.len(),
        heights.last().expect("column 0 always exists")
    )))
}

fn load_plan(path: &Path, base: &Path) -> Result<ConstructionPlan, CliError> {
    let path = base.join(path);
    let plan = ConstructionPlan::from_toml(&read(&path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    plan.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(plan)
}

fn realize_plan(plan: &ConstructionPlan, depth: Option<usize>, caps: &Caps) -> Result<TowerRealization, CliError> {
    let depth = depth.unwrap_or(plan.len());
    if depth > plan.len() {
        return Err(CliError::Config(format!("depth {depth} exceeds the plan's {} stages", plan.len())));
    }
    Ok(realize_with_budget(plan, depth, caps.realize_budget)?)
}

#[derive(Serialize)]
struct RealizeSummary {
    depth: usize,
    heights: Vec<u64>,
    level_width: String,
    total_measure: String,
    remainder_measure: String,
    plan_measure: String,
}

pub fn realize(cfg: &RunConfig, base: &Path, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let r = section(&cfg.realize, "realize")?;
    let plan = load_plan(&r.plan, base)?;
    let real = realize_plan(&plan, r.depth, &cfg.caps)?;
    let summary = RealizeSummary {
        depth: real.depth(),
        heights: real.heights().to_vec(),
        level_width: format_rational(real.level_width()),
        total_measure: format_rational(real.total_measure()),
        remainder_measure: format_rational(real.remainder_measure()),
        plan_measure: format_rational(&real.plan_measure()),
    };
    out.write_summary("realization.toml", &summary)?;
    Ok(Outcome::ok(format!("depth {} height {}", real.depth(), real.height())))
}

fn levels(spec: &LevelsSpec) -> LevelSet {
    LevelSet::from_runs(spec.stage, spec.runs.iter().map(|&[a, b]| (a, b)))
}

#[derive(Serialize)]
struct AnalyzeSummary {
    depth: usize,
    height: u64,
    vacuous: bool,
    #[serde(flatten)]
    sweep: CorrelationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_bound: Option<KBoundVerdict>,
    caps: BTreeMap<String, String>,
}

pub fn analyze(cfg: &RunConfig, base: &Path, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let s = section(&cfg.analyze, "analyze")?;
    let plan = load_plan(&s.plan, base)?;
    let real = realize_plan(&plan, s.depth, &cfg.caps)?;
    let m = s.set.load(base)?;
    let a = levels(&s.a);
    let b = s.b.as_ref().map(levels).unwrap_or_else(|| a.clone());
    let mut report = sweep(&real, &a, &b, &m, window("analyze.window", s.window)?)?;
    if let Some(f) = &s.tail_fraction {
        report = report.with_tail_fraction(rational("analyze.tail_fraction", f)?)?;
    }
    let mut warnings = Vec::new();
    if report.truncated() {
        warnings.push(format!(
            "warning: window [{}, {}] clipped to [{}, {}] by the realized height {}",
            report.requested.lo,
            report.requested.hi,
            report.window.lo,
            report.window.hi,
            real.height()
        ));
    }
    let k_bound = match &s.k {
        Some(k) if !report.is_empty() => Some(k_bound_check(&report, &rational("analyze.k", k)?)?),
        _ => None,
    };
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    out.write_csv("correlations.csv", &csv)?;
    let mut svg = Vec::new();
    report
        .write_svg(&mut svg, "worst deviation from mu(A) mu(B)")
        .map_err(|e| CliError::Io(e.to_string()))?;
    out.write_svg("decay.svg", &svg)?;
    let caps = BTreeMap::from([
        ("realize_budget".to_string(), cfg.caps.realize_budget.to_string()),
        ("depth".to_string(), real.depth().to_string()),
    ]);
    let summary = AnalyzeSummary {
        depth: real.depth(),
        height: real.height(),
        vacuous: report.is_empty(),
        sweep: report.summary(),
        k_bound: k_bound.clone(),
        caps,
    };
    out.write_summary("summary.toml", &summary)?;
    let mut message = if report.is_empty() {
        "M has no points in the window; nothing to check".to_string()
    } else {
        format!("{} correlations", report.entries.len())
    };
    let mut negative = false;
    if let Some(v) = &k_bound {
        negative = !v.holds;
        message += &format!("; tail ratio {} vs K {}", format_rational(&v.sup_ratio), format_rational(&v.k));
    }
    for w in warnings.into_iter().rev() {
        message = format!("{w}\n{message}");
    }
    Ok(Outcome { negative, message })
}

#[derive(Serialize)]
struct SpectralSummary {
    window: [i64; 2],
    coefficients: usize,
    nonzero: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<SpectralVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaussian: Option<GaussianSummary>,
}

#[derive(Serialize)]
struct GaussianSummary {
    length: usize,
    repair: f64,
    lags: Vec<LagCheck>,
}

#[derive(Serialize)]
struct LagCheck {
    t: usize,
    exact: String,
    empirical: f64,
    standard_error: f64,
}

pub fn spectral(cfg: &RunConfig, base: &Path, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let s = section(&cfg.spectral, "spectral")?;
    let sigma = s.measure.load(base)?;
    let w = window("spectral.window", s.window)?;
    let width = w.len();
    if width > cfg.caps.realize_budget {
        return Err(rigidmix::Error::Budget {
            what: "coefficient window",
            value: width.to_string(),
            budget: cfg.caps.realize_budget.to_string(),
        }
        .into());
    }
    let mut csv = String::from("m,re_num,re_den,im_num,im_den,word_length\n");
    let mut nonzero = 0;
    for m in w.lo..=w.hi {
        let c = fourier_coefficient(&sigma, m);
        let len = sigma.word_length(m);
        if len.is_some() {
            nonzero += 1;
        }
        csv += &format!(
            "{m},{},{},{},{},{}\n",
            c.re.numer(),
            c.re.denom(),
            c.im.numer(),
            c.im.denom(),
            len.map(|l| l.to_string()).unwrap_or_default()
        );
    }
    out.write_csv("coefficients.csv", csv.as_bytes())?;
    let verdict = match &s.along {
        Some(src) => Some(mixing_verdict_along(&sigma, &src.load(base)?, w)?),
        None => None,
    };
    let gaussian = match s.gaussian_length {
        Some(n) if n > 0 => Some(gaussian_run(&sigma, n, &s.lags, cfg.seed, out)?),
        _ => None,
    };
    let summary = SpectralSummary { window: s.window, coefficients: width as usize, nonzero, verdict, gaussian };
    out.write_summary("spectral.toml", &summary)?;
    let mut message = format!("{width} coefficients, {nonzero} nonzero");
    let mut negative = false;
    if let Some(v) = &summary.verdict {
        negative = !v.consistent;
        message += &format!("; {} hits along M, consistent {}", v.hits.len(), v.consistent);
    }
    Ok(Outcome { negative, message })
}

fn gaussian_run(
    sigma: &SpectralMeasure,
    n: usize,
    lags: &[usize],
    seed: u64,
    out: &mut OutputDir,
) -> Result<GaussianSummary, CliError> {
    let cov = gaussian_covariance(sigma, n - 1)?;
    let sample = gaussian_sample(&cov, n, seed)?;
    let mut csv = String::from("i,value\n");
    for (i, x) in sample.values.iter().enumerate() {
        csv += &format!("{i},{x:e}\n");
    }
    out.write_csv("sample.csv", csv.as_bytes())?;
    let mut table = String::from("t,c_num,c_den,empirical,standard_error\n");
    let mut checks = Vec::new();
    for &t in lags.iter().filter(|&&t| t < n) {
        let exact = cov.get(t as i64);
        let empirical = empirical_covariance(&sample.values, t).expect("t < n");
        let se = bartlett_standard_error(&cov, t as i64, n - t);
        table += &format!("{t},{},{},{empirical:e},{se:e}\n", exact.numer(), exact.denom());
        checks.push(LagCheck { t, exact: format_rational(&exact), empirical, standard_error: se });
    }
    out.write_csv("covariance.csv", table.as_bytes())?;
    Ok(GaussianSummary { length: n, repair: sample.repair, lags: checks })
}

#[derive(Serialize)]
struct SetsSummary {
    window: [i64; 2],
    count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_violations: Option<Vec<i64>>,
}

#[derive(Serialize)]
struct WitnessSummary {
    radius: u64,
    r: u32,
    center: Option<i64>,
}

/// Violations listed in the summary; the count is always exact.
const MAX_LISTED: usize = 100;

pub fn sets(cfg: &RunConfig, base: &Path, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let s = section(&cfg.sets, "sets")?;
    let set = s.set.load(base)?;
    let w = window("sets.window", s.window)?;
    let count = set.count(w)?;
    let mut negative = false;
    let mut parts = vec![format!("{count} points in [{}, {}]", w.lo, w.hi)];
    let witness = match s.radius {
        Some(radius) => {
            let found = r_thick_witness(&set, s.r, w, radius)?;
            negative |= found.is_none();
            parts.push(match found {
                Some(x) => format!("{}-fold grid of radius {radius} at {}", s.r, x.center),
                None => format!("no {}-fold grid of radius {radius} in the window", s.r),
            });
            Some(WitnessSummary { radius, r: s.r, center: found.map(|x| x.center) })
        }
        None => None,
    };
    let factor_violations = match s.factor {
        Some(f) => {
            let v = doubling_free_check(&set, w, f)?;
            negative |= !v.is_empty();
            parts.push(format!("{} points k with {f} k also in the set", v.len()));
            Some(v.into_iter().take(MAX_LISTED).collect())
        }
        None => None,
    };
    out.write_summary("sets.toml", &SetsSummary { window: s.window, count, witness, factor_violations })?;
    Ok(Outcome { negative, message: parts.join("; ") })
}
