use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rigidmix::builder::{EpsilonDoc, GrowthPolicy};
use rigidmix::sets::IndexSet;
use rigidmix::spectral::SpectralMeasure;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything a run depends on. The effective config (file plus flags) is what gets hashed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build: Option<BuildSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realize: Option<RealizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<SetsSection>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest progression step in the uniform Cesaro supremum.
    pub q_cap: u64,
    /// Mixing horizons are verified up to the continued height over this divisor.
    pub l_window_divisor: u64,
    /// Largest column a builder may produce.
    pub height_budget: u64,
    /// Largest column a realization may hold in memory.
    pub realize_budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            q_cap: 64,
            l_window_divisor: 16,
            height_budget: 1_000_000_000,
            realize_budget: rigidmix::tower::DEFAULT_HEIGHT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BuildKind {
    Staircase,
    HalfRigid,
    RRigid,
    DensityZero,
    Friedman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildSection {
    pub kind: BuildKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<Source<IndexSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonDoc>,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "one")]
    pub r: u32,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthPolicy>,
    /// Friedman rounds: one `epsilon` and one `t` per round.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<u64>,
}

fn default_segments() -> usize {
    2
}

fn one() -> u32 {
    1
}

fn default_depth() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizeSection {
    pub plan: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

/// Levels of one column as half-open runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsSpec {
    pub stage: usize,
    pub runs: Vec<[u64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub plan: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub set: Source<IndexSet>,
    pub window: [i64; 2],
    pub a: LevelsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<LevelsSpec>,
    /// `K` for the tail bound `mu(T^n A ∩ B) <= K mu(A) mu(B)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub measure: Source<SpectralMeasure>,
    pub window: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub along: Option<Source<IndexSet>>,
    /// Sample length of the associated Gaussian sequence; no sample when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsSection {
    pub set: Source<IndexSet>,
    pub window: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<u64>,
    #[serde(default = "one")]
    pub r: u32,
    /// Checks that `k` in the set forces `factor * k` out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<i64>,
}

/// An input given inline or as a path to a TOML file holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: Clone + for<'de> Deserialize<'de>> Source<T> {
    pub fn load(&self, base: &Path) -> Result<T, CliError> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => {
                let path = base.join(p);
                let text = read(&path)?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        toml::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the effective config in canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        let mut s = String::with_capacity(64);
        for b in digest {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.caps;
        for (name, v) in [
            ("caps.q_cap", c.q_cap),
            ("caps.l_window_divisor", c.l_window_divisor),
            ("caps.height_budget", c.height_budget),
            ("caps.realize_budget", c.realize_budget),
        ] {
            if v == 0 {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        let windows = [
            ("analyze.window", self.analyze.as_ref().map(|s| s.window)),
            ("spectral.window", self.spectral.as_ref().map(|s| s.window)),
            ("sets.window", self.sets.as_ref().map(|s| s.window)),
        ];
        for (name, w) in windows {
            if let Some([lo, hi]) = w {
                if lo > hi {
                    return Err(CliError::Config(format!("{name} = [{lo}, {hi}] is empty")));
                }
            }
        }
        Ok(())
    }
}

/// `"lo,hi"` into a window.
pub fn parse_window(s: &str) -> Result<[i64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok([lo, hi])
}
