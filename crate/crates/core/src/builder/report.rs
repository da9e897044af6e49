use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::{serde_biguint, serde_biguint_vec, serde_rational, Rational};

/// One uniform-Cesaro plus number-approximation substage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstageRecord {
    pub p: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    /// Cut value the substage started from.
    pub alpha: u64,
    /// Staircase stages pushed before the Cesaro horizon was found.
    pub uc_stages: usize,
    pub uc_horizon: u64,
    pub rho: u64,
    /// Column where the constant-cut segment starts.
    pub j: usize,
    /// Column whose adjusted height approximates `k`.
    pub n: usize,
    #[serde(with = "serde_biguint")]
    pub k: BigUint,
    pub margin: u64,
    pub mask: String,
    #[serde(with = "serde_biguint")]
    pub height: BigUint,
}

/// A round that ended in a rigid step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub i: usize,
    pub r: u32,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    /// Substage whose target was used.
    pub p: usize,
    #[serde(with = "serde_biguint")]
    pub k: BigUint,
    pub margin: u64,
    /// Height of the approximating column before padding.
    #[serde(with = "serde_biguint")]
    pub height: BigUint,
    #[serde(with = "serde_biguint")]
    pub pad: BigUint,
    #[serde(with = "serde_rational")]
    pub pad_proportion: Rational,
    pub mixing_horizon: u64,
    /// Stage that cuts the padded column into `r + 1` copies.
    pub rigid_stage: usize,
    #[serde(with = "serde_biguint_vec")]
    pub times: Vec<BigUint>,
}

/// Mass added by one stage against the mass of the column it acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageMeasure {
    pub stage: usize,
    /// Substage the stage belongs to, 0 before the first one.
    pub p: usize,
    #[serde(with = "serde_rational")]
    pub added: Rational,
    #[serde(with = "serde_rational")]
    pub proportion: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildReport {
    pub kind: String,
    pub substages: Vec<SubstageRecord>,
    pub rounds: Vec<RoundRecord>,
    pub ledger: Vec<StageMeasure>,
    #[serde(with = "serde_rational")]
    pub total_added: Rational,
    /// Estimator caps and builder settings the plan depends on.
    pub caps: BTreeMap<String, String>,
}

impl BuildReport {
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}
