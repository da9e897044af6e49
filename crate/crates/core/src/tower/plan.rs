use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, rat_int, Rational};

/// One cutting-and-stacking step: cut the column into `cuts` subcolumns of
/// equal width, put `spacers[j]` new levels on subcolumn `j`, stack left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutStage {
    cuts: u64,
    spacers: Vec<u64>,
}

impl CutStage {
    pub fn new(cuts: u64, spacers: Vec<u64>) -> Result<Self> {
        if cuts == 0 {
            return Err(Error::invalid("a stage needs at least one cut"));
        }
        if spacers.len() as u64 != cuts {
            return Err(Error::invalid(format!(
                "stage with {cuts} cuts has {} spacer entries",
                spacers.len()
            )));
        }
        Ok(CutStage { cuts, spacers })
    }

    /// `j` spacers on the `j`-th subcolumn.
    pub fn staircase(cuts: u64) -> Self {
        assert!(cuts >= 1, "staircase needs at least one cut");
        CutStage {
            cuts,
            spacers: (0..cuts).collect(),
        }
    }

    /// Cut into `cuts` pieces and stack without spacers.
    pub fn flat(cuts: u64) -> Self {
        assert!(cuts >= 1, "flat stage needs at least one cut");
        CutStage {
            cuts,
            spacers: vec![0; cuts as usize],
        }
    }

    pub fn half_rigid() -> Self {
        Self::flat(2)
    }

    pub fn cuts(&self) -> u64 {
        self.cuts
    }

    pub fn spacers(&self) -> &[u64] {
        &self.spacers
    }

    pub fn spacer_total(&self) -> u64 {
        self.spacers.iter().sum()
    }

    pub fn is_staircase(&self) -> bool {
        self.spacers.iter().enumerate().all(|(j, &s)| s == j as u64)
    }

    pub fn is_half_rigid(&self) -> bool {
        self.cuts == 2 && self.spacers == [0, 0]
    }

    /// Height of the next column given the current height and the pad added on top first.
    pub fn next_height(&self, height: &BigUint, pad: &BigUint) -> BigUint {
        (height + pad) * self.cuts + self.spacer_total()
    }
}

/// A recorded time at which the construction introduced rigidity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RigidTime {
    pub stage: usize,
    pub time: BigUint,
}

/// Symbolic recipe for a rank-one transformation.
///
/// Stage `k` turns column `k` (height `h_k`) into column `k + 1`. A pad at
/// stage `k` is a run of spacer levels put on top of the whole of column `k`
/// before it is cut, so each subcolumn carries it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionPlan {
    pub initial_height: BigUint,
    pub initial_width: Rational,
    pub stages: Vec<CutStage>,
    pub pads: BTreeMap<usize, BigUint>,
    pub rigid_times: Vec<RigidTime>,
}

impl ConstructionPlan {
    pub fn new(initial_height: impl Into<BigUint>, initial_width: Rational) -> Result<Self> {
        let initial_height = initial_height.into();
        if initial_height.is_zero() {
            return Err(Error::invalid("initial height must be positive"));
        }
        if initial_width <= Rational::zero() {
            return Err(Error::invalid("initial width must be positive"));
        }
        Ok(ConstructionPlan {
            initial_height,
            initial_width,
            stages: Vec::new(),
            pads: BTreeMap::new(),
            rigid_times: Vec::new(),
        })
    }

    /// Unit-width plan starting from a column of `h1` levels.
    pub fn unit(h1: u64) -> Self {
        Self::new(BigUint::from(h1), Rational::one()).expect("positive height")
    }

    pub fn with_stages(mut self, stages: impl IntoIterator<Item = CutStage>) -> Self {
        self.stages.extend(stages);
        self
    }

    pub fn push(&mut self, stage: CutStage) {
        self.stages.push(stage);
    }

    pub fn set_pad(&mut self, stage: usize, pad: BigUint) {
        if pad.is_zero() {
            self.pads.remove(&stage);
        } else {
            self.pads.insert(stage, pad);
        }
    }

    pub fn pad(&self, stage: usize) -> BigUint {
        self.pads.get(&stage).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Width of the levels of column `k`.
    pub fn width_at(&self, k: usize) -> Rational {
        let prod: BigUint = self.stages[..k]
            .iter()
            .fold(BigUint::one(), |acc, s| acc * s.cuts);
        &self.initial_width / rat_int(prod)
    }

    /// Heights of columns `0..=upto`.
    pub fn heights_of(&self, upto: usize) -> Result<Vec<BigUint>> {
        heights_of(self, upto)
    }

    pub fn heights(&self) -> Vec<BigUint> {
        heights_of(self, self.stages.len()).expect("full range is valid")
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(&PlanDoc::from(self))?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: PlanDoc = toml::from_str(text)?;
        doc.try_into()
    }

    /// Checks structural consistency (pads and rigid times refer to existing stages).
    pub fn validate(&self) -> Result<()> {
        if self.initial_height.is_zero() || self.initial_width <= Rational::zero() {
            return Err(Error::invalid("initial column must have positive height and width"));
        }
        if let Some((&k, _)) = self.pads.iter().find(|(&k, _)| k >= self.stages.len()) {
            return Err(Error::OutOfRange {
                index: k,
                limit: self.stages.len(),
            });
        }
        if let Some(rt) = self.rigid_times.iter().find(|r| r.stage > self.stages.len()) {
            return Err(Error::OutOfRange {
                index: rt.stage,
                limit: self.stages.len(),
            });
        }
        Ok(())
    }
}

/// `h_{k+1} = r_k (h_k + pad_k) + sum_j spacers_k[j]`, returning `h_0..=h_upto`.
pub fn heights_of(plan: &ConstructionPlan, upto: usize) -> Result<Vec<BigUint>> {
    if upto > plan.stages.len() {
        return Err(Error::OutOfRange {
            index: upto,
            limit: plan.stages.len(),
        });
    }
    let mut out = Vec::with_capacity(upto + 1);
    let mut h = plan.initial_height.clone();
    out.push(h.clone());
    for (k, stage) in plan.stages[..upto].iter().enumerate() {
        h = stage.next_height(&h, &plan.pad(k));
        out.push(h.clone());
    }
    Ok(out)
}

// ---- document form ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    initial_height: String,
    initial_width: String,
    #[serde(default)]
    stages: Vec<StageDoc>,
    #[serde(default)]
    pads: BTreeMap<String, String>,
    #[serde(default)]
    rigid_times: Vec<RigidTimeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageDoc {
    cuts: u64,
    spacers: SpacerDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpacerDoc {
    Named(String),
    List(Vec<u64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigidTimeDoc {
    stage: usize,
    time: String,
}

impl From<&ConstructionPlan> for PlanDoc {
    fn from(p: &ConstructionPlan) -> Self {
        PlanDoc {
            initial_height: p.initial_height.to_string(),
            initial_width: format_rational(&p.initial_width),
            stages: p
                .stages
                .iter()
                .map(|s| StageDoc {
                    cuts: s.cuts,
                    spacers: if s.is_staircase() {
                        SpacerDoc::Named("staircase".into())
                    } else {
                        SpacerDoc::List(s.spacers.clone())
                    },
                })
                .collect(),
            // zero-padded keys keep the text order equal to the numeric order
            pads: p
                .pads
                .iter()
                .map(|(k, v)| (format!("{k:06}"), v.to_string()))
                .collect(),
            rigid_times: p
                .rigid_times
                .iter()
                .map(|r| RigidTimeDoc {
                    stage: r.stage,
                    time: r.time.to_string(),
                })
                .collect(),
        }
    }
}

fn parse_big(s: &str, field: &str) -> Result<BigUint> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{field}: not a nonnegative integer: {s:?}")))
}

impl TryFrom<PlanDoc> for ConstructionPlan {
    type Error = Error;

    fn try_from(doc: PlanDoc) -> Result<Self> {
        let mut plan = ConstructionPlan::new(
            parse_big(&doc.initial_height, "initial_height")?,
            parse_rational(&doc.initial_width)?,
        )?;
        for (i, s) in doc.stages.into_iter().enumerate() {
            let stage = match s.spacers {
                SpacerDoc::Named(name) if name == "staircase" => {
                    if s.cuts == 0 {
                        return Err(Error::Parse(format!("stages[{i}]: cuts must be >= 1")));
                    }
                    CutStage::staircase(s.cuts)
                }
                SpacerDoc::Named(name) => {
                    return Err(Error::Parse(format!(
                        "stages[{i}].spacers: unknown form {name:?} (expected \"staircase\" or a list)"
                    )))
                }
                SpacerDoc::List(v) => CutStage::new(s.cuts, v)
                    .map_err(|e| Error::Parse(format!("stages[{i}]: {e}")))?,
            };
            plan.stages.push(stage);
        }
        for (k, v) in doc.pads {
            let idx: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("pads: bad stage key {k:?}")))?;
            plan.set_pad(idx, parse_big(&v, "pads")?);
        }
        for r in doc.rigid_times {
            plan.rigid_times.push(RigidTime {
                stage: r.stage,
                time: parse_big(&r.time, "rigid_times.time")?,
            });
        }
        plan.validate()?;
        Ok(plan)
    }
}
