//! Cutting-and-stacking plans, their finite realizations, and exact column dynamics.

mod dynamics;
mod levels;
mod plan;
mod realization;

pub use dynamics::{apply_power, correlation, Correlation, CorrelationKernel};
pub use levels::LevelSet;
pub use plan::{heights_of, ConstructionPlan, CutStage, RigidTime};
pub use realization::{realize, realize_with_budget, TowerRealization, DEFAULT_HEIGHT_BUDGET};
