//! Finite sequential teams: spaces, kernels, costs, policies and direct
//! expected-cost evaluation.

mod eval;
mod policy;
mod recall;
mod team;
mod types;

pub use eval::expected_cost;
pub use policy::{
    enumerate_stage_policies, AnyPolicy, DeterministicPolicy, Policy, PolicyStage, RandomizedPolicy, RandomizedStage,
    StageAction, StagePolicies, StageRule, DEFAULT_STAGE_POLICY_CAP,
};
pub use recall::{lift_deterministic, lift_randomized, perfect_recall_expansion, DEFAULT_TABLE_CAP};
pub use team::{DecisionMaker, TeamSpec, ValidationReport, Violation, ViolationKind};
pub use types::{CostTable, Distribution, FiniteSpace, Kernel, NORMALIZATION_TOL};
