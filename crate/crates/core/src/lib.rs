//! Deterministic market simulator and decision engine for skill- and
//! cost-based task outsourcing between autonomous agents.
//!
//! The library is organized around seven pieces:
//!
//! - [`model`] / [`config`] / [`lifecycle`]: shared domain types, the engine
//!   configuration and the task lifecycle state machine.
//! - [`cost`]: internal and external cost equations, dynamic pricing and
//!   EWMA cost calibration.
//! - [`reputation`]: Bayesian reliability with temporal decay and the
//!   bad-outcome probability estimates feeding the risk model.
//! - [`decision`]: epsilon-greedy exploration, skill gating,
//!   correlation-adjusted dynamic weights, TOPSIS ranking, the
//!   reservation-price check and decision confidence.
//! - [`population`] / [`sim`]: scenario-driven agent generation, Poisson
//!   task streams, market dynamics and ground-truth execution.
//! - [`metrics`]: per-run aggregates, cross-run correlations and the
//!   windowed total-variation convergence diagnostic.
//! - [`experiment`]: multi-seed experiment plans with deterministic seed
//!   derivation and per-cell summaries.
//!
//! Every random draw descends from a single 64-bit seed (see [`seeding`]);
//! identical inputs reproduce identical outputs byte for byte.

// Validation code uses `!(x > 0.0)` deliberately: unlike `x <= 0.0`, it
// also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cost;
pub mod decision;
pub mod experiment;
pub mod lifecycle;
pub mod metrics;
pub mod model;
pub mod population;
pub mod presets;
pub mod reputation;
pub mod scenario;
pub mod seeding;
pub mod sim;

pub use config::{EngineConfig, Violation};
pub use model::{
    AgentId, Archetype, Choice, ContractorProfile, CostBreakdown, DecisionRecord, HardwareSpec,
    MarketState, Task, TaskId, TaskType, WeightVector,
};
pub use scenario::ScenarioConfig;
